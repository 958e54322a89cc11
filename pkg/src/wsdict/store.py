"""The flat element array and the pair-bit codec.

The array is the only state a dictionary keeps between operations. During a
memory-movement batch it may briefly hold VACANT holes; none survive a batch.
"""

from collections.abc import Iterable
from typing import Final, Optional

from wsdict.errors import CorruptionError, UsageError
from wsdict.meters import CostMeters
from wsdict.models import Key

VACANT: Final = None


class ElementStore:
    """Owns the slot array, element comparison and slot access metering.

    All comparisons and slot writes of the dictionary go through this class
    so that the injected meters see every one of them.
    """

    def __init__(self, keys: Iterable[Key] = (), meters: Optional[CostMeters] = None) -> None:
        """Initialize the store.

        Args:
            keys: Initial slot contents, in address order
            meters: Cost meters to update, or None to disable metering
        """
        self.slots: list[Optional[Key]] = list(keys)
        self.meters = meters

    def __len__(self) -> int:
        return len(self.slots)

    def snapshot(self) -> list[Key]:
        """Return a copy of the slots.

        Raises:
            CorruptionError: If a hole is present
        """
        if VACANT in self.slots:
            raise CorruptionError("snapshot taken with holes in the array")
        return [key for key in self.slots if key is not None]

    def compare(self, a: Key, b: Key) -> int:
        """Return -1, 0 or 1 as a is less than, equal to or greater than b."""
        if self.meters is not None:
            self.meters.compare()
        return (a > b) - (a < b)

    def less(self, a: Key, b: Key) -> bool:
        if self.meters is not None:
            self.meters.compare()
        return a < b

    def read(self, address: int) -> Key:
        key = self.slots[address]
        if key is None:
            raise CorruptionError(f"read of vacant slot {address}")
        if self.meters is not None:
            self.meters.cache_touch(address)
        return key

    def write(self, address: int, key: Optional[Key]) -> None:
        self.slots[address] = key
        if self.meters is not None:
            self.meters.move()
            self.meters.cache_touch(address)

    def swap(self, a: int, b: int) -> None:
        """Exchange the contents of two slots."""
        if a == b:
            return
        slots = self.slots
        slots[a], slots[b] = slots[b], slots[a]
        if self.meters is not None:
            self.meters.move(2)
            self.meters.cache_touch(a)
            self.meters.cache_touch(b)

    def copy_range(self, src: int, dst: int, count: int) -> None:
        """Copy count slots from src to dst in order; overlapping ranges are safe."""
        if count <= 0 or src == dst:
            return
        self.slots[dst:dst + count] = self.slots[src:src + count]
        if self.meters is not None:
            self.meters.move(count)
            for address in range(dst, dst + count):
                self.meters.cache_touch(address)

    def vacate(self, lo: int, hi: int) -> None:
        """Mark slots [lo, hi) as holes."""
        if lo < hi:
            self.slots[lo:hi] = [VACANT] * (hi - lo)

    def extend(self, count: int) -> None:
        """Append count holes at the end of the array."""
        self.slots.extend([VACANT] * count)

    def truncate(self, count: int) -> None:
        """Drop count trailing slots, which must be holes."""
        if count <= 0:
            return
        tail = self.slots[-count:]
        if any(key is not None for key in tail):
            raise CorruptionError(f"truncating {count} slots that still hold keys")
        del self.slots[-count:]

    def keys(self, lo: int, hi: int) -> list[Key]:
        """Return the keys in [lo, hi) for read-only scans."""
        if self.meters is not None:
            for address in range(lo, hi):
                self.meters.cache_touch(address)
        out = self.slots[lo:hi]
        if VACANT in out:
            raise CorruptionError(f"scan of [{lo}, {hi}) crosses a hole")
        return [key for key in out if key is not None]

    def check_no_holes(self) -> None:
        if VACANT in self.slots:
            raise CorruptionError(f"hole at address {self.slots.index(VACANT)} after a batch")


class PairBitCodec:
    """Encodes an unsigned integer in the order of element pairs.

    Pair j occupies slots start+2j and start+2j+1. It stores bit 0 when the
    smaller element comes first. Pair 0 holds the least significant bit.
    """

    def __init__(self, store: ElementStore, start: int, width: int) -> None:
        """Initialize the codec over 2*width slots.

        Args:
            store: Element store holding the region
            start: Address of the first slot of the region
            width: Number of pairs, i.e. the number of bits available
        """
        if start < 0 or start + 2 * width > len(store):
            raise UsageError(f"codec region [{start}, {start + 2 * width}) outside the array")
        self.store = store
        self.start = start
        self.width = width

    def _check(self, offset: int, count: int) -> None:
        if offset < 0 or count < 0 or offset + count > self.width:
            raise UsageError(f"bits [{offset}, {offset + count}) outside codec width {self.width}")

    def _bit(self, pair: int) -> int:
        address = self.start + 2 * pair
        return int(self.store.less(self.store.read(address + 1), self.store.read(address)))

    def read_bits(self, offset: int, count: int) -> int:
        """Read count bits starting at bit offset.

        Raises:
            UsageError: If the bit range exceeds the codec width
        """
        self._check(offset, count)
        value = 0
        for j in range(count):
            value |= self._bit(offset + j) << j
        return value

    def write_bits(self, offset: int, count: int, value: int) -> None:
        """Write value into count bits starting at bit offset.

        Only swaps within pairs, so the region keeps the same elements.

        Raises:
            UsageError: If the bit range exceeds the codec width or value does not fit
        """
        self._check(offset, count)
        if value < 0 or value >> count:
            raise UsageError(f"value {value} does not fit in {count} bits")
        for j in range(count):
            if self._bit(offset + j) != (value >> j) & 1:
                address = self.start + 2 * (offset + j)
                self.store.swap(address, address + 1)
