"""Moveable dictionaries: sorted sets laid out in a contiguous address range.

A moveable dictionary owns the addresses [lo, lo+size). It grows or shrinks by
one slot at either end per update, and can therefore be moved one slot at a
time by deleting an element at one end and re-inserting it at the other.
"""

from abc import ABC, abstractmethod
from typing import Optional

from wsdict.errors import UsageError
from wsdict.models import Key
from wsdict.store import ElementStore


class MoveableDictionary(ABC):
    """Interface of a moveable dictionary over a region of an ElementStore."""

    def __init__(self, store: ElementStore, lo: int, size: int) -> None:
        """Initialize a view.

        Args:
            store: Element store holding the region
            lo: First address of the region
            size: Number of elements, occupying [lo, lo+size)
        """
        if size < 0:
            raise UsageError(f"negative dictionary size {size}")
        self.store = store
        self.lo = lo
        self.size = size

    @property
    def hi(self) -> int:
        """Last address of the region (lo - 1 when empty)."""
        return self.lo + self.size - 1

    def _charge(self) -> None:
        if self.store.meters is not None:
            self.store.meters.charge(self.size)

    @abstractmethod
    def insert_left(self, e: Key) -> None:
        """Insert e; the region becomes [lo-1, hi]."""

    @abstractmethod
    def insert_right(self, e: Key) -> None:
        """Insert e; the region becomes [lo, hi+1]."""

    @abstractmethod
    def delete_left(self, e: Key) -> None:
        """Delete e; the region becomes [lo+1, hi]."""

    @abstractmethod
    def delete_right(self, e: Key) -> None:
        """Delete e; the region becomes [lo, hi-1]."""

    @abstractmethod
    def search(self, e: Key) -> Optional[int]:
        """Return the address holding e, or None."""

    @abstractmethod
    def predecessor(self, e: Key) -> Optional[int]:
        """Return the address of max{x < e}, or None."""

    @abstractmethod
    def successor(self, e: Key) -> Optional[int]:
        """Return the address of min{x > e}, or None."""

    @abstractmethod
    def first(self) -> Optional[int]:
        """Return the address of the smallest element, or None when empty."""

    @abstractmethod
    def last(self) -> Optional[int]:
        """Return the address of the largest element, or None when empty."""

    def members(self) -> list[Key]:
        return self.store.keys(self.lo, self.lo + self.size)

    def slide(self, offset: int) -> None:
        """Move the whole region by offset slots.

        The destination slots beyond the current region must be caller-owned
        scratch. Each one-slot step is a delete at one end plus an insert at
        the other.
        """
        for _ in range(abs(offset)):
            if self.size == 0:
                self.lo += 1 if offset > 0 else -1
                continue
            if offset < 0:
                address = self.last()
                assert address is not None
                key = self.store.read(address)
                self.delete_right(key)
                self.insert_left(key)
            else:
                address = self.first()
                assert address is not None
                key = self.store.read(address)
                self.delete_left(key)
                self.insert_right(key)


class SortedRangeDictionary(MoveableDictionary):
    """Reference moveable dictionary: the region is kept sorted ascending.

    Queries are binary searches; updates shift the elements between the
    update position and the growing or shrinking end.
    """

    def _lower(self, e: Key, strict: bool) -> int:
        """Return the number of elements < e (or <= e when strict)."""
        store = self.store
        lo, hi = 0, self.size
        while lo < hi:
            mid = (lo + hi) // 2
            probe = store.read(self.lo + mid)
            if store.less(probe, e) or (strict and not store.less(e, probe)):
                lo = mid + 1
            else:
                hi = mid
        return lo

    def search(self, e: Key) -> Optional[int]:
        self._charge()
        index = self._lower(e, strict=False)
        if index < self.size and self.store.compare(self.store.read(self.lo + index), e) == 0:
            return self.lo + index
        return None

    def predecessor(self, e: Key) -> Optional[int]:
        self._charge()
        index = self._lower(e, strict=False)
        return self.lo + index - 1 if index > 0 else None

    def successor(self, e: Key) -> Optional[int]:
        self._charge()
        index = self._lower(e, strict=True)
        return self.lo + index if index < self.size else None

    def first(self) -> Optional[int]:
        return self.lo if self.size else None

    def last(self) -> Optional[int]:
        return self.hi if self.size else None

    def _require_absent(self, e: Key) -> int:
        index = self._lower(e, strict=False)
        if index < self.size and self.store.compare(self.store.read(self.lo + index), e) == 0:
            raise UsageError(f"key {e!r} already in dictionary at [{self.lo}, {self.hi}]")
        return index

    def _require_present(self, e: Key) -> int:
        address = self.search(e)
        if address is None:
            raise UsageError(f"key {e!r} not in dictionary at [{self.lo}, {self.hi}]")
        return address

    def insert_left(self, e: Key) -> None:
        self._charge()
        index = self._require_absent(e)
        self.store.copy_range(self.lo, self.lo - 1, index)
        self.store.write(self.lo - 1 + index, e)
        self.lo -= 1
        self.size += 1

    def insert_right(self, e: Key) -> None:
        self._charge()
        index = self._require_absent(e)
        at = self.lo + index
        self.store.copy_range(at, at + 1, self.size - index)
        self.store.write(at, e)
        self.size += 1

    def delete_left(self, e: Key) -> None:
        address = self._require_present(e)
        self.store.copy_range(self.lo, self.lo + 1, address - self.lo)
        self.store.vacate(self.lo, self.lo + 1)
        self.lo += 1
        self.size -= 1

    def delete_right(self, e: Key) -> None:
        address = self._require_present(e)
        self.store.copy_range(address + 1, address, self.hi - address)
        self.store.vacate(self.hi, self.hi + 1)
        self.size -= 1

    def slide(self, offset: int) -> None:
        # Same result as the generic one-slot steps, done as one block copy;
        # the charged cost still counts two dictionary operations per slot.
        if offset == 0:
            return
        if self.store.meters is not None:
            for _ in range(2 * abs(offset)):
                self.store.meters.charge(self.size)
        old_lo, old_end = self.lo, self.lo + self.size
        self.store.copy_range(old_lo, old_lo + offset, self.size)
        new_lo, new_end = old_lo + offset, old_end + offset
        if offset > 0:
            self.store.vacate(old_lo, min(old_end, new_lo))
        else:
            self.store.vacate(max(old_lo, new_end), old_end)
        self.lo = new_lo
