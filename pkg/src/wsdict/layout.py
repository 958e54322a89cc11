"""Block layout: where each sub-structure of each block lives in the array.

Blocks B_0..B_m are laid out left to right, each as D, A, R, W, H, C, G.
A full block keeps the sizes of A..G in the first slots of its D array,
encoded in pair order. The top block may instead be compact: it then holds
only D_m (plus G_0 = [min, max] when m = 0), and its size is whatever remains
of the array.
"""

from __future__ import annotations

import logging
from typing import Optional

from wsdict.constants import SMALL_FORM_LIMIT
from wsdict.errors import CorruptionError
from wsdict.models import ENCODED, Parameters, Structure
from wsdict.moveable import SortedRangeDictionary
from wsdict.store import ElementStore, PairBitCodec

logger = logging.getLogger(__name__)


class BlockLayout:
    """Decoded view of blocks B_0..B_m and their sub-structure extents.

    Between memory-movement batches the blocks tile [0, n). Within a batch a
    block's start may drift so that holes sit between blocks.
    """

    def __init__(self, params: Parameters, starts: list[int], sizes: list[list[int]]) -> None:
        self.params = params
        self.starts = starts
        self.sizes = sizes

    @property
    def top(self) -> int:
        """Index m of the highest block, -1 when the dictionary is empty."""
        return len(self.sizes) - 1

    def copy(self) -> BlockLayout:
        return BlockLayout(self.params, list(self.starts), [list(row) for row in self.sizes])

    def size(self, level: int, structure: Structure) -> int:
        if level > self.top:
            return 0
        return self.sizes[level][structure]

    def block_size(self, level: int) -> int:
        return sum(self.sizes[level]) if level <= self.top else 0

    def start(self, level: int) -> int:
        return self.starts[level]

    def end(self, level: int) -> int:
        """Exclusive end address of block `level`."""
        return self.starts[level] + self.block_size(level)

    def extent(self, level: int, structure: Structure) -> tuple[int, int]:
        """Return (first address, size) of one sub-structure."""
        row = self.sizes[level]
        return self.starts[level] + sum(row[:structure]), row[structure]

    @property
    def total(self) -> int:
        return sum(self.block_size(level) for level in range(self.top + 1))

    def view(self, store: ElementStore, level: int, structure: Structure) -> SortedRangeDictionary:
        """Return a moveable-dictionary view of a sub-structure other than D."""
        lo, size = self.extent(level, structure)
        return SortedRangeDictionary(store, lo, size)

    def hc(self, level: int) -> int:
        return self.size(level, Structure.H) + self.size(level, Structure.C)

    def slack(self, level: int) -> int:
        """Return c_i, the deviation of |H_i|+|C_i| from 4c * capacity(i)."""
        return self.hc(level) - self.params.hc_target(level)

    def is_compact(self, level: int) -> bool:
        """True when the block holds nothing outside D (and G_0 = {min, max})."""
        row = self.sizes[level]
        spare_guards = 2 if level == 0 else 0
        return not any(row[s] for s in ENCODED[:-1]) and row[Structure.G] <= spare_guards

    def add_level(self) -> int:
        """Append an empty block after the current top and return its index."""
        start = self.end(self.top) if self.top >= 0 else 0
        self.starts.append(start)
        self.sizes.append([0] * len(Structure))
        logger.debug("created block %d at address %d", self.top, start)
        return self.top

    def drop_empty_top(self) -> None:
        while self.top > 0 and self.block_size(self.top) == 0:
            logger.debug("dropped empty block %d", self.top)
            self.starts.pop()
            self.sizes.pop()

    def retile(self) -> None:
        """Recompute starts as the prefix sums of block sizes."""
        address = 0
        for level in range(self.top + 1):
            self.starts[level] = address
            address += self.block_size(level)


def _read_sizes(store: ElementStore, params: Parameters, level: int, start: int) -> list[int]:
    width = params.field_width(level)
    codec = PairBitCodec(store, start, params.encoding_slots(level) // 2)
    row = [0] * len(Structure)
    row[Structure.D] = params.d_width(level)
    for index, structure in enumerate(ENCODED):
        row[structure] = codec.read_bits(index * width, width)
    return row


def decode_layout(store: ElementStore, params: Parameters, n: Optional[int] = None) -> BlockLayout:
    """Decode the block layout from the array.

    Args:
        store: Element store holding a structurally valid dictionary
        params: Dictionary parameters
        n: Element count; defaults to the array length

    Returns:
        The decoded layout

    Raises:
        CorruptionError: If the encoded sizes do not add up to n
    """
    n = len(store) if n is None else n
    starts: list[int] = []
    sizes: list[list[int]] = []
    if n == 0:
        return BlockLayout(params, starts, sizes)
    if n == 1:
        row = [0] * len(Structure)
        row[Structure.G] = 1
        return BlockLayout(params, [0], [row])

    address = 0
    level = 0
    while address < n:
        remaining = n - address
        width = params.d_width(level)
        row = [0] * len(Structure)
        if level == 0 and (remaining - 2 <= width or n <= SMALL_FORM_LIMIT):
            row[Structure.D] = remaining - 2
            row[Structure.G] = 2
        elif level > 0 and remaining <= width:
            row[Structure.D] = remaining
        else:
            row = _read_sizes(store, params, level, address)
            if sum(row) > remaining:
                raise CorruptionError(
                    f"block {level} claims {sum(row)} elements but only {remaining} remain"
                )
            if level == 0 and row[Structure.G] < 2:
                raise CorruptionError("block 0 must hold min(P) and max(P) in G_0")
        starts.append(address)
        sizes.append(row)
        address += sum(row)
        level += 1
    if address != n:
        raise CorruptionError(f"decoded {address} elements, expected {n}")
    return BlockLayout(params, starts, sizes)


def encode_sizes(store: ElementStore, layout: BlockLayout, level: int) -> bool:
    """Write the sizes of A..G of a full block into its D array.

    Returns:
        True if the block is full and its sizes were written
    """
    params = layout.params
    slots = params.encoding_slots(level)
    if layout.is_compact(level) or layout.size(level, Structure.D) < slots:
        return False
    width = params.field_width(level)
    codec = PairBitCodec(store, layout.start(level), slots // 2)
    for index, structure in enumerate(ENCODED):
        codec.write_bits(index * width, width, layout.size(level, structure))
    return True
