"""Memory management: the only code that relocates elements between structures.

internal_movement changes the sub-structures of one block and slides the
structures to their right; external_movement groups the internal moves of
several blocks and shifts the blocks in between so the array stays
contiguous.
"""

import logging
from collections.abc import Sequence
from typing import Optional

from wsdict.errors import CorruptionError, UsageError
from wsdict.layout import BlockLayout, encode_sizes
from wsdict.models import ExternalMove, InternalMove, Key, Structure
from wsdict.moveable import SortedRangeDictionary
from wsdict.store import ElementStore

logger = logging.getLogger(__name__)

# (action, level, structure, address, key)
SlotEvent = tuple[str, int, str, int, Key]


class MemoryManager:
    """Applies internal and external move batches to a store and its layout."""

    def __init__(
        self,
        store: ElementStore,
        layout: BlockLayout,
        slot_trace: Optional[list[SlotEvent]] = None,
    ) -> None:
        """Initialize the manager.

        Args:
            store: Element store to mutate
            layout: Layout to keep in step with the store
            slot_trace: Optional list receiving one event per element placed or removed
        """
        self.store = store
        self.layout = layout
        self.slot_trace = slot_trace

    # ------------------------------------------------------------------
    # Sliding primitives
    # ------------------------------------------------------------------

    def _free_after(self, level: int) -> int:
        layout = self.layout
        nxt = layout.start(level + 1) if level < layout.top else len(self.store)
        return nxt - layout.end(level)

    def _slide(self, level: int, structure: Structure, offset: int) -> None:
        lo, size = self.layout.extent(level, structure)
        if offset == 0 or size == 0:
            return
        if structure is Structure.D:
            # D is a plain array; an in-order copy keeps its encoded pairs intact.
            self.store.copy_range(lo, lo + offset, size)
            if offset > 0:
                self.store.vacate(lo, min(lo + size, lo + offset))
            else:
                self.store.vacate(max(lo, lo + size + offset), lo + size)
        else:
            SortedRangeDictionary(self.store, lo, size).slide(offset)

    def _move_block(self, level: int, new_start: int) -> None:
        offset = new_start - self.layout.start(level)
        if offset == 0:
            return
        order = reversed(Structure) if offset > 0 else iter(Structure)
        for structure in order:
            self._slide(level, structure, offset)
        self.layout.starts[level] = new_start

    def _pack(self, first: int, last: int, end: int) -> None:
        """Place blocks first..last back to back so that block `last` ends at `end`."""
        layout = self.layout
        targets: dict[int, int] = {}
        address = end
        for level in range(last, first - 1, -1):
            address -= layout.block_size(level)
            targets[level] = address
        for level in range(first, last + 1):
            if targets[level] < layout.start(level):
                self._move_block(level, targets[level])
        for level in range(last, first - 1, -1):
            if targets[level] > layout.start(level):
                self._move_block(level, targets[level])

    # ------------------------------------------------------------------
    # Internal movement
    # ------------------------------------------------------------------

    def _record(self, action: str, level: int, structure: Structure, address: int, key: Key) -> None:
        if self.slot_trace is not None:
            self.slot_trace.append((action, level, structure.name, address, key))

    def _edit_array(self, level: int, move: InternalMove) -> int:
        """Apply a move to D: removal swaps with the last slot, insertion appends."""
        lo, size = self.layout.extent(level, Structure.D)
        store = self.store
        for key in move.s_out:
            members = store.keys(lo, lo + size)
            if key not in members:
                raise UsageError(f"key {key!r} not in D_{level}")
            address = lo + members.index(key)
            store.swap(address, lo + size - 1)
            store.vacate(lo + size - 1, lo + size)
            size -= 1
            self._record("out", level, Structure.D, address, key)
        for key in move.s_in:
            if store.slots[lo + size] is not None:
                raise UsageError(f"no free slot after D_{level}")
            store.write(lo + size, key)
            self._record("in", level, Structure.D, lo + size, key)
            size += 1
        return size

    def _edit_dictionary(self, level: int, move: InternalMove) -> int:
        lo, size = self.layout.extent(level, move.gamma)
        view = SortedRangeDictionary(self.store, lo, size)
        for key in move.s_out:
            if self.slot_trace is not None:
                address = view.search(key)
                self._record("out", level, move.gamma, -1 if address is None else address, key)
            view.delete_right(key)
        for key in move.s_in:
            view.insert_right(key)
            if self.slot_trace is not None:
                address = view.search(key)
                self._record("in", level, move.gamma, -1 if address is None else address, key)
        return view.size

    def _apply(self, level: int, move: InternalMove) -> None:
        delta = move.delta
        later = [s for s in Structure if s > move.gamma]
        if delta > 0:
            free = self._free_after(level)
            if free < delta:
                raise UsageError(f"block {level} needs {delta} free slots, has {free}")
            for structure in reversed(later):
                self._slide(level, structure, delta)
        if move.gamma is Structure.D:
            new_size = self._edit_array(level, move)
        else:
            new_size = self._edit_dictionary(level, move)
        if delta < 0:
            for structure in later:
                self._slide(level, structure, delta)
        self.layout.sizes[level][move.gamma] = new_size

    def internal_movement(self, level: int, moves: Sequence[InternalMove]) -> None:
        """Apply a batch of internal moves to one block.

        Shrinking moves run first (ascending gamma) so that their holes are
        available to the growing moves that follow (ascending gamma). After the
        batch the block's net growth has been taken from the free slots right
        after it and its net shrinkage left as holes right after it.

        Args:
            level: Block index
            moves: Moves sorted by gamma in the order D, A, R, W, H, C, G

        Raises:
            UsageError: If the batch is unsorted or the block runs out of room
        """
        if level < 0 or level > self.layout.top:
            raise UsageError(f"no block {level}")
        gammas = [move.gamma for move in moves]
        if gammas != sorted(gammas):
            raise UsageError(f"internal moves for block {level} not sorted by structure")
        for move in [m for m in moves if m.delta <= 0] + [m for m in moves if m.delta > 0]:
            self._apply(level, move)

    def promote_arrivals(self, level: int) -> None:
        """Rename R to W and A to R, leaving A empty. No element moves.

        Raises:
            UsageError: If W is not empty
        """
        row = self.layout.sizes[level]
        if row[Structure.W]:
            raise UsageError(f"cannot rename block {level} with {row[Structure.W]} waiting points")
        row[Structure.W] = row[Structure.R]
        row[Structure.R] = row[Structure.A]
        row[Structure.A] = 0
        encode_sizes(self.store, self.layout, level)
        logger.debug("renamed A->R->W in block %d", level)

    # ------------------------------------------------------------------
    # External movement
    # ------------------------------------------------------------------

    def external_movement(self, batch: Sequence[ExternalMove]) -> None:
        """Apply internal moves on several blocks and keep the array contiguous.

        Shrinking blocks are processed first, blocks from the first touched one
        up to gamma_end are packed to end at p_end, and a left-to-right sweep
        then aligns each block with its predecessor, applying the growing moves
        on the way.

        Args:
            batch: External moves sorted strictly by block index

        Raises:
            UsageError: If the batch is unsorted or names a missing block
            CorruptionError: If the result does not tile the array
        """
        if not batch:
            return
        levels = [move.gamma for move in batch]
        if any(a >= b for a, b in zip(levels, levels[1:])):
            raise UsageError(f"external moves not strictly sorted by block: {levels}")
        layout = self.layout
        if levels[0] < 0 or levels[-1] > layout.top:
            raise UsageError(f"external moves name blocks {levels}, top is {layout.top}")

        meters = self.store.meters
        moves_before = meters.element_moves if meters is not None else 0
        ops_before = meters.dictionary_ops if meters is not None else 0
        total = sum(move.delta for move in batch)
        first = levels[0]
        gamma_end = levels[-1] if total == 0 else layout.top
        p_end = layout.end(gamma_end) + total
        start_first = layout.start(first)

        if total > 0:
            self.store.extend(total)
        for move in batch:
            if move.delta <= 0:
                self.internal_movement(move.gamma, move.moves)
        self._pack(first, gamma_end, p_end)

        growing = {move.gamma: move for move in batch if move.delta > 0}
        if growing:
            cursor = start_first
            for level in range(first, gamma_end + 1):
                self._move_block(level, cursor)
                if level in growing:
                    self.internal_movement(level, growing[level].moves)
                cursor = layout.end(level)
        if total < 0:
            self.store.truncate(-total)

        self._check_tiling()
        for level in levels:
            encode_sizes(self.store, layout, level)
        layout.drop_empty_top()

        if meters is not None:
            params = layout.params
            meters.record_batch(
                meters.element_moves - moves_before,
                meters.dictionary_ops - ops_before,
                1 << (gamma_end + params.k),
            )
        logger.debug(
            "external movement on blocks %s: delta=%d gamma_end=%d", levels, total, gamma_end
        )

    def _check_tiling(self) -> None:
        layout = self.layout
        address = 0
        for level in range(layout.top + 1):
            if layout.start(level) != address:
                raise CorruptionError(
                    f"block {level} starts at {layout.start(level)}, expected {address}"
                )
            address += layout.block_size(level)
        if address != len(self.store):
            raise CorruptionError(f"blocks cover {address} slots, array has {len(self.store)}")
        self.store.check_no_holes()
