"""Cost meters for comparisons, element moves, charged cost and cache lines.

Meters are owned by the harness and injected into a dictionary; a dictionary
built without meters does no counting at all.
"""

import math
from dataclasses import dataclass, field
from typing import TypedDict


class OpCost(TypedDict):
    """Per-operation meter readings."""

    comparisons: int
    element_moves: int
    charged_cost: float
    cache_lines: int
    levels_touched: int


@dataclass
class CostMeters:
    """Cumulative and per-operation cost counters.

    The cache-line counter is a simplification of an LRU cache: it counts the
    distinct lines (address // b_sim) touched during one operation.
    """

    b_sim: int = 64
    comparisons: int = 0
    element_moves: int = 0
    charged_cost: float = 0.0
    cache_lines: int = 0
    shift_up_stalls: int = 0
    dictionary_ops: int = 0
    batches: int = 0
    max_batch_moves: int = 0
    max_batch_ratio: float = 0.0
    max_batch_ops: int = 0
    max_batch_op_ratio: float = 0.0
    _lines: set[int] = field(default_factory=set, repr=False)
    _levels: int = field(default=0, repr=False)
    _start: tuple[int, int, float] = field(default=(0, 0, 0.0), repr=False)

    def compare(self) -> None:
        self.comparisons += 1

    def move(self, count: int = 1) -> None:
        self.element_moves += count

    def charge(self, size: int) -> None:
        """Charge one moveable-dictionary operation on a dictionary of this size."""
        self.dictionary_ops += 1
        self.charged_cost += math.log2(size + 1)

    def cache_touch(self, address: int) -> None:
        """Record a slot access for the per-operation distinct line count."""
        self._lines.add(address // self.b_sim)

    def touch_level(self, level: int) -> None:
        if level > self._levels:
            self._levels = level

    def begin_op(self) -> None:
        """Start a fresh per-operation window."""
        self._lines = set()
        self._levels = 0
        self._start = (self.comparisons, self.element_moves, self.charged_cost)

    def end_op(self) -> OpCost:
        """Close the per-operation window and return its readings."""
        comparisons, moves, charged = self._start
        lines = len(self._lines)
        self.cache_lines += lines
        return OpCost(
            comparisons=self.comparisons - comparisons,
            element_moves=self.element_moves - moves,
            charged_cost=self.charged_cost - charged,
            cache_lines=lines,
            levels_touched=self._levels,
        )

    def record_batch(self, moves: int, ops: int, scale: int) -> None:
        """Record one external-movement batch; scale is 2^(gamma_end+k).

        `ops` counts the moveable-dictionary operations of the batch, the unit
        the batch bound is stated in; `moves` counts raw element writes.
        """
        self.batches += 1
        self.max_batch_moves = max(self.max_batch_moves, moves)
        self.max_batch_ratio = max(self.max_batch_ratio, moves / scale)
        self.max_batch_ops = max(self.max_batch_ops, ops)
        self.max_batch_op_ratio = max(self.max_batch_op_ratio, ops / scale)
