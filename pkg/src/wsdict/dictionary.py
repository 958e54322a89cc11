"""The implicit working-set dictionary.

All elements live in one ElementStore; the block layout is decoded from the
array at the start of every public operation and dropped at its end. Every
relocation goes through the MemoryManager.

Vocabulary used below: a point's level is the block holding it; an interval
is the open range between two consecutive guarding points and takes the level
of the non-guarding points inside it; a run is a maximal sequence of
consecutive helping or climbing points of one interval.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import NoReturn, Optional

from wsdict.constants import MAX_SETTLE_PASSES, SMALL_FORM_LIMIT, UNBOUNDED
from wsdict.errors import DuplicateKeyError, InvariantFailure, UsageError
from wsdict.layout import BlockLayout, decode_layout
from wsdict.memory import MemoryManager, SlotEvent
from wsdict.meters import CostMeters
from wsdict.models import (
    NON_GUARD,
    ExternalMove,
    FindResult,
    InternalMove,
    Interval,
    Key,
    NeighborhoodKind,
    Parameters,
    Place,
    PointType,
    Side,
    Structure,
)
from wsdict.store import ElementStore

logger = logging.getLogger(__name__)

D, A, R, W, H, C, G = Structure
HC = (H, C)

# (key, source, destination); None stands for outside the dictionary
Transfer = tuple[Key, Optional[Place], Optional[Place]]


@dataclass
class Walk:
    """Points met walking away from a pivot while they belong to a structure set."""

    points: list[tuple[Key, Place]] = field(default_factory=list)
    stop: Optional[tuple[Key, Place]] = None
    truncated: bool = False


class WorkingSetDictionary:
    """Sorted dictionary whose access cost follows the working-set number.

    The only state kept between operations is the element array (and hence n).
    Keys must be totally ordered and distinct.

    Example:
        >>> d = WorkingSetDictionary()
        >>> for key in (5, 1, 9):
        ...     d.insert(key)
        >>> d.search(5), d.predecessor(5), d.successor(9)
        (True, 1, None)
    """

    def __init__(
        self,
        params: Optional[Parameters] = None,
        meters: Optional[CostMeters] = None,
        slot_trace: Optional[list[SlotEvent]] = None,
    ) -> None:
        """Initialize an empty dictionary.

        Args:
            params: Structure parameters (defaults: c=5, d=24, k=3)
            meters: Cost meters to update, or None
            slot_trace: Optional list receiving every element placement
        """
        self.params = params if params is not None else Parameters()
        self.meters = meters
        self.store = ElementStore(meters=meters)
        self.slot_trace = slot_trace
        self._layout: Optional[BlockLayout] = None
        self._memory: Optional[MemoryManager] = None
        self._arrivals: dict[int, list[Key]] = {}
        self._progress = 0

    def __len__(self) -> int:
        return len(self.store)

    def __contains__(self, e: object) -> bool:
        return isinstance(e, int) and self.find(e).present

    # ------------------------------------------------------------------
    # Snapshots and operation scope
    # ------------------------------------------------------------------

    def snapshot(self) -> list[Key]:
        """Return a copy of the element array, the dictionary's entire state."""
        return self.store.snapshot()

    @classmethod
    def from_snapshot(
        cls,
        keys: Iterable[Key],
        params: Optional[Parameters] = None,
        meters: Optional[CostMeters] = None,
    ) -> WorkingSetDictionary:
        """Rebuild a dictionary from an array produced by snapshot().

        Raises:
            CorruptionError: If the array does not decode
        """
        dictionary = cls(params)
        dictionary.store.slots = list(keys)
        decode_layout(dictionary.store, dictionary.params)
        dictionary.meters = meters
        dictionary.store.meters = meters
        return dictionary

    @contextmanager
    def _operation(self) -> Iterator[BlockLayout]:
        if self._layout is not None:
            yield self._layout
            return
        layout = decode_layout(self.store, self.params)
        self._layout = layout
        self._memory = MemoryManager(self.store, layout, self.slot_trace)
        self._arrivals = {}
        try:
            yield layout
        finally:
            self._layout = None
            self._memory = None

    @property
    def layout(self) -> BlockLayout:
        if self._layout is None:
            raise UsageError("layout is only available inside an operation")
        return self._layout

    def describe(self) -> list[dict[str, int]]:
        """Return the decoded size of every sub-structure, one dict per block."""
        with self._operation() as layout:
            return [
                {structure.name: layout.size(level, structure) for structure in Structure}
                for level in range(layout.top + 1)
            ]

    # ------------------------------------------------------------------
    # Per-structure queries
    # ------------------------------------------------------------------

    def _less(self, a: Key, b: Key) -> bool:
        return self.store.less(a, b)

    def _members(self, level: int, structure: Structure) -> list[Key]:
        lo, size = self.layout.extent(level, structure)
        return self.store.keys(lo, lo + size)

    def _holds(self, level: int, structure: Structure, e: Key) -> bool:
        if structure is D:
            return any(self.store.compare(x, e) == 0 for x in self._members(level, D))
        return self.layout.view(self.store, level, structure).search(e) is not None

    def _closer(self, a: Optional[Key], b: Optional[Key], side: Side) -> Optional[Key]:
        """Return whichever of a and b lies nearer to the pivot on side."""
        if a is None:
            return b
        if b is None:
            return a
        if side is Side.LEFT:
            return b if self._less(a, b) else a
        return b if self._less(b, a) else a

    def _near(self, level: int, structure: Structure, e: Key, side: Side) -> Optional[Key]:
        """Return the nearest key strictly on side of e within one structure."""
        if level > self.layout.top:
            return None
        if structure is D:
            best: Optional[Key] = None
            for x in self._members(level, D):
                beyond = self._less(x, e) if side is Side.LEFT else self._less(e, x)
                if beyond:
                    best = self._closer(best, x, side)
            return best
        view = self.layout.view(self.store, level, structure)
        address = view.predecessor(e) if side is Side.LEFT else view.successor(e)
        return None if address is None else self.store.read(address)

    def _pick(
        self,
        best: Optional[tuple[Key, Place]],
        key: Optional[Key],
        place: Place,
        side: Side,
    ) -> Optional[tuple[Key, Place]]:
        if key is None:
            return best
        if best is None or self._closer(best[0], key, side) != best[0]:
            return key, place
        return best

    def _nearest_point(self, e: Key, level: int, side: Side) -> Optional[tuple[Key, Place]]:
        """Nearest non-guarding point of block `level` strictly on side of e."""
        best: Optional[tuple[Key, Place]] = None
        for structure in NON_GUARD:
            best = self._pick(best, self._near(level, structure, e, side), Place(level, structure), side)
        return best

    def _nearest_guard(self, e: Key, level: int, side: Side) -> Optional[tuple[Key, Place]]:
        """Nearest point of G_0..G_level strictly on side of e."""
        best: Optional[tuple[Key, Place]] = None
        for j in range(min(level, self.layout.top) + 1):
            best = self._pick(best, self._near(j, G, e, side), Place(j, G), side)
        return best

    def _adjacent(self, e: Key, level: int, side: Side) -> Optional[tuple[Key, Place]]:
        """Next point on side of e among (B_level minus G_level) and G_0..G_level."""
        best = self._nearest_point(e, level, side)
        guard = self._nearest_guard(e, level, side)
        if guard is not None:
            best = self._pick(best, guard[0], guard[1], side)
        return best

    def _extremes(self) -> tuple[Key, Key]:
        lo, size = self.layout.extent(0, G)
        return self.store.read(lo), self.store.read(lo + size - 1)

    def _nearer(self, a: Key, b: Optional[Key], side: Side) -> bool:
        """True when a lies strictly nearer than b on side (b=None is infinitely far)."""
        if b is None:
            return True
        return self._less(b, a) if side is Side.LEFT else self._less(a, b)

    def _between(self, point: Optional[Key], left: Optional[Key], right: Optional[Key]) -> bool:
        if point is None:
            return False
        return (left is None or self._less(left, point)) and (right is None or self._less(point, right))

    def _touch(self, level: int) -> None:
        if self.meters is not None:
            self.meters.touch_level(level)

    # ------------------------------------------------------------------
    # Find and neighborhood queries
    # ------------------------------------------------------------------

    def find(self, e: Key) -> FindResult:
        """Return the level of the interval e intersects, and e's type if present.

        Levels are scanned upwards, narrowing the guard window (e1, e2) with
        each G_i, until block i has a point inside the window or holds e.
        """
        with self._operation() as layout:
            if layout.top < 0:
                return FindResult(0, None, False)
            low, high = self._extremes()
            if self._less(e, low) or self._less(high, e):
                return FindResult(0, None, False)
            left: Optional[Key] = None
            right: Optional[Key] = None
            for level in range(layout.top + 1):
                self._touch(level)
                if self._holds(level, G, e):
                    return FindResult(level, PointType.GUARDING, True, G)
                for structure in NON_GUARD:
                    if self._holds(level, structure, e):
                        return FindResult(level, PointType.of(structure), True, structure)
                left = self._closer(left, self._near(level, G, e, Side.LEFT), Side.LEFT)
                right = self._closer(right, self._near(level, G, e, Side.RIGHT), Side.RIGHT)
                p = self._nearest_point(e, level, Side.LEFT)
                s = self._nearest_point(e, level, Side.RIGHT)
                if (p is not None and self._between(p[0], left, right)) or (
                    s is not None and self._between(s[0], left, right)
                ):
                    return FindResult(level, None, False)
            return FindResult(layout.top, None, False)

    def _locate(self, e: Key) -> Optional[Place]:
        result = self.find(e)
        if not result.present or result.structure is None:
            return None
        return Place(result.level, result.structure)

    def type_of(self, e: Key) -> Optional[tuple[PointType, int]]:
        """Return (type, level) of e, or None when e is absent."""
        result = self.find(e)
        if not result.present or result.point_type is None:
            return None
        return result.point_type, result.level

    def _neighbor(self, e: Key, side: Side) -> Optional[Key]:
        """Strict predecessor (LEFT) or successor (RIGHT) of e in P, None for infinity."""
        with self._operation() as layout:
            if layout.top < 0:
                return None
            low, high = self._extremes()
            if side is Side.LEFT:
                if not self._less(low, e):
                    return None
                if self._less(high, e):
                    return high
            else:
                if not self._less(e, high):
                    return None
                if self._less(e, low):
                    return low
            # pin the interval of a point just beside e on `side`
            far = side.opposite
            bound: dict[Side, Optional[Key]] = {Side.LEFT: None, Side.RIGHT: None}
            for level in range(layout.top + 1):
                self._touch(level)
                far_guard = e if self._holds(level, G, e) else self._near(level, G, e, far)
                bound[side] = self._closer(bound[side], self._near(level, G, e, side), side)
                bound[far] = self._closer(bound[far], far_guard, far)
                near = self._nearest_point(e, level, side)
                near_key = None if near is None else near[0]
                if any(self._holds(level, s, e) for s in NON_GUARD):
                    far_key: Optional[Key] = e
                else:
                    far_point = self._nearest_point(e, level, far)
                    far_key = None if far_point is None else far_point[0]
                if self._between(near_key, bound[Side.LEFT], bound[Side.RIGHT]) or self._between(
                    far_key, bound[Side.LEFT], bound[Side.RIGHT]
                ):
                    return self._closer(bound[side], near_key, side)
            return bound[side]

    def predecessor(self, e: Key) -> Optional[Key]:
        """Return max{x in P : x < e}, or None for minus infinity."""
        return self._neighbor(e, Side.LEFT)

    def successor(self, e: Key) -> Optional[Key]:
        """Return min{x in P : x > e}, or None for plus infinity."""
        return self._neighbor(e, Side.RIGHT)

    def _is_extreme(self, g: Key, side: Side) -> bool:
        """True for min(P) on LEFT and max(P) on RIGHT: no interval lies beyond them."""
        low, high = self._extremes()
        return g == (low if side is Side.LEFT else high)

    def _side_level(self, g: Key, side: Side) -> int:
        """Level of the interval on side of guard g; UNBOUNDED beyond min or max."""
        if self._is_extreme(g, side):
            return UNBOUNDED
        bound: Optional[Key] = None
        for level in range(self.layout.top + 1):
            bound = self._closer(bound, self._near(level, G, g, side), side)
            point = self._nearest_point(g, level, side)
            if point is not None and self._nearer(point[0], bound, side):
                return level
        return self.layout.top

    def _guard_levels(self, g: Key) -> tuple[int, int]:
        return self._side_level(g, Side.LEFT), self._side_level(g, Side.RIGHT)

    def _interval_beside(self, g: Key, side: Side, level: int) -> Interval:
        other = self._nearest_guard(g, level, side)
        other_key = None if other is None else other[0]
        other_closed = other is not None and other[1].level == level
        own_closed = self._holds(level, G, g)
        if side is Side.LEFT:
            return Interval(other_key, g, level, other_closed, own_closed)
        return Interval(g, other_key, level, own_closed, other_closed)

    def locate_interval(self, e: Key) -> Interval:
        """Return the interval containing e (for a guard, its side at the lower level).

        Raises:
            UsageError: Unless min(P) < e < max(P)
        """
        with self._operation() as layout:
            if layout.top < 0 or len(self.store) < 2:
                raise UsageError("locate_interval needs at least two elements")
            low, high = self._extremes()
            if not (self._less(low, e) and self._less(e, high)):
                raise UsageError(f"{e!r} is not strictly between min and max")
            result = self.find(e)
            if result.structure is G:
                a, b = self._guard_levels(e)
                side = Side.LEFT if a <= b else Side.RIGHT
                return self._interval_beside(e, side, min(a, b))
            level = result.level
            left = self._nearest_guard(e, level, Side.LEFT)
            right = self._nearest_guard(e, level, Side.RIGHT)
            return Interval(
                None if left is None else left[0],
                None if right is None else right[0],
                level,
                left is not None and left[1].level == level,
                right is not None and right[1].level == level,
            )

    def _walk(
        self,
        pivot: Key,
        level: int,
        members: tuple[Structure, ...],
        side: Side,
        limit: int,
    ) -> Walk:
        """Collect consecutive points of `members` at `level` on side of pivot.

        Stops at the first point outside `members`, at a guard, or after `limit`
        points (truncated when a further member follows).
        """
        walk = Walk()
        cursor = pivot
        while True:
            nxt = self._adjacent(cursor, level, side)
            if nxt is None or nxt[1].structure not in members:
                walk.stop = nxt
                return walk
            if len(walk.points) == limit:
                walk.truncated = True
                return walk
            walk.points.append(nxt)
            cursor = nxt[0]

    def neighborhood(
        self,
        level: int,
        structures: tuple[Structure, ...],
        e: Key,
        kind: NeighborhoodKind,
        limit: Optional[int] = None,
    ) -> list[Key]:
        """Return GIL, GIR, FGL or FGR of e over the given structures of one level.

        Args:
            level: Block whose points are considered
            structures: The point set S, as structures of that block
            e: Pivot key; need not be present
            kind: Which group to return
            limit: Maximum group size; defaults to c

        Returns:
            Group members ordered from nearest to farthest
        """
        with self._operation():
            limit = self.params.c if limit is None else limit
            side = Side.LEFT if kind in (NeighborhoodKind.GIL, NeighborhoodKind.FGL) else Side.RIGHT
            start = e
            if kind in (NeighborhoodKind.FGL, NeighborhoodKind.FGR):
                while True:
                    nxt = self._adjacent(start, level, side)
                    if nxt is None or nxt[1].structure is G:
                        return []
                    if nxt[1].structure in structures:
                        break
                    start = nxt[0]
            walk = self._walk(start, level, structures, side, limit)
            return [key for key, _ in walk.points]

    # ------------------------------------------------------------------
    # Relocation and regrouping
    # ------------------------------------------------------------------

    def _relocate(self, *transfers: Transfer) -> None:
        """Apply the transfers as one external-movement batch."""
        grouped: dict[int, dict[Structure, InternalMove]] = {}

        def move_for(place: Place) -> InternalMove:
            moves = grouped.setdefault(place.level, {})
            return moves.setdefault(place.structure, InternalMove(place.structure))

        for key, src, dst in transfers:
            if src == dst:
                continue
            if src is not None:
                move_for(src).s_out.append(key)
            if dst is not None:
                move_for(dst).s_in.append(key)
        if not grouped:
            return
        layout = self.layout
        if max(grouped) == layout.top + 1:
            layout.add_level()
        batch = [
            ExternalMove(level, [moves[s] for s in sorted(moves)])
            for level, moves in sorted(grouped.items())
        ]
        assert self._memory is not None
        self._memory.external_movement(batch)
        for key, _, dst in transfers:
            if dst is not None and dst.structure in (D, A):
                self._arrivals.setdefault(dst.level, []).append(key)
        for level in grouped:
            self._touch(level)

    def _arrival_place(self, level: int) -> Place:
        """Where a point arriving at `level` goes: D while it has room, else A."""
        layout = self.layout
        if (
            level > layout.top
            or layout.is_compact(level)
            or layout.size(level, D) < self.params.d_width(level)
        ):
            return Place(level, D)
        return Place(level, A)

    def _destination(self, level: int, point_type: PointType) -> Place:
        if point_type is PointType.ARRIVING:
            return self._arrival_place(level)
        if point_type is PointType.WAITING:
            return Place(level, W)
        if point_type is PointType.RESTING:
            return Place(level, R)
        # helping and climbing are settled by _regroup
        return Place(level, H)

    def _place_at(self, level: int, key: Key) -> Optional[Place]:
        """Place of key among the non-guards of `level` and G_0..G_level."""
        if level > self.layout.top:
            return None
        for structure in NON_GUARD:
            if self._holds(level, structure, key):
                return Place(level, structure)
        for j in range(level + 1):
            if self._holds(j, G, key):
                return Place(j, G)
        return None

    def _guard_place(self, g: Key) -> Place:
        for level in range(self.layout.top + 1):
            if self._holds(level, G, g):
                return Place(level, G)
        raise UsageError(f"{g!r} is not a guarding point")

    def _closes(self, bound: Optional[tuple[Key, Place]], level: int) -> bool:
        """True when bound is a guard closed towards the level-`level` interval."""
        if bound is None or bound[1] != Place(level, G):
            return False
        low, high = self._extremes()
        return bound[0] != low and bound[0] != high

    def _regroup(self, level: int, pivot: Key) -> None:
        """Re-type the helping/climbing runs next to pivot at `level`.

        A run becomes climbing when it has at least c points, or when it fills
        an interval closed at both ends on this level; otherwise it is helping.
        An absent pivot joins its left and right runs.
        """
        if level > self.layout.top:
            return
        c = self.params.c
        left = self._walk(pivot, level, HC, Side.LEFT, c)
        right = self._walk(pivot, level, HC, Side.RIGHT, c)
        here = self._place_at(level, pivot)
        runs: list[tuple[list[tuple[Key, Place]], bool, Optional[tuple[Key, Place]], Optional[tuple[Key, Place]]]]
        if here is None or here.structure in HC:
            middle = [] if here is None else [(pivot, here)]
            runs = [
                (
                    left.points[::-1] + middle + right.points,
                    left.truncated or right.truncated,
                    left.stop,
                    right.stop,
                )
            ]
        else:
            runs = [
                (left.points, left.truncated, left.stop, (pivot, here)),
                (right.points, right.truncated, (pivot, here), right.stop),
            ]
        transfers: list[Transfer] = []
        for points, truncated, low_bound, high_bound in runs:
            if not points:
                continue
            climbing = (
                truncated
                or len(points) >= c
                or (self._closes(low_bound, level) and self._closes(high_bound, level))
            )
            target = C if climbing else H
            transfers += [
                (key, place, Place(level, target)) for key, place in points if place.structure is not target
            ]
        self._relocate(*transfers)

    def _sink_place(self, level: int, reach: int) -> Place:
        """Place in block `level` for a point that bordered or held level `reach`.

        Waiting when it comes down from a higher level, arriving otherwise.
        """
        if reach > level:
            return Place(level, W)
        return self._arrival_place(level)

    def _relevel_guard(self, g: Key, a: int, b: int, former: int) -> None:
        """Store guard g at the level matching its incident interval levels a and b.

        When both sides are at one level the two intervals merge and g joins
        them; `former` is the level of the side that just changed.
        """
        low, high = self._extremes()
        if g == low or g == high:
            return
        current = self._guard_place(g)
        if a == b:
            self._relocate((g, current, self._sink_place(a, max(a, former))))
            self._regroup(a, g)
            return
        target = Place(min(a, b), G)
        if current != target:
            self._relocate((g, current, target))
            self._regroup(target.level, g)

    def _dissolve(self, g: Key, level: int, reach: int) -> None:
        """Turn guard g into a point of the interval at `level`."""
        self._relocate((g, self._guard_place(g), self._sink_place(level, reach)))
        self._regroup(level, g)

    def _fix_levels(self, *levels: int) -> None:
        for level in sorted(set(levels)):
            if 0 <= level <= self.layout.top:
                self.fix(level)

    # ------------------------------------------------------------------
    # Transfers within a block
    # ------------------------------------------------------------------

    def _least(self, level: int, structures: tuple[Structure, ...], count: int) -> list[tuple[Key, Place]]:
        """The `count` least points of the union of the given structures."""
        found: list[tuple[Key, Place]] = []
        for structure in structures:
            lo, size = self.layout.extent(level, structure)
            if structure is not D:
                # sorted: only the first `count` can qualify
                size = min(size, count)
            found += [(key, Place(level, structure)) for key in self.store.keys(lo, lo + size)]
        found.sort(key=lambda item: item[0])
        return found[:count]

    def _move_least(
        self, level: int, sources: tuple[Structure, ...], target: Structure, count: int
    ) -> list[Key]:
        """Move the `count` least points of sources to target and regroup around them."""
        chosen = self._least(level, sources, count)
        if not chosen:
            return []
        destination = Place(level, target)
        self._relocate(*[(key, place, destination) for key, place in chosen])
        if any(place.structure in HC for _, place in chosen) or target in HC:
            for key, _ in chosen:
                self._regroup(level, key)
        return [key for key, _ in chosen]

    def transfer_W_to_HC(self, i: int) -> None:
        """Make the least waiting point of block i helping or climbing.

        Raises:
            UsageError: If W_i is empty
        """
        with self._operation() as layout:
            if i > layout.top or layout.size(i, W) == 0:
                raise UsageError(f"W_{i} is empty")
            self._move_least(i, (W,), H, 1)

    def transfer_HC_to_W(self, i: int) -> None:
        """Make the least helping-or-climbing point of block i waiting.

        Raises:
            UsageError: If H_i and C_i are empty
        """
        with self._operation() as layout:
            if i > layout.top or layout.hc(i) == 0:
                raise UsageError(f"H_{i} and C_{i} are empty")
            self._move_least(i, HC, W, 1)

    # ------------------------------------------------------------------
    # Fix
    # ------------------------------------------------------------------

    def fix(self, i: int) -> None:
        """Restore the D/A/R/W balance of block i by conditional transfers.

        Raises:
            InvariantFailure: If the transfers do not reach a stable block
        """
        with self._operation() as layout:
            limit = 4 * self.params.d_width(i) + 8
            for _ in range(limit):
                if i > layout.top or not self._fix_step(i):
                    return
            raise InvariantFailure(f"fix({i}) did not settle after {limit} steps")

    def _fix_step(self, i: int) -> bool:
        layout = self.layout
        cap = self.params.capacity(i)
        width = self.params.d_width(i)

        def size(structure: Structure) -> int:
            return layout.size(i, structure)

        waiting_or_above = size(W) + size(H) + size(C)
        others = size(A) + size(R) + waiting_or_above
        if size(D) > width:
            spill = self._members(i, D)[width:]
            self._relocate(*[(key, Place(i, D), Place(i, A)) for key in spill])
            return True
        if size(D) < width and others:
            need = min(width - size(D), others)
            for source in ((A,), (R,), (W,), HC):
                if need == 0:
                    break
                moved = self._move_least(i, source, D, need)
                need -= len(moved)
            return True
        if waiting_or_above and size(R) < cap:
            need = cap - size(R)
            moved = self._move_least(i, (W,), R, need)
            if len(moved) < need:
                self._move_least(i, HC, R, need - len(moved))
            return True
        if size(R) > cap:
            surplus = self._members(i, R)[cap:]
            self._relocate(*[(key, Place(i, R), Place(i, A)) for key in surplus])
            return True
        if i < layout.top and size(A) + size(W) < cap and size(H) + size(C):
            self._move_least(i, HC, W, cap - size(A) - size(W))
            return True
        if size(A) + size(W) > cap and size(W):
            self._move_least(i, (W,), H, min(size(A) + size(W) - cap, size(W)))
            return True
        if size(A) >= cap:
            self._rename(i)
            return True
        return False

    def _rename(self, i: int) -> None:
        """A_i is full: rename R to W and A to R, then hand the newest arrivals back to A."""
        layout = self.layout
        cap = self.params.capacity(i)
        excess = layout.size(i, A) - cap
        current = set(self._members(i, A))
        recent = [key for key in reversed(self._arrivals.get(i, [])) if key in current]
        assert self._memory is not None
        self._memory.promote_arrivals(i)
        if excess <= 0:
            return
        chosen = list(dict.fromkeys(recent))[:excess]
        if len(chosen) < excess:
            rest = [key for key in reversed(self._members(i, R)) if key not in chosen]
            chosen += rest[: excess - len(chosen)]
        self._relocate(*[(key, Place(i, R), Place(i, A)) for key in chosen])
        self._move_least(i, (W,), H, excess)

    # ------------------------------------------------------------------
    # Moving points between levels
    # ------------------------------------------------------------------

    def shift_up(self, i: int) -> None:
        """Move between 1 and c climbing points of block i to block i+1 as arriving.

        Raises:
            UsageError: If block i does not exist
            InvariantFailure: If block i has no climbing run that can be lifted
        """
        with self._operation() as layout:
            if i < 0 or i > layout.top:
                raise UsageError(f"no block {i}")
            least = self._least(i, (C,), 1)
            if not least:
                self._stall(i, "no climbing point")
            c = self.params.c
            first = least[0]
            ahead = self._walk(first[0], i, (C,), Side.RIGHT, c)
            run = [first] + ahead.points
            before = self._adjacent(first[0], i, Side.LEFT)
            after = ahead.stop
            whole = (
                not ahead.truncated
                and before is not None
                and before[1].structure is G
                and after is not None
                and after[1].structure is G
            )
            if whole and len(run) <= c:
                assert before is not None and after is not None
                self._lift_interval(i, run, before[0], after[0])
            elif not self._lift_group(i, run[:c], before):
                self._stall(i, f"climbing run of {len(run)} too short to split")
            self._progress += 1
            self._fix_levels(i, i + 1)

    def _stall(self, i: int, reason: str) -> NoReturn:
        if self.meters is not None:
            self.meters.shift_up_stalls += 1
        layout = self.layout
        logger.error("shift-up at level %d stalled: %s", i, reason)
        raise InvariantFailure(
            f"shift-up at level {i} stalled: {reason} "
            f"(|H|={layout.size(i, H)} |C|={layout.size(i, C)} c_{i}={layout.slack(i)})"
        )

    def _lift_interval(self, i: int, run: list[tuple[Key, Place]], e1: Key, e2: Key) -> None:
        """Move the whole content of a closed all-climbing interval up one level."""
        outer_left = self._side_level(e1, Side.LEFT)
        outer_right = self._side_level(e2, Side.RIGHT)
        destination = self._arrival_place(i + 1)
        self._relocate(*[(key, place, destination) for key, place in run])
        self._relevel_guard(e1, outer_left, i + 1, i)
        self._relevel_guard(e2, i + 1, outer_right, i)
        self._fix_levels(outer_left, outer_right)

    def _lift_group(
        self, i: int, group: list[tuple[Key, Place]], before: Optional[tuple[Key, Place]]
    ) -> bool:
        """Carve a new level-(i+1) interval out of a run of climbing points.

        The outermost points of the group become guards at level i and the
        points between them move up. A group point with a guard directly beyond
        it stays behind as waiting so that no level-i interval becomes empty.
        """
        left_bounded = before is not None and before[1].structure is G
        after = self._adjacent(group[-1][0], i, Side.RIGHT)
        right_bounded = after is not None and after[1].structure is G
        needed = 3 + int(left_bounded) + int(right_bounded)
        if len(group) < needed:
            return False
        transfers: list[Transfer] = []
        lo = 1 if left_bounded else 0
        hi = len(group) - 2 if right_bounded else len(group) - 1
        if left_bounded:
            transfers.append((group[0][0], group[0][1], Place(i, W)))
        if right_bounded:
            transfers.append((group[-1][0], group[-1][1], Place(i, W)))
        guards = (group[lo], group[hi])
        for key, place in guards:
            transfers.append((key, place, Place(i, G)))
        destination = self._arrival_place(i + 1)
        transfers += [(key, place, destination) for key, place in group[lo + 1 : hi]]
        self._relocate(*transfers)
        for key, _ in guards:
            self._regroup(i, key)
        return True

    def shift_down(self, i: int) -> bool:
        """Move at least one point of block i down to block i-1.

        Returns:
            False when block i holds no non-guarding point

        Raises:
            UsageError: If i is 0 or block i does not exist
        """
        with self._operation() as layout:
            if i < 1 or i > layout.top:
                raise UsageError(f"cannot shift down from block {i}")
            if 0 < layout.size(i, D) < self.params.d_width(i) or not any(
                layout.size(i, s) for s in (A, R, W, H, C)
            ):
                members = self._members(i, D)
                if not members:
                    return False
                chosen = members[-1]
            else:
                if layout.size(i, A) == 0:
                    for source in ((R,), (W,), HC):
                        if self._move_least(i, source, A, 1):
                            break
                chosen = self._least(i, (A,), 1)[0][0]
            self.move_down(chosen, i, i - 1, PointType.ARRIVING, PointType.CLIMBING)
            self._progress += 1
            self._fix_levels(i, i - 1)
            return True

    def move_down(
        self, e: Key, i: int, j: int, t_before: PointType, t_after: PointType
    ) -> None:
        """Move e from level i down to level j, giving it type t_after there.

        Raises:
            UsageError: If e is absent, not at level i, or j > i
        """
        with self._operation():
            place = self._locate(e)
            if place is None:
                raise UsageError(f"{e!r} is not in the dictionary")
            if place.level != i or j > i or j < 0:
                raise UsageError(f"cannot move {e!r} from level {place.level} to {j} (asked {i})")
            if (t_before is PointType.GUARDING) != (place.structure is G):
                raise UsageError(f"{e!r} is {place.point_type.value}, not {t_before.value}")
            if place.structure is G:
                self._move_down_guard(e, place, j, t_after)
            else:
                self._move_down_point(e, place, j, t_after)

    def _settle_point(self, e: Key, level: int, t_after: PointType) -> None:
        if t_after in (PointType.HELPING, PointType.CLIMBING):
            self._regroup(level, e)

    def _move_down_point(self, e: Key, place: Place, j: int, t_after: PointType) -> None:
        i = place.level
        if i == j:
            self._relocate((e, place, self._destination(j, t_after)))
            self._regroup(j, e)
            self._fix_levels(j)
            return
        transfers: list[Transfer] = [(e, place, self._destination(j, t_after))]
        releveled: list[tuple[Key, Side, int]] = []
        new_guards: list[Key] = []
        for side in (Side.LEFT, Side.RIGHT):
            first = self._adjacent(e, i, side)
            assert first is not None
            if first[1].structure is G:
                # e is outermost on this side; the bounding guard now borders level j
                releveled.append((first[0], side, self._side_level(first[0], side)))
                continue
            second = self._adjacent(first[0], i, side)
            assert second is not None
            if second[1].structure is G:
                transfers.append((first[0], first[1], self._sink_place(j, i)))
                releveled.append((second[0], side, self._side_level(second[0], side)))
            else:
                transfers.append((first[0], first[1], Place(j, G)))
                new_guards.append(first[0])
        self._relocate(*transfers)
        self._settle_point(e, j, t_after)
        for g in new_guards:
            self._regroup(i, g)
        for g, _, outer in releveled:
            self._relevel_guard(g, outer, j, i)
        self._fix_levels(i, j, *(outer for _, _, outer in releveled))

    def _move_down_guard(self, e: Key, place: Place, j: int, t_after: PointType) -> None:
        if self._is_extreme(e, Side.LEFT) or self._is_extreme(e, Side.RIGHT):
            return
        a, b = self._guard_levels(e)
        transfers: list[Transfer] = [(e, place, self._destination(j, t_after))]
        releveled: list[tuple[Key, int, int]] = []
        regroup_at: list[tuple[int, Key]] = []
        for side, level in ((Side.LEFT, a), (Side.RIGHT, b)):
            if level == j:
                continue
            first = self._nearest_point(e, level, side)
            assert first is not None
            second = self._adjacent(first[0], level, side)
            assert second is not None
            if second[1].structure is G:
                transfers.append((first[0], first[1], self._sink_place(j, level)))
                releveled.append((second[0], self._side_level(second[0], side), level))
            else:
                transfers.append((first[0], first[1], Place(min(level, j), G)))
                regroup_at.append((level, first[0]))
        self._relocate(*transfers)
        self._settle_point(e, j, t_after)
        for level, g in regroup_at:
            self._regroup(level, g)
        for g, outer, former in releveled:
            self._relevel_guard(g, outer, j, former)
        self._fix_levels(place.level, a, b, j, *(outer for _, outer, _ in releveled))

    # ------------------------------------------------------------------
    # Rebalancing
    # ------------------------------------------------------------------

    @staticmethod
    def slack_excess(c_l: int, c: int) -> int:
        """Return how far c_l lies outside [-c, c] (0 inside)."""
        if c_l > c:
            return c_l - c
        if c_l < -c:
            return -c_l - c
        return 0

    def rebalance_below(self, i: int) -> None:
        """Shift up from every level l <= i while |H_l|+|C_l| is above target + c."""
        with self._operation() as layout:
            c = self.params.c
            level = 0
            while level <= min(i, layout.top):
                for _ in range(MAX_SETTLE_PASSES):
                    if layout.slack(level) <= c:
                        break
                    self.shift_up(level)
                level += 1

    def rebalance_above(self, i: int) -> None:
        """Shift down into every level l >= i while |H_l|+|C_l| is below target - c."""
        with self._operation() as layout:
            c = self.params.c
            level = max(i, 0)
            while level < layout.top:
                for _ in range(MAX_SETTLE_PASSES):
                    if level >= layout.top or layout.slack(level) >= -c or not self.shift_down(level + 1):
                        break
                level += 1

    def _settle(self) -> None:
        for _ in range(MAX_SETTLE_PASSES):
            before = self._progress
            self.rebalance_below(self.layout.top)
            self.rebalance_above(0)
            if self._progress == before:
                return
        logger.warning("slack still moving after %d rebalance passes", MAX_SETTLE_PASSES)

    # ------------------------------------------------------------------
    # Public interface
    # ------------------------------------------------------------------

    def _rebuild_small(self, keys: list[Key]) -> None:
        """Store a set of at most three keys in its fixed form: [mid] + [min, max]."""
        ordered = sorted(keys)
        slots = ordered if len(ordered) < 2 else ordered[1:-1] + [ordered[0], ordered[-1]]
        store = self.store
        store.vacate(0, len(store))
        if len(slots) > len(store):
            store.extend(len(slots) - len(store))
        else:
            store.truncate(len(store) - len(slots))
        for address, key in enumerate(slots):
            store.write(address, key)
        fresh = decode_layout(store, self.params)
        self.layout.starts[:] = fresh.starts
        self.layout.sizes[:] = fresh.sizes
        self._touch(0)

    def search(self, e: Key) -> bool:
        """Return whether e is present; a hit moves e to level 0 as arriving."""
        with self._operation():
            result = self.find(e)
            if not result.present or result.structure is None:
                return False
            if result.level == 0 and result.structure in (D, A):
                return True
            if result.structure is G and (
                self._is_extreme(e, Side.LEFT) or self._is_extreme(e, Side.RIGHT)
            ):
                return True
            assert result.point_type is not None
            self.move_down(e, result.level, 0, result.point_type, PointType.ARRIVING)
            if result.level >= 1:
                self.rebalance_below(result.level - 1)
            self._settle()
            return True

    def insert(self, e: Key) -> None:
        """Insert e with working-set number 0.

        Raises:
            DuplicateKeyError: If e is already present
        """
        with self._operation():
            if len(self.store) < SMALL_FORM_LIMIT:
                keys = self.store.keys(0, len(self.store))
                if e in keys:
                    raise DuplicateKeyError(e)
                self._rebuild_small(keys + [e])
                return
            low, high = self._extremes()
            if e == low or e == high:
                raise DuplicateKeyError(e)
            if self._less(e, low):
                self._insert_extreme(e, low, Side.LEFT)
            elif self._less(high, e):
                self._insert_extreme(e, high, Side.RIGHT)
            else:
                result = self.find(e)
                if result.present:
                    raise DuplicateKeyError(e)
                self._insert_interior(e, result.level)
            self._settle()

    def _insert_interior(self, e: Key, level: int) -> None:
        """Add e as helping to its interval at `level`, then search it down to level 0."""
        self._relocate((e, None, Place(level, H)))
        self._regroup(level, e)
        self._fix_levels(level)
        self.rebalance_below(self.layout.top)
        self.search(e)

    def _insert_extreme(self, e: Key, old: Key, side: Side) -> None:
        """e becomes the new min (LEFT) or max (RIGHT); the old one is reinserted inside."""
        level = self._side_level(old, side.opposite)
        self._relocate((e, None, Place(0, G)), (old, Place(0, G), None))
        self._insert_interior(old, level)

    def delete(self, e: Key) -> bool:
        """Remove e if present.

        Returns:
            True if e was removed
        """
        with self._operation():
            n = len(self.store)
            if n <= SMALL_FORM_LIMIT + 1:
                keys = self.store.keys(0, n)
                if e not in keys:
                    return False
                keys.remove(e)
                self._rebuild_small(keys)
                return True
            place = self._locate(e)
            if place is None:
                return False
            if place.structure is not G:
                self._delete_point(e, place)
            elif self._is_extreme(e, Side.LEFT):
                self._delete_extreme(e, Side.LEFT)
            elif self._is_extreme(e, Side.RIGHT):
                self._delete_extreme(e, Side.RIGHT)
            else:
                self._delete_guard(e, place)
            self._settle()
            return True

    def _delete_point(self, e: Key, place: Place) -> None:
        i = place.level
        left = self._adjacent(e, i, Side.LEFT)
        right = self._adjacent(e, i, Side.RIGHT)
        assert left is not None and right is not None
        if left[1].structure is not G or right[1].structure is not G:
            self._relocate((e, place, None))
            self._regroup(i, e)
            self._fix_levels(i)
            return
        # e is alone in its interval: the guard with the lower outer level gives way
        g1, g2 = left[0], right[0]
        l_level = self._side_level(g1, Side.LEFT)
        r_level = self._side_level(g2, Side.RIGHT)
        self._relocate((e, place, None))
        if l_level >= r_level:
            self._dissolve(g2, r_level, max(i, r_level))
            self._relevel_guard(g1, l_level, r_level, i)
        else:
            self._dissolve(g1, l_level, max(i, l_level))
            self._relevel_guard(g2, l_level, r_level, i)
        self._fix_levels(i, l_level, r_level)

    def _delete_extreme(self, e: Key, side: Side) -> None:
        """Delete min(P) (LEFT) or max(P) (RIGHT); its neighbour takes its place in G_0."""
        inward = side.opposite
        level = self._side_level(e, inward)
        heir = self._nearest_point(e, level, inward)
        assert heir is not None
        beyond = self._adjacent(heir[0], level, inward)
        emptied = beyond is not None and beyond[1].structure is G
        outer = self._side_level(beyond[0], inward) if emptied and beyond is not None else -1
        self._relocate((e, Place(0, G), None), (heir[0], heir[1], Place(0, G)))
        self._regroup(level, heir[0])
        if emptied and beyond is not None and outer != UNBOUNDED:
            # the first interval lost its only point; its far guard joins the next one
            self._dissolve(beyond[0], outer, max(level, outer))
        self._fix_levels(level, 0, outer)

    def _delete_guard(self, e: Key, place: Place) -> None:
        """Delete a guard other than min/max; a point of its higher-level side replaces it."""
        a, b = self._guard_levels(e)
        side = Side.RIGHT if b > a else Side.LEFT
        high, low = max(a, b), min(a, b)
        first = self._nearest_point(e, high, side)
        assert first is not None
        second = self._adjacent(first[0], high, side)
        assert second is not None
        if second[1].structure is not G:
            self._relocate((e, place, None), (first[0], first[1], Place(low, G)))
            self._regroup(high, first[0])
            self._regroup(low, first[0])
            self._fix_levels(high, low)
            return
        # the higher side held only `first`: it drops into the lower interval
        outer = self._side_level(second[0], side)
        self._relocate((e, place, None), (first[0], first[1], self._sink_place(low, high)))
        self._regroup(low, first[0])
        self._relevel_guard(second[0], outer, low, high)
        self._fix_levels(high, low, outer)
