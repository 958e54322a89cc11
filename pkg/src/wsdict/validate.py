"""Brute-force invariant validator.

Decodes the array independently of the dictionary's own bookkeeping and
checks the structural invariants, the guard bound and, given an oracle, the
working-set lower bounds.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional, Union

from wsdict.dictionary import WorkingSetDictionary
from wsdict.errors import CorruptionError
from wsdict.layout import BlockLayout, decode_layout
from wsdict.models import Key, Parameters, Structure, Violation
from wsdict.oracle import OracleModel
from wsdict.store import ElementStore

D, A, R, W, H, C, G = Structure


@dataclass(frozen=True)
class Entry:
    key: Key
    level: int
    structure: Structure


@dataclass
class Span:
    """The points strictly between two consecutive guards."""

    left: Entry
    right: Entry
    points: list[Entry]

    @property
    def level(self) -> int:
        return self.points[0].level


class StateChecker:
    """Runs every check over one decoded array."""

    def __init__(
        self,
        keys: Sequence[Key],
        params: Parameters,
        oracle: Optional[OracleModel] = None,
        working_set: bool = True,
    ) -> None:
        self.keys = list(keys)
        self.params = params
        self.oracle = oracle
        self.working_set = working_set
        self.violations: list[Violation] = []

    def report(self, invariant: str, level: int, detail: str) -> None:
        self.violations.append(Violation(invariant, level, detail))

    def run(self) -> list[Violation]:
        if self.oracle is not None and sorted(self.keys) != self.oracle.keys():
            self.report("1", 0, f"element set differs from oracle ({len(self.keys)} vs {len(self.oracle)})")
        if len(set(self.keys)) != len(self.keys):
            self.report("1", 0, "duplicate keys in the array")
            return self.violations
        try:
            layout = decode_layout(ElementStore(self.keys), self.params)
        except CorruptionError as e:
            self.report("5", 0, f"layout does not decode: {e}")
            return self.violations
        if layout.top < 0:
            return self.violations
        members = [
            {
                s: self.keys[layout.extent(level, s)[0] : sum(layout.extent(level, s))]
                for s in Structure
            }
            for level in range(layout.top + 1)
        ]
        self.check_sizes(layout, members)
        spans, guard_sides = self.check_intervals(layout, members)
        for span in spans:
            self.check_runs(span)
        if self.oracle is not None and self.working_set:
            self.check_working_set(layout, members, guard_sides)
        return self.violations

    def check_sizes(self, layout: BlockLayout, members: list[dict[Structure, list[Key]]]) -> None:
        params = self.params
        c = params.c
        top = layout.top
        for level, row in enumerate(members):
            for structure in (A, R, W, H, C, G):
                keys = row[structure]
                if any(a >= b for a, b in zip(keys, keys[1:])):
                    self.report("5", level, f"{structure.name} is not sorted")
            if len(self.keys) < 2:
                continue
            block = layout.block_size(level)
            width = params.d_width(level)
            expected = min(block - 2, width) if level == 0 else min(block, width)
            if len(row[D]) != expected:
                self.report("5", level, f"|D|={len(row[D])}, expected {expected}")
            cap = params.capacity(level)
            sizes = {s: len(row[s]) for s in Structure}
            if sizes[R] > cap:
                self.report("6", level, f"|R|={sizes[R]} exceeds {cap}")
            if sizes[W] + sizes[H] + sizes[C] and sizes[R] != cap:
                self.report("6", level, f"|R|={sizes[R]} while W/H/C are nonempty")
            arriving_waiting = sizes[A] + sizes[W]
            if (level < top and arriving_waiting != cap) or arriving_waiting > cap:
                self.report("7", level, f"|A|+|W|={arriving_waiting}, capacity {cap}")
            if sizes[A] >= cap:
                self.report("8", level, f"|A|={sizes[A]} not below {cap}")
            if level < top:
                slack = sizes[H] + sizes[C] - params.hc_target(level)
                if abs(slack) > c:
                    self.report("9", level, f"c_{level}={slack} outside [-{c}, {c}]")
            if sizes[G] > params.guard_bound(level):
                self.report("O.1", level, f"|G|={sizes[G]} exceeds {params.guard_bound(level)}")

    def check_intervals(
        self, layout: BlockLayout, members: list[dict[Structure, list[Key]]]
    ) -> tuple[list[Span], dict[Key, tuple[Optional[int], Optional[int]]]]:
        entries = sorted(
            (Entry(key, level, s) for level, row in enumerate(members) for s, keys in row.items() for key in keys),
            key=lambda entry: entry.key,
        )
        guard_sides: dict[Key, tuple[Optional[int], Optional[int]]] = {}
        if len(entries) < 2:
            return [], guard_sides
        for end in (entries[0], entries[-1]):
            if end.structure is not G or end.level != 0:
                self.report("1", end.level, f"extreme {end.key} is not in G_0")
        spans: list[Span] = []
        left = entries[0]
        points: list[Entry] = []
        for entry in entries[1:]:
            if entry.structure is not G:
                points.append(entry)
                continue
            if not points:
                if len(entries) > 2:
                    self.report("1", entry.level, f"empty interval between {left.key} and {entry.key}")
            else:
                spans.append(Span(left, entry, points))
            left, points = entry, []
        for span in spans:
            levels = {point.level for point in span.points}
            if len(levels) > 1:
                self.report("1", span.level, f"interval ({span.left.key};{span.right.key}) mixes levels {sorted(levels)}")
            before = guard_sides.get(span.left.key, (None, None))
            guard_sides[span.left.key] = (before[0], span.level)
            after = guard_sides.get(span.right.key, (None, None))
            guard_sides[span.right.key] = (span.level, after[1])
        extremes = (entries[0].key, entries[-1].key)
        for key, (a, b) in guard_sides.items():
            if key in extremes or a is None or b is None:
                continue
            stored = next(e.level for e in entries if e.key == key)
            if stored != min(a, b):
                self.report("1", stored, f"guard {key} stored at level {stored}, incident levels {a} and {b}")
        return spans, guard_sides

    def check_runs(self, span: Span) -> None:
        c = self.params.c
        level = span.level
        all_climbing = all(point.structure is C for point in span.points)
        run: list[Entry] = []
        for point in span.points + [Entry(span.right.key, level, G)]:
            if point.structure in (H, C):
                run.append(point)
                continue
            if run:
                kinds = {entry.structure for entry in run}
                if len(kinds) > 1:
                    self.report("3", level, f"helping run next to climbing points at {run[0].key}")
                elif C in kinds and len(run) < c and not all_climbing:
                    self.report("2", level, f"climbing run of {len(run)} at {run[0].key}")
                elif H in kinds and len(run) >= c:
                    self.report("3", level, f"helping run of {len(run)} at {run[0].key}")
            run = []

    def check_working_set(
        self,
        layout: BlockLayout,
        members: list[dict[Structure, list[Key]]],
        guard_sides: dict[Key, tuple[Optional[int], Optional[int]]],
    ) -> None:
        assert self.oracle is not None
        params = self.params
        ages = self.oracle.ages()

        def below(level: int) -> int:
            return params.capacity(level - 1) if level >= 1 else 0

        for level, row in enumerate(members):
            bounds = {
                D: below(level),
                A: below(level),
                R: below(level) + len(row[A]),
                W: params.capacity(level),
                H: params.capacity(level),
                C: params.capacity(level),
            }
            for structure, bound in bounds.items():
                for key in row[structure]:
                    age = ages[key]
                    if age < bound:
                        self.report("4", level, f"{structure.name} point {key} has age {age} < {bound}")
        for key, (a, b) in guard_sides.items():
            if a is None or b is None:
                continue
            bound = below(max(a, b))
            age = ages[key]
            if age < bound:
                self.report("4", min(a, b), f"guard {key} has age {age} < {bound}")


def validate(
    source: Union[WorkingSetDictionary, Sequence[Key]],
    params: Optional[Parameters] = None,
    oracle: Optional[OracleModel] = None,
    working_set: bool = True,
) -> list[Violation]:
    """Check a dictionary (or a raw array) and return every violation found.

    Args:
        source: A dictionary, or an element array with its parameters
        params: Parameters for a raw array; ignored for a dictionary
        oracle: Optional oracle for content and working-set checks
        working_set: Set False to skip the working-set lower bounds

    Returns:
        Violations in check order; empty when the state is valid
    """
    if isinstance(source, WorkingSetDictionary):
        keys = source.snapshot()
        params = source.params
    else:
        keys = list(source)
        params = params if params is not None else Parameters()
    return StateChecker(keys, params, oracle, working_set).run()


def format_report(violations: Sequence[Violation]) -> str:
    """Render violations one per line."""
    return "\n".join(str(violation) for violation in violations)
