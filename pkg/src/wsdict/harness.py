"""Lockstep trace replay: dictionary against oracle, with metering and validation."""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from wsdict.constants import (
    CSV_COLUMNS,
    DEFAULT_RESUME_WINDOW,
    DUPLICATE_TEXT,
    EXIT_INVARIANT_VIOLATION,
    EXIT_MISMATCH,
    EXIT_SUCCESS,
    NEG_INF_TEXT,
    POS_INF_TEXT,
)
from wsdict.dictionary import WorkingSetDictionary
from wsdict.errors import CorruptionError, DuplicateKeyError, InvariantFailure
from wsdict.meters import CostMeters
from wsdict.models import Key, Parameters, TraceOp, Violation
from wsdict.oracle import Answer, OracleModel
from wsdict.validate import validate

logger = logging.getLogger(__name__)


@dataclass
class RunOptions:
    """Replay options.

    validate_every runs the validator after every N-th operation (0 disables).
    resume_checks picks that many seeded random points of the trace; at each
    one a copy is rebuilt from the snapshot alone and replayed beside the
    original for resume_window operations (0: to the end of the trace).
    working_set adds the working-set lower bounds to validation.
    """

    validate_every: int = 0
    fail_fast: bool = False
    resume_checks: int = 0
    working_set: bool = True
    resume_window: int = DEFAULT_RESUME_WINDOW
    seed: int = 0


@dataclass
class Failure:
    """The first mismatch or invariant violation of a run."""

    op_index: int
    kind: str  # "mismatch", "divergence" or "violation"
    detail: str
    snapshot: list[Key]
    prefix: list[TraceOp]


@dataclass
class RunResult:
    rows: list[dict[str, str]] = field(default_factory=list)
    mismatches: int = 0
    divergences: int = 0
    violations: list[tuple[int, Violation]] = field(default_factory=list)
    failure: Optional[Failure] = None
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.failure is None:
            return EXIT_SUCCESS
        if self.failure.kind == "violation":
            return EXIT_INVARIANT_VIOLATION
        return EXIT_MISMATCH


def render_answer(op: TraceOp, answer: Answer) -> str:
    """Render an answer for the CSV: booleans lower-case, missing neighbours as -inf/+inf."""
    if isinstance(answer, bool):
        return "true" if answer else "false"
    if answer is None:
        return NEG_INF_TEXT if op.verb == "pred" else POS_INF_TEXT
    return str(answer)


def apply_op(dictionary: WorkingSetDictionary, op: TraceOp) -> Answer:
    """Apply one trace operation to the dictionary and return its answer."""
    if op.verb == "insert":
        try:
            dictionary.insert(op.key)
        except DuplicateKeyError:
            return DUPLICATE_TEXT
        return True
    if op.verb == "delete":
        return dictionary.delete(op.key)
    if op.verb == "search":
        return dictionary.search(op.key)
    if op.verb == "pred":
        return dictionary.predecessor(op.key)
    return dictionary.successor(op.key)


@dataclass
class ResumedCopy:
    """A dictionary rebuilt from a snapshot, replayed beside the original."""

    start: int
    stop: int
    dictionary: WorkingSetDictionary


def resume_points(n_ops: int, count: int, seed: int) -> list[int]:
    """Pick up to `count` distinct operation indices in [1, n_ops) to resume at."""
    if count <= 0 or n_ops < 2:
        return []
    rng = np.random.default_rng(seed)
    chosen = rng.choice(np.arange(1, n_ops), size=min(count, n_ops - 1), replace=False)
    return sorted(int(index) for index in chosen)


def _safe_snapshot(dictionary: WorkingSetDictionary) -> list[Key]:
    try:
        return dictionary.snapshot()
    except CorruptionError:
        # a failed operation can leave holes
        return list(dictionary.store.slots)


def run_trace(
    ops: Sequence[TraceOp],
    params: Optional[Parameters] = None,
    options: Optional[RunOptions] = None,
) -> RunResult:
    """Replay ops through a dictionary and the oracle in lockstep.

    An InvariantFailure or CorruptionError raised by the dictionary ends the
    replay with a "violation" failure.

    Args:
        ops: Trace operations
        params: Dictionary parameters
        options: Replay options

    Returns:
        Per-operation rows, the first failure (if any) and a run summary
    """
    params = params if params is not None else Parameters()
    options = options if options is not None else RunOptions()
    meters = CostMeters(b_sim=params.b_sim)
    dictionary = WorkingSetDictionary(params, meters)
    oracle = OracleModel()
    result = RunResult()
    pending = resume_points(len(ops), options.resume_checks, options.seed)
    copies: list[ResumedCopy] = []

    def fail(index: int, kind: str, detail: str) -> None:
        if result.failure is None:
            result.failure = Failure(index, kind, detail, _safe_snapshot(dictionary), list(ops[: index + 1]))
            logger.error("op %d (%s): %s %s", index, ops[index], kind, detail)

    for index, op in enumerate(ops):
        while pending and pending[0] == index:
            pending.pop(0)
            stop = index + options.resume_window if options.resume_window else len(ops)
            copies.append(
                ResumedCopy(index, stop, WorkingSetDictionary.from_snapshot(dictionary.snapshot(), params))
            )
        ws = oracle.ws(op.key) if op.key in oracle else None
        expected = oracle.apply(op)
        meters.begin_op()
        try:
            answer = apply_op(dictionary, op)
        except (InvariantFailure, CorruptionError) as e:
            meters.end_op()
            fail(index, "violation", f"{type(e).__name__}: {e}")
            break
        cost = meters.end_op()
        valid = ""
        if answer != expected:
            result.mismatches += 1
            fail(index, "mismatch", f"got {render_answer(op, answer)}, expected {render_answer(op, expected)}")
        for copy in list(copies):
            detail = _compare_copy(copy, op, answer, dictionary, last=index + 1 >= copy.stop)
            if detail is not None:
                result.divergences += 1
                fail(index, "divergence", f"copy resumed at op {copy.start}: {detail}")
            if detail is not None or index + 1 >= copy.stop:
                copies.remove(copy)
        if options.validate_every and (index + 1) % options.validate_every == 0:
            found = validate(dictionary, oracle=oracle, working_set=options.working_set)
            valid = "fail" if found else "ok"
            for violation in found:
                result.violations.append((index, violation))
            if found:
                fail(index, "violation", str(found[0]))
        result.rows.append(
            {
                "op_index": str(index),
                "op": op.verb,
                "key": str(op.key),
                "answer": render_answer(op, answer),
                "ws_oracle": "" if ws is None else str(ws),
                "comparisons": str(cost["comparisons"]),
                "element_moves": str(cost["element_moves"]),
                "charged_cost": f"{cost['charged_cost']:.3f}",
                "cache_lines": str(cost["cache_lines"]),
                "levels_touched": str(cost["levels_touched"]),
                "valid": valid,
            }
        )
        if result.failure is not None and options.fail_fast:
            break

    result.summary = summarize(result, meters, dictionary, len(ops))
    return result


def _compare_copy(
    copy: ResumedCopy,
    op: TraceOp,
    answer: Answer,
    original: WorkingSetDictionary,
    last: bool,
) -> Optional[str]:
    """Apply op to a resumed copy; describe how it departs from the original, if it does."""
    try:
        got = apply_op(copy.dictionary, op)
    except (InvariantFailure, CorruptionError) as e:
        return f"{type(e).__name__}: {e}"
    if got != answer:
        return f"answered {render_answer(op, got)}, original {render_answer(op, answer)}"
    if last and copy.dictionary.snapshot() != original.snapshot():
        return "element array differs from the original"
    return None


def summarize(
    result: RunResult, meters: CostMeters, dictionary: WorkingSetDictionary, n_ops: int
) -> dict[str, Any]:
    try:
        levels = len(dictionary.describe())
    except (CorruptionError, InvariantFailure):
        levels = -1
    return {
        "ops": n_ops,
        "replayed": len(result.rows),
        "final_size": len(dictionary),
        "levels": levels,
        "mismatches": result.mismatches,
        "divergences": result.divergences,
        "violations": len(result.violations),
        "exit_code": result.exit_code,
        "comparisons": meters.comparisons,
        "element_moves": meters.element_moves,
        "charged_cost": round(meters.charged_cost, 3),
        "cache_lines": meters.cache_lines,
        "cache_model": f"distinct lines per op, b_sim={meters.b_sim}",
        "batches": meters.batches,
        "max_batch_moves": meters.max_batch_moves,
        "max_batch_ratio": round(meters.max_batch_ratio, 3),
        "max_batch_ops": meters.max_batch_ops,
        "max_batch_op_ratio": round(meters.max_batch_op_ratio, 3),
        "shift_up_stalls": meters.shift_up_stalls,
    }


def rows_to_csv(rows: Sequence[dict[str, str]]) -> str:
    """Render report rows as CSV text with the fixed column order."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()
