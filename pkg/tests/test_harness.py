"""Tests for lockstep trace replay."""

import math
import random
import statistics
from collections.abc import Callable

import pytest

import wsdict.harness as harness
from wsdict.constants import CSV_COLUMNS, EXIT_INVARIANT_VIOLATION, EXIT_MISMATCH, EXIT_SUCCESS
from wsdict.dictionary import WorkingSetDictionary
from wsdict.errors import CorruptionError, InvariantFailure
from wsdict.harness import RunOptions, render_answer, resume_points, rows_to_csv, run_trace
from wsdict.models import TraceOp, Violation, WorkloadSpec
from wsdict.workload import gen_workload, parse_trace

TRACE = """
pred 5
insert 5
insert 5
insert 9
search 5
succ 9
delete 7
delete 9
"""


class TestReplay:
    """Tests for answers and per-operation rows."""

    def test_answers_are_rendered(self) -> None:
        """Test sentinels, booleans and the duplicate marker in rows."""
        result = run_trace(parse_trace(TRACE))
        answers = [row["answer"] for row in result.rows]
        assert answers == ["-inf", "true", "duplicate", "true", "true", "+inf", "false", "true"]
        assert result.exit_code == EXIT_SUCCESS

    def test_ws_is_taken_before_the_operation(self) -> None:
        """Test ws_oracle is empty for absent keys and counted before the op."""
        rows = run_trace(parse_trace(TRACE)).rows
        assert [row["ws_oracle"] for row in rows] == ["", "", "0", "", "1", "1", "", "1"]

    def test_rows_carry_meters(self) -> None:
        """Test every row has every column and integer meters."""
        for row in run_trace(parse_trace(TRACE)).rows:
            assert list(row) == list(CSV_COLUMNS)
            assert int(row["comparisons"]) >= 0
            float(row["charged_cost"])

    def test_validation_marks_rows(self) -> None:
        """Test validated rows say ok and others stay empty."""
        rows = run_trace(parse_trace(TRACE), options=RunOptions(validate_every=2)).rows
        assert [row["valid"] for row in rows] == ["", "ok"] * 4

    def test_generated_workload_validates(self) -> None:
        """Test a generated trace replays cleanly with periodic full validation."""
        ops = gen_workload(WorkloadSpec("working-set", 400, 5000, seed=2))
        result = run_trace(ops, options=RunOptions(validate_every=50))
        assert result.mismatches == 0
        assert result.violations == []
        assert result.summary["replayed"] == 400


class TestResume:
    """Tests for copies resumed from a snapshot at seeded points."""

    def test_points_are_seeded(self) -> None:
        """Test resume points are distinct, in range and fixed by the seed."""
        points = resume_points(200, 10, seed=4)
        assert points == resume_points(200, 10, seed=4)
        assert points == sorted(set(points))
        assert len(points) == 10
        assert all(1 <= point < 200 for point in points)
        assert resume_points(5, 10, seed=4) == [1, 2, 3, 4]
        assert resume_points(200, 0, seed=4) == []

    def test_resumed_copies_agree(self) -> None:
        """Test copies resumed at random points answer like the uninterrupted run."""
        ops = gen_workload(WorkloadSpec("working-set", 500, 5000, seed=2))
        result = run_trace(ops, options=RunOptions(resume_checks=6, seed=1))
        assert result.exit_code == EXIT_SUCCESS
        assert result.divergences == 0
        assert result.summary["divergences"] == 0

    def test_resume_window_limits_the_comparison(self) -> None:
        """Test copies with a window stop after that many operations."""
        ops = gen_workload(WorkloadSpec("uniform", 300, 1000, seed=3))
        result = run_trace(ops, options=RunOptions(resume_checks=20, resume_window=5, seed=2))
        assert result.divergences == 0

    def test_divergence_is_reported(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test a copy that lost its state is a divergence with the mismatch exit code."""
        monkeypatch.setattr(
            WorkingSetDictionary, "from_snapshot", classmethod(lambda cls, keys, params=None, meters=None: cls(params))
        )
        ops = parse_trace("insert 1\ninsert 2\ninsert 3\nsearch 2\nsearch 3\n")
        result = run_trace(ops, options=RunOptions(resume_checks=1, seed=0))
        assert result.divergences >= 1
        assert result.failure is not None and result.failure.kind == "divergence"
        assert result.exit_code == EXIT_MISMATCH


class TestFailures:
    """Tests for mismatch and violation handling."""

    def test_mismatch(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test a wrong answer is recorded with the failing state and prefix."""
        monkeypatch.setattr(harness, "apply_op", lambda dictionary, op: "wrong")
        result = run_trace(parse_trace(TRACE))
        assert result.exit_code == EXIT_MISMATCH
        assert result.mismatches == len(result.rows)
        assert result.failure is not None
        assert result.failure.op_index == 0
        assert result.failure.prefix == [TraceOp("pred", 5)]

    def test_fail_fast_stops_replay(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test fail_fast stops after the first failing operation."""
        monkeypatch.setattr(harness, "apply_op", lambda dictionary, op: "wrong")
        result = run_trace(parse_trace(TRACE), options=RunOptions(fail_fast=True))
        assert len(result.rows) == 1

    def test_violation(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test a validator finding sets the violation exit code."""
        monkeypatch.setattr(harness, "validate", lambda *args, **kwargs: [Violation("9", 0, "c_0=6")])
        result = run_trace(parse_trace(TRACE), options=RunOptions(validate_every=4))
        assert result.exit_code == EXIT_INVARIANT_VIOLATION
        assert result.failure is not None
        assert result.failure.op_index == 3
        assert result.summary["violations"] == 2
        assert result.rows[3]["valid"] == "fail"

    def test_invariant_failure_inside_an_operation(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test an InvariantFailure raised by fix ends the replay as a violation."""

        def broken(self: WorkingSetDictionary, i: int) -> None:
            raise InvariantFailure(f"fix({i}) did not settle")

        monkeypatch.setattr(WorkingSetDictionary, "fix", broken)
        ops = [TraceOp("insert", key) for key in range(1, 9)]
        result = run_trace(ops)
        assert result.exit_code == EXIT_INVARIANT_VIOLATION
        assert result.failure is not None
        assert result.failure.kind == "violation"
        assert result.failure.op_index == 3
        assert "InvariantFailure: fix(0) did not settle" in result.failure.detail
        assert result.failure.prefix == ops[:4]
        assert len(result.rows) == 3

    def test_corruption_inside_an_operation(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test a CorruptionError raised mid-operation is recorded, not propagated."""

        def corrupt(dictionary: WorkingSetDictionary, op: TraceOp) -> None:
            raise CorruptionError("read of vacant slot 3")

        monkeypatch.setattr(harness, "apply_op", corrupt)
        result = run_trace(parse_trace(TRACE))
        assert result.exit_code == EXIT_INVARIANT_VIOLATION
        assert result.failure is not None and result.failure.op_index == 0
        assert result.summary["replayed"] == 0


class TestReport:
    """Tests for CSV rendering and the summary."""

    def test_csv_header_and_rows(self) -> None:
        """Test the CSV has the fixed header and one line per op."""
        text = rows_to_csv(run_trace(parse_trace(TRACE)).rows)
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 9

    def test_summary_totals(self) -> None:
        """Test the summary reports counts and meter totals."""
        summary = run_trace(parse_trace(TRACE)).summary
        assert summary["ops"] == 8
        assert summary["final_size"] == 1
        assert summary["mismatches"] == 0
        assert summary["comparisons"] > 0
        assert summary["shift_up_stalls"] == 0

    def test_render_answer(self) -> None:
        """Test answer rendering for each answer kind."""
        assert render_answer(TraceOp("pred", 1), None) == "-inf"
        assert render_answer(TraceOp("succ", 1), None) == "+inf"
        assert render_answer(TraceOp("search", 1), False) == "false"
        assert render_answer(TraceOp("pred", 1), 0) == "0"


def fitted_constant(rows: list[dict[str, str]], column: str, scale: Callable[[dict[str, str]], float]) -> float:
    return max(float(row[column]) / scale(row) for row in rows)


@pytest.mark.slow
class TestCostBounds:
    """Tests for the metered cost bounds on generated traces."""

    def test_search_cost_does_not_depend_on_the_universe(self) -> None:
        """Test comparisons per hit search over log2(ws+2) stay within 4x across universes."""
        constants = []
        for bits in (10, 12, 14, 16):
            ops = gen_workload(WorkloadSpec("working-set", 600, 1 << bits, seed=bits, arg=16))
            rows = [
                row
                for row in run_trace(ops).rows
                if row["op"] == "search" and row["answer"] == "true"
            ]
            assert rows
            ratios = [int(row["comparisons"]) / math.log2(int(row["ws_oracle"]) + 2) for row in rows]
            constants.append(statistics.median(ratios))
        assert max(constants) / statistics.median(constants) <= 4

    def test_insert_charge_is_logarithmic(self) -> None:
        """Test charged cost per insert stays within 3x of C*log2(n+2) as n grows."""
        keys = list(range(0, 24_000, 10))
        random.Random(11).shuffle(keys)
        rows = run_trace([TraceOp("insert", key) for key in keys]).rows

        def log_n(row: dict[str, str]) -> float:
            return math.log2(int(row["op_index"]) + 3)

        fitted = fitted_constant(rows[800:1400], "charged_cost", log_n)
        assert fitted_constant(rows[1400:], "charged_cost", log_n) <= 3 * fitted
        for row in rows[16:]:
            n = int(row["op_index"]) + 1
            assert int(row["levels_touched"]) <= math.log2(math.log2(n)) + 3

    @pytest.mark.parametrize("generator", ["uniform", "adversarial-minmax"])
    def test_batches_stay_within_their_block_scale(self, generator: str) -> None:
        """Test moveable-dictionary operations per batch stay within 64 * 2^(gamma_end+k)."""
        ops = gen_workload(WorkloadSpec(generator, 2000, 1 << 12, seed=5))
        summary = run_trace(ops, options=RunOptions(validate_every=100)).summary
        assert summary["exit_code"] == EXIT_SUCCESS
        assert summary["batches"] > 0
        assert summary["max_batch_op_ratio"] <= 64
        assert summary["shift_up_stalls"] == 0
