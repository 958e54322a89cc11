"""CLI interface for wsdict."""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar

import click

from wsdict import __version__
from wsdict.constants import (
    DEFAULT_RESUME_WINDOW,
    DEFAULT_UNIVERSE_BITS,
    EXIT_ERROR,
    EXIT_SUCCESS,
    EXIT_USAGE,
)
from wsdict.errors import UsageError
from wsdict.harness import Failure, RunOptions, RunResult, rows_to_csv, run_trace
from wsdict.models import Parameters, TraceOp
from wsdict.validate import format_report
from wsdict.workload import format_trace, gen_workload, parse_generator, read_trace

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

F = TypeVar("F", bound=Callable[..., Any])


def _configure_logging(level: str) -> None:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("wsdict").setLevel(level)


def _load_ops(
    trace: Optional[Path], gen: Optional[str], ops: int, universe: int, seed: int
) -> list[TraceOp]:
    """Read a trace file or generate one; exactly one source must be given."""
    if (trace is None) == (gen is None):
        raise UsageError("give exactly one of --trace and --gen")
    if trace is not None:
        return read_trace(trace)
    assert gen is not None
    return gen_workload(parse_generator(gen, ops, universe, seed))


def _dump_failure(failure: Failure, directory: Path) -> None:
    """Write the failing state and the trace prefix that produced it."""
    directory.mkdir(parents=True, exist_ok=True)
    state = directory / "failure.state"
    prefix = directory / "failure.trace"
    state.write_text("".join(f"{key}\n" for key in failure.snapshot), encoding="utf-8")
    prefix.write_text(format_trace(failure.prefix), encoding="utf-8")
    click.echo(
        f"✗ {failure.kind} at op {failure.op_index}: {failure.detail}\n"
        f"  state: {state}\n  trace: {prefix}",
        err=True,
    )


def _finish(result: RunResult, dump_dir: Path) -> None:
    if result.failure is not None:
        _dump_failure(result.failure, dump_dir)
    sys.exit(result.exit_code)


# Shared options of the commands that replay a trace
_source_options = [
    click.option("--trace", "trace", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Trace file to replay"),
    click.option("--gen", "gen", help="Generator NAME[:ARG]: uniform, zipf:s, working-set:w, adversarial-minmax"),
    click.option("--ops", default=1000, show_default=True, type=click.IntRange(min=0), help="Operations to generate"),
    click.option("--universe", default=1 << DEFAULT_UNIVERSE_BITS, show_default=True, type=click.IntRange(min=1), help="Key universe size"),
    click.option("--seed", default=0, show_default=True, type=int, help="Generator seed"),
    click.option("--params", "params_text", default="", help="Parameters as d=24,k=3,c=5"),
    click.option("--b-sim", default=64, show_default=True, type=int, help="Simulated cache-line length"),
    click.option("--dump-dir", default=".", show_default=True, type=click.Path(file_okay=False, path_type=Path), help="Where failure state and trace prefix are written"),
    click.option("--log-level", default="WARNING", show_default=True, type=click.Choice(LOG_LEVELS, case_sensitive=False), help="Logging level"),
]


def source_options(func: F) -> F:
    """Attach the trace source, parameter and logging options to a command."""
    for option in reversed(_source_options):
        func = option(func)
    return func


@click.group()
@click.version_option(version=__version__, prog_name="wsdict")
def main() -> None:
    """wsdict - implicit working-set dictionary and trace replay harness."""
    pass


@main.command()
@source_options
@click.option("--validate-every", default=0, show_default=True, type=click.IntRange(min=0), help="Validate after every N-th operation (0: never)")
@click.option("--working-set/--no-working-set", default=True, show_default=True, help="Include working-set lower bounds in validation")
@click.option("--resume-checks", default=0, show_default=True, type=click.IntRange(min=0), help="Resume a snapshot copy at N seeded random operations (0: never)")
@click.option("--resume-window", default=DEFAULT_RESUME_WINDOW, show_default=True, type=click.IntRange(min=0), help="Operations each resumed copy is compared for (0: to the end)")
@click.option("--fail-fast", is_flag=True, help="Stop at the first mismatch or violation")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="CSV report path (default: stdout)")
@click.option("--summary", is_flag=True, help="Print a JSON run summary to stderr")
def run(
    trace: Optional[Path],
    gen: Optional[str],
    ops: int,
    universe: int,
    seed: int,
    params_text: str,
    b_sim: int,
    dump_dir: Path,
    log_level: str,
    validate_every: int,
    working_set: bool,
    resume_checks: int,
    resume_window: int,
    fail_fast: bool,
    out: Optional[Path],
    summary: bool,
) -> None:
    """Replay a trace against the dictionary and the oracle in lockstep.

    Writes one CSV row per operation. Exits 2 on an answer mismatch or a
    resumed copy that departs from the original, and 3 on an invariant
    violation, after dumping the failing state.
    """
    _configure_logging(log_level.upper())
    try:
        params = Parameters.parse(params_text, b_sim=b_sim)
        trace_ops = _load_ops(trace, gen, ops, universe, seed)
        options = RunOptions(
            validate_every=validate_every,
            fail_fast=fail_fast,
            resume_checks=resume_checks,
            working_set=working_set,
            resume_window=resume_window,
            seed=seed,
        )
        result = run_trace(trace_ops, params, options)
    except UsageError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)

    report = rows_to_csv(result.rows)
    if out is None:
        click.echo(report, nl=False)
    else:
        out.write_text(report, encoding="utf-8")
    logger.info("replayed %d of %d operations", len(result.rows), len(trace_ops))
    if summary:
        click.echo(json.dumps(result.summary, indent=2), err=True)
    _finish(result, dump_dir)


@main.command()
@click.option("--gen", "gen", required=True, help="Generator NAME[:ARG]")
@click.option("--ops", default=1000, show_default=True, type=click.IntRange(min=0), help="Operations to generate")
@click.option("--universe", default=1 << DEFAULT_UNIVERSE_BITS, show_default=True, type=click.IntRange(min=1), help="Key universe size")
@click.option("--seed", default=0, show_default=True, type=int, help="Generator seed")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), help="Trace path (default: stdout)")
def gen(gen: str, ops: int, universe: int, seed: int, output: Optional[Path]) -> None:
    """Generate a deterministic workload trace."""
    try:
        text = format_trace(gen_workload(parse_generator(gen, ops, universe, seed)))
    except UsageError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_USAGE)

    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"✓ Wrote {ops} operations to {output}")
    sys.exit(EXIT_SUCCESS)


@main.command()
@source_options
@click.option("--working-set/--no-working-set", default=True, show_default=True, help="Include working-set lower bounds")
def validate(
    trace: Optional[Path],
    gen: Optional[str],
    ops: int,
    universe: int,
    seed: int,
    params_text: str,
    b_sim: int,
    dump_dir: Path,
    log_level: str,
    working_set: bool,
) -> None:
    """Replay a trace validating after every operation; print violation lines."""
    _configure_logging(log_level.upper())
    try:
        params = Parameters.parse(params_text, b_sim=b_sim)
        trace_ops = _load_ops(trace, gen, ops, universe, seed)
        result = run_trace(trace_ops, params, RunOptions(validate_every=1, fail_fast=True, working_set=working_set))
    except UsageError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)

    if result.violations:
        click.echo(format_report([violation for _, violation in result.violations]))
    elif result.failure is None:
        click.echo(f"✓ {len(result.rows)} operations, no violations")
    _finish(result, dump_dir)


if __name__ == "__main__":
    main()
