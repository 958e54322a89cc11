"""Shared test helpers for wsdict tests."""

from collections.abc import Iterable, Sequence

from wsdict.dictionary import WorkingSetDictionary
from wsdict.layout import BlockLayout, encode_sizes
from wsdict.meters import CostMeters
from wsdict.models import Parameters, Structure, TraceOp, Violation
from wsdict.oracle import OracleModel
from wsdict.store import ElementStore
from wsdict.validate import validate


def build(keys: Iterable[int], params: Parameters | None = None) -> WorkingSetDictionary:
    """Insert keys in order into a fresh metered dictionary."""
    dictionary = WorkingSetDictionary(params, CostMeters())
    for key in keys:
        dictionary.insert(key)
    return dictionary


def checked(
    dictionary: WorkingSetDictionary, oracle: OracleModel | None = None
) -> list[Violation]:
    """Validate everything, the working-set bounds included when an oracle is given."""
    return validate(dictionary, oracle=oracle, working_set=True)


def mixed_ops(keys: Sequence[int]) -> list[TraceOp]:
    """Insert every key, search every other one, then delete every third one."""
    ops = [TraceOp("insert", key) for key in keys]
    ops += [TraceOp("search", key) for key in keys[::2]]
    ops += [TraceOp("delete", key) for key in keys[::3]]
    return ops


def two_level_state(
    params: Parameters | None = None,
    top_points: int = 300,
    spacing: int = 10,
    extra_climbing: int = 0,
) -> tuple[WorkingSetDictionary, OracleModel]:
    """Build a dictionary with a full block 0 and a compact block 1.

    Block 0 holds the interval (min; g): D, R and W at their widths and a
    single climbing run of the slack target plus `extra_climbing`, so the
    state is valid only when that is within [-c, c]. Block 1 holds the
    interval (g; max) in D. Keys are multiples of `spacing` so that fresh keys
    fit between them. The oracle accesses the keys oldest first: block 1, the
    guards, then C, W, R and D.
    """
    params = params if params is not None else Parameters()
    widths = {
        Structure.D: params.d_width(0),
        Structure.R: params.capacity(0),
        Structure.W: params.capacity(0),
        Structure.C: params.hc_target(0) + extra_climbing,
    }
    low_points = sum(widths.values())
    n = low_points + top_points + 3
    keys = [spacing * index for index in range(n)]
    low, high = keys[0], keys[-1]
    guard = keys[low_points + 1]
    parts: dict[Structure, list[int]] = {}
    cursor = 1
    for structure, width in widths.items():
        parts[structure] = keys[cursor : cursor + width]
        cursor += width
    top = keys[low_points + 2 : -1]

    row = [0] * len(Structure)
    for structure, width in widths.items():
        row[structure] = width
    row[Structure.G] = 3
    block0 = parts[Structure.D] + parts[Structure.R] + parts[Structure.W] + parts[Structure.C]
    store = ElementStore(block0 + [low, guard, high] + top)
    layout = BlockLayout(params, [0, n - top_points], [row, [top_points] + [0] * (len(Structure) - 1)])
    assert encode_sizes(store, layout, 0)

    oracle = OracleModel()
    for key in top + [guard, low, high]:
        oracle.insert(key)
    for structure in (Structure.C, Structure.W, Structure.R, Structure.D):
        for key in parts[structure]:
            oracle.insert(key)
    dictionary = WorkingSetDictionary.from_snapshot(store.snapshot(), params, CostMeters())
    return dictionary, oracle
