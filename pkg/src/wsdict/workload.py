"""Trace files and seeded workload generators."""

from __future__ import annotations

import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Optional, cast

import numpy as np

from wsdict.constants import (
    DEFAULT_WORKING_SET_WINDOW,
    DEFAULT_ZIPF_EXPONENT,
    GENERATORS,
    SEARCH_SHARE,
    TRACE_VERBS,
)
from wsdict.errors import UsageError
from wsdict.models import Key, TraceOp, Verb, WorkloadSpec

logger = logging.getLogger(__name__)


def parse_trace(text: str) -> list[TraceOp]:
    """Parse trace text: one "<verb> <key>" per line; blank lines and # comments skipped.

    Raises:
        UsageError: On an unknown verb or a key that is not an unsigned integer
    """
    ops: list[TraceOp] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in TRACE_VERBS:
            raise UsageError(f"line {number}: expected '<verb> <key>', got {raw!r}")
        verb, key = parts
        if not key.isdigit():
            raise UsageError(f"line {number}: key must be an unsigned integer, got {key!r}")
        ops.append(TraceOp(cast(Verb, verb), int(key)))
    return ops


def read_trace(path: Path) -> list[TraceOp]:
    return parse_trace(path.read_text(encoding="utf-8"))


def format_trace(ops: Iterable[TraceOp]) -> str:
    return "".join(f"{op}\n" for op in ops)


def parse_generator(
    text: str, n_ops: int, universe: int, seed: int = 0
) -> WorkloadSpec:
    """Parse the --gen form NAME[:ARG], e.g. "zipf:1.2" or "working-set:16".

    Raises:
        UsageError: On an unknown generator, a bad argument or a bad size
    """
    name, _, raw = text.partition(":")
    if name not in GENERATORS:
        raise UsageError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    arg: Optional[float] = None
    if raw:
        try:
            arg = float(raw)
        except ValueError as e:
            raise UsageError(f"generator argument must be a number, got {raw!r}") from e
    if n_ops < 0 or universe < 1:
        raise UsageError(f"need n_ops >= 0 and universe >= 1, got {n_ops} and {universe}")
    return WorkloadSpec(name, n_ops, universe, seed, arg)


class LiveKeys:
    """Keys currently present, with O(1) random choice and removal."""

    def __init__(self) -> None:
        self.keys: list[Key] = []
        self.index: dict[Key, int] = {}

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: Key) -> bool:
        return key in self.index

    def add(self, key: Key) -> None:
        self.index[key] = len(self.keys)
        self.keys.append(key)

    def remove(self, key: Key) -> None:
        position = self.index.pop(key)
        last = self.keys.pop()
        if last != key:
            self.keys[position] = last
            self.index[last] = position

    def choice(self, rng: np.random.Generator) -> Key:
        return self.keys[int(rng.integers(len(self.keys)))]


class TraceBuilder:
    """Accumulates operations while tracking which keys are present."""

    def __init__(self, spec: WorkloadSpec) -> None:
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.live = LiveKeys()
        self.recency: list[Key] = []
        self.ops: list[TraceOp] = []

    @property
    def full(self) -> bool:
        return len(self.ops) >= self.spec.n_ops

    def fresh_key(self) -> Optional[Key]:
        if len(self.live) >= self.spec.universe:
            return None
        while True:
            key = int(self.rng.integers(self.spec.universe))
            if key not in self.live:
                return key

    def insert(self, key: Key) -> None:
        self.ops.append(TraceOp("insert", key))
        self.live.add(key)
        self.recency.insert(0, key)

    def delete(self, key: Key) -> None:
        self.ops.append(TraceOp("delete", key))
        self.live.remove(key)
        self.recency.remove(key)

    def search(self, key: Key) -> None:
        self.ops.append(TraceOp("search", key))
        if key in self.live:
            self.recency.remove(key)
            self.recency.insert(0, key)

    def query(self, key: Key) -> None:
        verb: Verb = "pred" if self.rng.random() < 0.5 else "succ"
        self.ops.append(TraceOp(verb, key))


def _uniform(builder: TraceBuilder) -> None:
    rng = builder.rng
    while not builder.full:
        roll = rng.random()
        if roll < SEARCH_SHARE and len(builder.live):
            builder.search(builder.live.choice(rng))
        elif roll < SEARCH_SHARE + 0.05:
            builder.query(int(rng.integers(builder.spec.universe)))
        elif roll < SEARCH_SHARE + 0.1 and len(builder.live):
            builder.delete(builder.live.choice(rng))
        else:
            key = builder.fresh_key()
            if key is None:
                builder.delete(builder.live.choice(rng))
            else:
                builder.insert(key)


def _zipf(builder: TraceBuilder) -> None:
    rng = builder.rng
    universe = builder.spec.universe
    exponent = builder.spec.arg if builder.spec.arg is not None else DEFAULT_ZIPF_EXPONENT
    if exponent <= 1.0:
        raise UsageError(f"zipf exponent must be greater than 1, got {exponent}")
    # rank r maps to a shuffled key
    keys = rng.permutation(universe)
    while not builder.full:
        key = int(keys[(int(rng.zipf(exponent)) - 1) % universe])
        roll = rng.random()
        if key not in builder.live:
            builder.insert(key)
        elif roll < 0.9:
            builder.search(key)
        elif roll < 0.95:
            builder.query(key)
        else:
            builder.delete(key)


def _working_set(builder: TraceBuilder) -> None:
    rng = builder.rng
    window = int(builder.spec.arg) if builder.spec.arg is not None else DEFAULT_WORKING_SET_WINDOW
    if window < 1:
        raise UsageError(f"working-set window must be positive, got {window}")
    while not builder.full:
        roll = rng.random()
        if roll < SEARCH_SHARE and builder.recency:
            # the r-th most recent key has working-set number r < window
            rank = int(rng.integers(min(window, len(builder.recency))))
            builder.search(builder.recency[rank])
        elif roll < SEARCH_SHARE + 0.05 and len(builder.live) > window:
            builder.delete(builder.recency[-1])
        elif roll < SEARCH_SHARE + 0.1 and len(builder.live):
            builder.query(builder.live.choice(rng))
        else:
            key = builder.fresh_key()
            if key is None:
                builder.delete(builder.recency[-1])
            else:
                builder.insert(key)


def _adversarial_minmax(builder: TraceBuilder) -> None:
    rng = builder.rng
    universe = builder.spec.universe
    quarter = universe // 4 if universe >= 8 else 0
    warmup = min(builder.spec.n_ops // 4, max(universe // 2, 1))
    while len(builder.ops) < warmup:
        key = int(rng.integers(quarter, universe - quarter))
        if key in builder.live:
            continue
        builder.insert(key)
    step = 0
    while not builder.full:
        if not len(builder.live):
            key = builder.fresh_key()
            if key is None:
                break
            builder.insert(key)
            continue
        low, high = min(builder.live.keys), max(builder.live.keys)
        phase = step % 5
        step += 1
        if phase == 0:
            builder.delete(low)
        elif phase == 1:
            builder.delete(high)
        elif phase == 2:
            below = low - 1 - int(rng.integers(4))
            key = below if below >= 0 and below not in builder.live else builder.fresh_key()
            if key is not None:
                builder.insert(key)
        elif phase == 3:
            above = high + 1 + int(rng.integers(4))
            key = above if above < universe and above not in builder.live else builder.fresh_key()
            if key is not None:
                builder.insert(key)
        else:
            builder.search(builder.live.choice(rng))


GENERATOR_FUNCTIONS = {
    "uniform": _uniform,
    "zipf": _zipf,
    "working-set": _working_set,
    "adversarial-minmax": _adversarial_minmax,
}


def gen_workload(spec: WorkloadSpec) -> list[TraceOp]:
    """Generate a deterministic trace; the same spec always gives the same trace.

    Raises:
        UsageError: If the spec names an unknown generator or a bad argument
    """
    if spec.generator not in GENERATOR_FUNCTIONS:
        raise UsageError(f"unknown generator {spec.generator!r}")
    builder = TraceBuilder(spec)
    GENERATOR_FUNCTIONS[spec.generator](builder)
    logger.info("generated %d %s operations (seed %d)", len(builder.ops), spec.generator, spec.seed)
    return builder.ops[: spec.n_ops]
