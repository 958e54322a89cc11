"""Data models for the working-set dictionary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Literal, Optional

from wsdict.constants import (
    DEFAULT_B_SIM,
    DEFAULT_D,
    DEFAULT_K,
    FIELD_CHECK_LEVELS,
    FIELD_SPARE_BITS,
    GROUP_CONSTANT,
    LIVENESS_BASE,
    LIVENESS_PER_D,
    SIZE_FIELDS,
)
from wsdict.errors import UsageError

Key = int


class Structure(IntEnum):
    """Sub-structures of a block, in memory order."""

    D = 0
    A = 1
    R = 2
    W = 3
    H = 4
    C = 5
    G = 6


# Structures whose size is encoded in D_i, in field order
ENCODED = (Structure.A, Structure.R, Structure.W, Structure.H, Structure.C, Structure.G)

# Every structure except G
NON_GUARD = (Structure.D, Structure.A, Structure.R, Structure.W, Structure.H, Structure.C)


class PointType(Enum):
    """Role of a point, determined by the structure holding it."""

    ARRIVING = "arriving"
    RESTING = "resting"
    WAITING = "waiting"
    HELPING = "helping"
    CLIMBING = "climbing"
    GUARDING = "guarding"

    @classmethod
    def of(cls, structure: Structure) -> PointType:
        return _TYPE_OF[structure]


_TYPE_OF = {
    Structure.D: PointType.ARRIVING,
    Structure.A: PointType.ARRIVING,
    Structure.R: PointType.RESTING,
    Structure.W: PointType.WAITING,
    Structure.H: PointType.HELPING,
    Structure.C: PointType.CLIMBING,
    Structure.G: PointType.GUARDING,
}


class Side(IntEnum):
    """Direction along key order; the value is the step sign."""

    LEFT = -1
    RIGHT = 1

    @property
    def opposite(self) -> Side:
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


class NeighborhoodKind(Enum):
    """Group queries around an element."""

    GIL = "GIL"  # group of immediate left points
    GIR = "GIR"  # group of immediate right points
    FGL = "FGL"  # first group left
    FGR = "FGR"  # first group right


@dataclass(frozen=True)
class Place:
    """A sub-structure address: level and structure."""

    level: int
    structure: Structure

    @property
    def point_type(self) -> PointType:
        return PointType.of(self.structure)


@dataclass(frozen=True)
class Parameters:
    """Represents the constants of one dictionary instance.

    c is fixed at 5; d and k size the blocks; b_sim is the simulated cache-line
    length used only by the harness meters.
    """

    c: int = GROUP_CONSTANT
    d: int = DEFAULT_D
    k: int = DEFAULT_K
    b_sim: int = DEFAULT_B_SIM

    def __post_init__(self) -> None:
        if self.c != GROUP_CONSTANT:
            raise UsageError(f"c must be {GROUP_CONSTANT}, got {self.c}")
        if self.k < 0:
            raise UsageError(f"k must be non-negative, got {self.k}")
        if self.b_sim < 1 or self.b_sim & (self.b_sim - 1):
            raise UsageError(f"b_sim must be a power of two, got {self.b_sim}")
        # past the first levels w_i outgrows the fields whenever d > 2 * SIZE_FIELDS
        if self.d <= 2 * SIZE_FIELDS:
            raise UsageError(f"d must exceed {2 * SIZE_FIELDS}, got {self.d}")
        for level in range(FIELD_CHECK_LEVELS):
            if self.d_width(level) < self.encoding_slots(level):
                raise UsageError(
                    f"d={self.d} with k={self.k} leaves {self.d_width(level)} slots in D_{level}, "
                    f"the size fields need {self.encoding_slots(level)}"
                )

    @classmethod
    def parse(cls, text: str, b_sim: int = DEFAULT_B_SIM) -> Parameters:
        """Parse the CLI form "d=24,k=3,c=5".

        Args:
            text: Comma-separated name=value pairs; empty means all defaults
            b_sim: Simulated cache-line length

        Returns:
            Parameters with the given overrides

        Raises:
            UsageError: If a name is unknown or a value is not an integer
        """
        values: dict[str, int] = {}
        for item in filter(None, (part.strip() for part in text.split(","))):
            name, sep, raw = item.partition("=")
            name = name.strip()
            if not sep or name not in ("c", "d", "k"):
                raise UsageError(f"unknown parameter {item!r}")
            try:
                values[name] = int(raw)
            except ValueError as e:
                raise UsageError(f"parameter {name} needs an integer, got {raw!r}") from e
        return cls(b_sim=b_sim, **values)

    @classmethod
    def proven(cls, d: int = DEFAULT_D) -> Parameters:
        """Return parameters with the smallest k meeting the liveness bound."""
        bound = math.log2(math.log2(LIVENESS_BASE + LIVENESS_PER_D * d)) + 1
        return cls(d=d, k=math.floor(bound) + 1)

    def capacity(self, level: int) -> int:
        """Return 2^(2^(level+k))."""
        return 1 << (1 << (level + self.k))

    def hc_target(self, level: int) -> int:
        """Return the target |H_i|+|C_i| = 4c * capacity(i)."""
        return 4 * self.c * self.capacity(level)

    def guard_bound(self, level: int) -> int:
        """Return the bound (4+2d+8c) * capacity(i) + 2c on |G_i|."""
        return (4 + 2 * self.d + 8 * self.c) * self.capacity(level) + 2 * self.c

    def field_width(self, level: int) -> int:
        """Return the bit width of one size field in D_i."""
        return self.guard_bound(level).bit_length() + FIELD_SPARE_BITS

    def encoding_slots(self, level: int) -> int:
        """Return the number of D_i slots carrying the size fields (two per bit)."""
        return 2 * SIZE_FIELDS * self.field_width(level)

    def d_width(self, level: int) -> int:
        """Return w_i = d * 2^(i+k)."""
        return self.d << (level + self.k)


@dataclass(frozen=True)
class Interval:
    """Represents a level-tagged range between two consecutive guards.

    A None endpoint stands for the open end at min(P) or max(P) being absent,
    which only happens for degenerate sizes.
    """

    left: Optional[Key]
    right: Optional[Key]
    level: int
    left_closed: bool
    right_closed: bool


@dataclass(frozen=True)
class FindResult:
    """Represents the outcome of find(e)."""

    level: int
    point_type: Optional[PointType]
    present: bool
    structure: Optional[Structure] = None


@dataclass
class InternalMove:
    """One change to one sub-structure of a block.

    gamma orders moves within a batch; s_in are inserted and s_out removed.
    """

    gamma: Structure
    s_in: list[Key] = field(default_factory=list)
    s_out: list[Key] = field(default_factory=list)

    @property
    def delta(self) -> int:
        return len(self.s_in) - len(self.s_out)


@dataclass
class ExternalMove:
    """The internal moves for one block of an external-movement batch."""

    gamma: int  # block index
    moves: list[InternalMove] = field(default_factory=list)

    @property
    def delta(self) -> int:
        return sum(move.delta for move in self.moves)


Verb = Literal["insert", "delete", "search", "pred", "succ"]


@dataclass(frozen=True)
class TraceOp:
    """Represents one line of a trace file."""

    verb: Verb
    key: Key

    def __str__(self) -> str:
        return f"{self.verb} {self.key}"


@dataclass(frozen=True)
class WorkloadSpec:
    """Represents a seeded workload generator configuration."""

    generator: str  # one of constants.GENERATORS
    n_ops: int
    universe: int  # keys are drawn from [0, universe)
    seed: int = 0
    arg: Optional[float] = None  # zipf exponent or working-set window


@dataclass(frozen=True)
class Violation:
    """Represents one validator finding."""

    invariant: str  # "1".."9" or "O.1"
    level: int
    detail: str

    def __str__(self) -> str:
        tag = self.invariant if self.invariant.startswith("O.") else f"I.{self.invariant}"
        return f"{tag} level={self.level} detail={self.detail}"
