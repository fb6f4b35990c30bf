"""Abstract syntax of PCTL state formulas, path formulas and reward
queries.
"""

import math

from dataclasses import dataclass
from typing import Optional, Union

from rfidcheck.errors import InvalidArgumentError

__all__ = (
    "And",
    "Atom",
    "Bound",
    "BoundedUntil",
    "Cumulative",
    "Formula",
    "Instantaneous",
    "Next",
    "Not",
    "PathFormula",
    "ProbQuery",
    "Reachability",
    "RewardForm",
    "RewardQuery",
    "SteadyState",
    "TrueFormula",
    "Until",
)

COMPARISONS = ("<", "<=", ">", ">=")
QUERY = "=?"


@dataclass(frozen=True)
class Bound:
    """Comparison ``⋈ value`` of a probability or reward operator, or the
    numeric query ``=?``.
    """

    op: str
    value: Optional[float] = None

    def __post_init__(self) -> None:
        if self.op == QUERY:
            if self.value is not None:
                raise InvalidArgumentError("numeric queries have no threshold")
        elif self.op in COMPARISONS:
            if self.value is None:
                raise InvalidArgumentError(f"comparison {self.op} needs a threshold")
            if not math.isfinite(self.value):
                raise InvalidArgumentError(
                    f"threshold must be finite, got {self.value}"
                )
        else:
            raise InvalidArgumentError(f"unknown comparison operator: {self.op!r}")

    @classmethod
    def query(cls) -> "Bound":
        return cls(QUERY)

    @property
    def is_query(self) -> bool:
        return self.op == QUERY

    def holds(self, value: float) -> bool:
        """Returns whether the given value satisfies the comparison."""
        threshold = self.value
        assert threshold is not None
        if self.op == "<":
            return value < threshold
        elif self.op == "<=":
            return value <= threshold
        elif self.op == ">":
            return value > threshold
        else:
            return value >= threshold


@dataclass(frozen=True)
class TrueFormula:
    pass


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class Next:
    operand: "Formula"


@dataclass(frozen=True)
class BoundedUntil:
    left: "Formula"
    right: "Formula"
    bound: int

    def __post_init__(self) -> None:
        if self.bound < 0:
            raise InvalidArgumentError("time bound must be non-negative")


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


PathFormula = Union[Next, BoundedUntil, Until]


@dataclass(frozen=True)
class Instantaneous:
    """Expected state reward at time `t`."""

    t: int

    def __post_init__(self) -> None:
        if self.t < 0:
            raise InvalidArgumentError("time bound must be non-negative")


@dataclass(frozen=True)
class Cumulative:
    """Expected reward accumulated during the first `t` steps."""

    t: int

    def __post_init__(self) -> None:
        if self.t < 0:
            raise InvalidArgumentError("time bound must be non-negative")


@dataclass(frozen=True)
class Reachability:
    """Expected reward accumulated before reaching a target."""

    target: "Formula"


@dataclass(frozen=True)
class SteadyState:
    """Long-run average reward."""


RewardForm = Union[Instantaneous, Cumulative, Reachability, SteadyState]


@dataclass(frozen=True)
class ProbQuery:
    bound: Bound
    path: PathFormula

    def __post_init__(self) -> None:
        value = self.bound.value
        if value is not None and not 0 <= value <= 1:
            raise InvalidArgumentError(
                f"probability threshold {value!r} outside [0, 1]"
            )


@dataclass(frozen=True)
class RewardQuery:
    bound: Bound
    form: RewardForm
    reward_name: Optional[str] = None
    """Name of the reward structure to use; ``None`` selects the only (or
    default) structure.
    """

    def __post_init__(self) -> None:
        value = self.bound.value
        if value is not None and value < 0:
            raise InvalidArgumentError(f"reward threshold {value!r} is negative")


Formula = Union[TrueFormula, Atom, And, Not, ProbQuery, RewardQuery]
