"""Guarded-command models: modules of bounded integer variables and
probabilistic commands, plus labels and reward structures.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from rfidcheck.errors import ModelError

from .expressions import Expression, Literal, evaluate_constant
from .syntax import parse_expression

__all__ = (
    "Command",
    "GuardedCommandModule",
    "Model",
    "RewardItem",
    "RewardSpec",
    "Update",
    "Variable",
)

ExpressionLike = Union[Expression, str, int, float, bool]


def as_expression(value: ExpressionLike) -> Expression:
    """Converts strings and numbers to expressions; expressions are returned
    unchanged.
    """
    if isinstance(value, str):
        return parse_expression(value)
    if isinstance(value, (bool, int, float)):
        return Literal(value)
    return value


@dataclass(frozen=True)
class Variable:
    """Bounded integer variable ``name : [lo..hi] init init``."""

    name: str
    lo: int
    hi: int
    init: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ModelError(f"variable {self.name!r} has an empty range")
        if not self.lo <= self.init <= self.hi:
            raise ModelError(
                f"initial value {self.init} of variable {self.name!r} outside "
                f"[{self.lo}..{self.hi}]"
            )


@dataclass(frozen=True)
class Update:
    """One probabilistic alternative ``p : (x'=e) & (y'=f)`` of a command.
    An empty assignment list leaves the state unchanged.
    """

    probability: Expression
    assignments: Tuple[Tuple[str, Expression], ...] = ()

    @classmethod
    def create(
        cls,
        probability: ExpressionLike,
        assignments: Optional[Dict[str, ExpressionLike]] = None,
    ) -> "Update":
        return cls(
            as_expression(probability),
            tuple(
                (name, as_expression(value))
                for name, value in (assignments or {}).items()
            ),
        )

    def __post_init__(self) -> None:
        names = [name for name, _ in self.assignments]
        if len(set(names)) != len(names):
            raise ModelError(f"update assigns a variable twice: {names}")


@dataclass(frozen=True)
class Command:
    """``[action] guard -> updates``; the action name only serves to attach
    transition rewards.
    """

    guard: Expression
    updates: Tuple[Update, ...]
    action: Optional[str] = None

    @classmethod
    def create(
        cls,
        guard: ExpressionLike,
        updates: Sequence[Update],
        action: Optional[str] = None,
    ) -> "Command":
        return cls(as_expression(guard), tuple(updates), action or None)

    def __post_init__(self) -> None:
        if not self.updates:
            raise ModelError("command without updates")


@dataclass(frozen=True)
class GuardedCommandModule:
    name: str
    variables: Tuple[Variable, ...] = ()
    commands: Tuple[Command, ...] = ()

    @classmethod
    def create(
        cls,
        name: str,
        variables: Sequence[Variable] = (),
        commands: Sequence[Command] = (),
    ) -> "GuardedCommandModule":
        return cls(name, tuple(variables), tuple(commands))


@dataclass(frozen=True)
class RewardItem:
    """State reward item ``guard : value`` when `action` is ``None``,
    transition reward item ``[action] guard : value`` otherwise. The empty
    action name matches commands without an action.
    """

    guard: Expression
    value: Expression
    action: Optional[str] = None

    @classmethod
    def create(
        cls,
        guard: ExpressionLike,
        value: ExpressionLike,
        action: Optional[str] = None,
    ) -> "RewardItem":
        return cls(as_expression(guard), as_expression(value), action)

    @property
    def is_transition_reward(self) -> bool:
        return self.action is not None


@dataclass(frozen=True)
class RewardSpec:
    name: str
    items: Tuple[RewardItem, ...] = ()

    @classmethod
    def create(cls, name: str, items: Sequence[RewardItem]) -> "RewardSpec":
        return cls(name, tuple(items))


@dataclass
class Model:
    """A complete guarded-command model."""

    modules: List[GuardedCommandModule] = field(default_factory=list)
    constants: Dict[str, Expression] = field(default_factory=dict)
    """Constant definitions, evaluated in declaration order."""

    constant_types: Dict[str, str] = field(default_factory=dict)
    """Declared type of each constant, ``int``, ``double`` or ``bool``.
    Constants without a declared type keep the type of their value.
    """

    formulas: Dict[str, Expression] = field(default_factory=dict)
    labels: Dict[str, Expression] = field(default_factory=dict)
    rewards: List[RewardSpec] = field(default_factory=list)

    @property
    def variables(self) -> List[Variable]:
        """All variables in declaration order."""
        return [var for module in self.modules for var in module.variables]

    def constant_values(
        self, overrides: Optional[Dict[str, Union[bool, int, float]]] = None
    ) -> Dict[str, Union[bool, int, float]]:
        """Evaluates the constants of the model.

        Parameters:
            overrides: values that replace the declared definitions
        """
        values: Dict[str, Union[bool, int, float]] = {}
        overrides = overrides or {}
        for name, expr in self.constants.items():
            value = overrides[name] if name in overrides else evaluate_constant(expr, values)
            if self.constant_types.get(name) == "int":
                if isinstance(value, float) and not value.is_integer():
                    raise ModelError(f"constant {name!r} must be an integer")
                value = int(value)
            elif self.constant_types.get(name) == "double":
                value = float(value)
            values[name] = value
        for name, value in overrides.items():
            values.setdefault(name, value)
        return values

    def validate(self) -> None:
        """Checks that names are unique across the model.

        Raises:
            ModelError: on duplicate names
        """
        seen: Dict[str, str] = {}
        for kind, names in (
            ("constant", list(self.constants)),
            ("formula", list(self.formulas)),
            ("variable", [var.name for var in self.variables]),
        ):
            for name in names:
                if name in seen:
                    raise ModelError(
                        f"{kind} {name!r} clashes with {seen[name]} of the same name"
                    )
                seen[name] = kind

        module_names = [module.name for module in self.modules]
        if len(set(module_names)) != len(module_names):
            raise ModelError("duplicate module names")

        reward_names = [spec.name for spec in self.rewards]
        if len(set(reward_names)) != len(reward_names):
            raise ModelError("duplicate reward structure names")
