"""Explicit-state construction of the chain described by a guarded-command
model.
"""

import numpy as np

from dataclasses import dataclass
from logging import getLogger
from scipy.sparse import coo_matrix, csr_matrix
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from rfidcheck.dtmc import Dtmc, RewardStructure
from rfidcheck.errors import ModelError, StateLimitExceededError

from .expressions import Scope, compile_expression, compile_source, translate_all
from .model import (
    Command,
    ExpressionLike,
    GuardedCommandModule,
    Model,
    RewardSpec,
    as_expression,
)

__all__ = ("BuildResult", "DEFAULT_STATE_LIMIT", "build")

log = getLogger(__name__)

DEFAULT_STATE_LIMIT = 5_000_000

PROBABILITY_TOLERANCE = 1e-9

State = Tuple[int, ...]


@dataclass(frozen=True)
class BuildResult:
    """The chain built from a model together with the valuation of each of
    its states.
    """

    dtmc: Dtmc
    states: np.ndarray
    """Integer matrix with one row per state and one column per variable."""

    variables: Tuple[str, ...]

    @property
    def rewards(self) -> Mapping[str, RewardStructure]:
        return self.dtmc.rewards

    def column(self, variable: str) -> np.ndarray:
        """Returns the value of a variable in every state."""
        return self.states[:, self.variables.index(variable)]

    def describe(self, state: int) -> str:
        return _describe(self.variables, tuple(self.states[state]))

    def find(self, **values: int) -> List[int]:
        """Returns the states whose variables have the given values."""
        mask = np.ones(self.states.shape[0], dtype=bool)
        for name, value in values.items():
            mask &= self.column(name) == value
        return [int(s) for s in np.flatnonzero(mask)]


def _describe(names: Sequence[str], state: Sequence[int]) -> str:
    return "(" + ", ".join(f"{n}={int(v)}" for n, v in zip(names, state)) + ")"


@dataclass
class _CompiledCommand:
    description: str
    action: Optional[str]
    guard: Callable[[State], Any]
    probabilities: Callable[[State], Tuple[float, ...]]
    successors: List[Callable[[State], State]]
    assigned: List[Tuple[int, ...]]


@dataclass
class _CompiledReward:
    name: str
    state_items: List[Tuple[Callable[[State], Any], Callable[[State], Any]]]
    transition_items: List[
        Tuple[Optional[str], Callable[[State], Any], Callable[[State, State], Any]]
    ]


def _compile_command(
    module: GuardedCommandModule,
    index: int,
    command: Command,
    scope: Scope,
    n_vars: int,
) -> _CompiledCommand:
    description = f"command {index + 1} of module {module.name!r}"
    if command.action:
        description += f" [{command.action}]"

    try:
        guard = compile_expression(command.guard, scope)
        probs = translate_all([u.probability for u in command.updates], scope)
        probabilities = compile_source("(" + ", ".join(probs) + ",)", "s")

        successors = []
        assigned = []
        for update in command.updates:
            elements = [f"s[{i}]" for i in range(n_vars)]
            indices = []
            for name, expr in update.assignments:
                if name not in scope.variables:
                    raise ModelError(f"update assigns unknown variable {name!r}")
                var_index = scope.variables[name]
                elements[var_index] = translate_all([expr], scope)[0]
                indices.append(var_index)
            successors.append(compile_source("(" + ", ".join(elements) + ",)", "s"))
            assigned.append(tuple(indices))
    except ModelError as ex:
        raise ModelError(f"{description}: {ex}") from None

    return _CompiledCommand(
        description, command.action, guard, probabilities, successors, assigned
    )


def _compile_reward(spec: RewardSpec, scope: Scope) -> _CompiledReward:
    result = _CompiledReward(spec.name, [], [])
    try:
        for item in spec.items:
            guard = compile_expression(item.guard, scope)
            if item.is_transition_reward:
                value = compile_expression(item.value, scope, allow_primed=True)
                result.transition_items.append((item.action, guard, value))
            else:
                result.state_items.append(
                    (guard, compile_expression(item.value, scope))
                )
    except ModelError as ex:
        raise ModelError(f"reward structure {spec.name!r}: {ex}") from None
    return result


def _as_model(
    model: Union[Model, Sequence[GuardedCommandModule]],
    rewards: Sequence[RewardSpec],
    labels: Optional[Mapping[str, ExpressionLike]],
) -> Model:
    if isinstance(model, Model):
        result = Model(
            list(model.modules),
            dict(model.constants),
            dict(model.constant_types),
            dict(model.formulas),
            dict(model.labels),
            list(model.rewards),
        )
    else:
        result = Model(modules=list(model))
    result.rewards.extend(rewards)
    for name, expr in (labels or {}).items():
        result.labels[name] = as_expression(expr)
    return result


def build(
    model: Union[Model, Sequence[GuardedCommandModule]],
    rewards: Sequence[RewardSpec] = (),
    *,
    labels: Optional[Mapping[str, ExpressionLike]] = None,
    constants: Optional[Mapping[str, Union[bool, int, float]]] = None,
    state_limit: Optional[int] = None,
) -> BuildResult:
    """Builds the chain of a guarded-command model by breadth-first
    exploration from the initial valuation.

    In every state one of the enabled commands is chosen uniformly at random
    and its probabilistic updates produce the successors; probabilities of
    updates leading to the same successor are summed. States without enabled
    commands get a self-loop and the ``deadlock`` label; the initial state
    gets the ``init`` label.

    Transition rewards of an edge are the probability-weighted average of
    the contributions of the (command, update) pairs producing it, so that
    expected rewards are exact.

    Raises:
        ModelError: for invalid probabilities, updates leaving the range of a
            variable and references to unknown names
        StateLimitExceededError: if more than `state_limit` states are reached
    """
    model = _as_model(model, rewards, labels)
    model.validate()
    limit = DEFAULT_STATE_LIMIT if state_limit is None else int(state_limit)

    variables = model.variables
    if not variables:
        raise ModelError("model has no variables")
    names = tuple(var.name for var in variables)
    lo = [var.lo for var in variables]
    hi = [var.hi for var in variables]
    scope = Scope(
        {name: i for i, name in enumerate(names)},
        model.constant_values(dict(constants or {})),
        model.formulas,
    )

    commands = [
        _compile_command(module, index, command, scope, len(names))
        for module in model.modules
        for index, command in enumerate(module.commands)
    ]
    reward_specs = [_compile_reward(spec, scope) for spec in model.rewards]
    transition_rewards = [spec for spec in reward_specs if spec.transition_items]

    initial: State = tuple(var.init for var in variables)
    index: Dict[State, int] = {initial: 0}
    states: List[State] = [initial]
    deadlocks: List[int] = []

    rows: List[int] = []
    cols: List[int] = []
    probs: List[float] = []
    weighted: Dict[str, List[float]] = {spec.name: [] for spec in transition_rewards}

    current = 0
    while current < len(states):
        state = states[current]
        command = None
        try:
            enabled = [c for c in commands if c.guard(state)]
            if not enabled:
                deadlocks.append(current)
                rows.append(current)
                cols.append(current)
                probs.append(1.0)
                for spec in transition_rewards:
                    weighted[spec.name].append(0.0)
                current += 1
                continue

            share = 1.0 / len(enabled)
            for command in enabled:
                alternatives = command.probabilities(state)
                total = 0.0
                for p in alternatives:
                    if p < 0:
                        raise ModelError(f"negative probability {p!r}")
                    total += p
                if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                    raise ModelError(f"probabilities sum to {total!r}")

                for p, successor, assigned in zip(
                    alternatives, command.successors, command.assigned
                ):
                    if p == 0:
                        continue

                    target = successor(state)
                    for i in assigned:
                        value = target[i]
                        if not isinstance(value, int):
                            if isinstance(value, float) and value.is_integer():
                                target = target[:i] + (int(value),) + target[i + 1 :]
                            else:
                                raise ModelError(
                                    f"non-integer value {value!r} for {names[i]!r}"
                                )
                        if not lo[i] <= target[i] <= hi[i]:
                            raise ModelError(
                                f"update sets {names[i]!r} to {target[i]} outside "
                                f"[{lo[i]}..{hi[i]}]"
                            )

                    target_index = index.get(target)
                    if target_index is None:
                        target_index = len(states)
                        if target_index >= limit:
                            raise StateLimitExceededError(limit)
                        index[target] = target_index
                        states.append(target)

                    probability = share * p
                    rows.append(current)
                    cols.append(target_index)
                    probs.append(probability)

                    for spec in transition_rewards:
                        value = 0.0
                        for action, guard, item_value in spec.transition_items:
                            if (action == (command.action or "")) and guard(state):
                                value += item_value(state, target)
                        weighted[spec.name].append(probability * value)

        except StateLimitExceededError:
            raise
        except ModelError as ex:
            where = f" in {command.description}" if command else ""
            raise ModelError(
                f"state {_describe(names, state)}{where}: {ex}"
            ) from None
        except (ArithmeticError, TypeError, ValueError) as ex:
            where = f" in {command.description}" if command else ""
            raise ModelError(
                f"evaluation failed at state {_describe(names, state)}{where}: {ex}"
            ) from None

        current += 1

    n = len(states)
    shape = (n, n)
    P = csr_matrix(coo_matrix((probs, (rows, cols)), shape=shape))
    P.sum_duplicates()
    inverse = P.copy()
    inverse.data = 1.0 / inverse.data

    state_matrix = np.array(states, dtype=np.int64).reshape(n, len(names))

    structures: Dict[str, RewardStructure] = {}
    for spec in reward_specs:
        rho = np.zeros(n)
        if spec.state_items:
            for i, state in enumerate(states):
                total = 0.0
                for guard, value in spec.state_items:
                    if guard(state):
                        total += value(state)
                rho[i] = total

        if spec.transition_items:
            W = csr_matrix(coo_matrix((weighted[spec.name], (rows, cols)), shape=shape))
            W.sum_duplicates()
            iota = csr_matrix(W.multiply(inverse))
            iota.eliminate_zeros()
        else:
            iota = csr_matrix(shape)
        structures[spec.name] = RewardStructure(rho, iota)

    label_masks: Dict[str, np.ndarray] = {}
    init_mask = np.zeros(n, dtype=bool)
    init_mask[0] = True
    label_masks["init"] = init_mask
    deadlock_mask = np.zeros(n, dtype=bool)
    deadlock_mask[deadlocks] = True
    label_masks["deadlock"] = deadlock_mask

    for name, expr in model.labels.items():
        try:
            predicate = compile_expression(expr, scope)
        except ModelError as ex:
            raise ModelError(f"label {name!r}: {ex}") from None
        label_masks[name] = np.fromiter(
            (bool(predicate(state)) for state in states), dtype=bool, count=n
        )

    log.info(
        f"Built chain with {n} states and {P.nnz} transitions",
        extra={"semantics": "success"},
    )
    if deadlocks:
        log.debug(f"{len(deadlocks)} deadlock states received self-loops")

    P.data.flags.writeable = False
    dtmc = Dtmc(P, 0, label_masks, structures)
    return BuildResult(dtmc, state_matrix, names)
