"""Evaluation of PCTL formulas and reward queries on chains."""

import numpy as np

from typing import FrozenSet, Mapping, Optional, Union

from rfidcheck.dtmc import (
    Dtmc,
    RewardStructure,
    SolverOptions,
    prob_bounded_until,
    prob_next,
    prob_until,
    reward_cumulative,
    reward_cumulative_vector,
    reward_instantaneous,
    reward_instantaneous_vector,
    reward_reachability_vector,
    reward_steady_state,
    reward_steady_state_vector,
)
from rfidcheck.errors import InvalidArgumentError, MissingRewardError

from .ast import (
    And,
    Atom,
    BoundedUntil,
    Cumulative,
    Formula,
    Instantaneous,
    Next,
    Not,
    ProbQuery,
    Reachability,
    RewardQuery,
    SteadyState,
    TrueFormula,
    Until,
)
from .parser import parse

__all__ = ("Rewards", "evaluate", "query_values", "select_reward_structure")

Rewards = Union[None, RewardStructure, Mapping[str, RewardStructure]]
"""Reward structures available to reward queries: none, a single one, or a
mapping from names to structures.
"""

DEFAULT_REWARD_NAME = "default"

Result = Union[bool, float, FrozenSet[int]]


def select_reward_structure(
    d: Dtmc, rewards: Rewards, name: Optional[str]
) -> RewardStructure:
    """Finds the reward structure that a reward query refers to.

    Without explicit structures, those stored in the chain are used. An
    unnamed query uses the only available structure or the one named
    ``default``.

    Raises:
        MissingRewardError: if no matching structure exists
    """
    if rewards is None:
        rewards = d.rewards

    if isinstance(rewards, RewardStructure):
        if name is not None:
            raise MissingRewardError(
                f"reward query refers to {name!r} but only an unnamed reward "
                f"structure is available"
            )
        return rewards

    if name is not None:
        try:
            return rewards[name]
        except KeyError:
            raise MissingRewardError(
                f"no reward structure named {name!r}"
            ) from None

    if len(rewards) == 1:
        return next(iter(rewards.values()))
    if DEFAULT_REWARD_NAME in rewards:
        return rewards[DEFAULT_REWARD_NAME]
    if not rewards:
        raise MissingRewardError("reward query without a reward structure")
    raise MissingRewardError(
        "reward query is ambiguous; select one of "
        + ", ".join(repr(key) for key in rewards)
        + ' with R{"name"}'
    )


class _Evaluator:
    def __init__(self, d: Dtmc, rewards: Rewards, options: Optional[SolverOptions]):
        self._d = d
        self._rewards = rewards
        self._options = options

    def states(self, formula: Formula) -> np.ndarray:
        """Returns the mask of states satisfying a state formula."""
        n = self._d.n_states
        if isinstance(formula, TrueFormula):
            return np.ones(n, dtype=bool)
        elif isinstance(formula, Atom):
            return self._d.mask(formula.name)
        elif isinstance(formula, And):
            return self.states(formula.left) & self.states(formula.right)
        elif isinstance(formula, Not):
            return ~self.states(formula.operand)
        elif isinstance(formula, (ProbQuery, RewardQuery)):
            bound = formula.bound
            if bound.is_query:
                raise InvalidArgumentError(
                    "numeric queries (=?) cannot be nested in state formulas"
                )
            values = self.values(formula)
            return np.array([bound.holds(float(v)) for v in values], dtype=bool)
        raise TypeError(f"not a state formula: {formula!r}")

    def values(self, query: Union[ProbQuery, RewardQuery]) -> np.ndarray:
        """Returns the value of a query in every state."""
        d = self._d
        if isinstance(query, ProbQuery):
            path = query.path
            if isinstance(path, Next):
                return prob_next(d, self.states(path.operand))
            elif isinstance(path, BoundedUntil):
                return prob_bounded_until(
                    d, self.states(path.left), self.states(path.right), path.bound
                )
            elif isinstance(path, Until):
                return prob_until(
                    d, self.states(path.left), self.states(path.right), self._options
                )
            raise TypeError(f"not a path formula: {path!r}")

        r = select_reward_structure(d, self._rewards, query.reward_name)
        form = query.form
        if isinstance(form, Instantaneous):
            return reward_instantaneous_vector(d, r, form.t)
        elif isinstance(form, Cumulative):
            return reward_cumulative_vector(d, r, form.t)
        elif isinstance(form, Reachability):
            return reward_reachability_vector(
                d, r, self.states(form.target), self._options
            )
        elif isinstance(form, SteadyState):
            return reward_steady_state_vector(d, r)
        raise TypeError(f"not a reward form: {form!r}")

    def initial_value(self, query: Union[ProbQuery, RewardQuery]) -> float:
        """Returns the value of a query in the initial state, using the
        cheaper forward computations where they exist.
        """
        d = self._d
        if isinstance(query, RewardQuery):
            form = query.form
            if isinstance(form, (Instantaneous, Cumulative, SteadyState)):
                r = select_reward_structure(d, self._rewards, query.reward_name)
                if isinstance(form, Instantaneous):
                    return reward_instantaneous(d, r, form.t)
                elif isinstance(form, Cumulative):
                    return reward_cumulative(d, r, form.t)
                else:
                    return reward_steady_state(d, r)
        return float(self.values(query)[d.initial])


def evaluate(
    d: Dtmc,
    rewards: Rewards,
    formula: Union[Formula, str],
    *,
    options: Optional[SolverOptions] = None,
) -> Result:
    """Evaluates a formula on a chain.

    Parameters:
        d: the chain
        rewards: reward structures for reward queries; ``None`` uses the
            structures stored in the chain
        formula: the formula or its textual form
        options: options of the linear equation solvers

    Returns:
        the numeric value in the initial state for top-level ``=?`` queries,
        the outcome of the comparison in the initial state for top-level
        queries with a threshold, and the set of satisfying states for all
        other formulas

    Raises:
        UnknownLabelError: if the formula refers to an unknown label
        MissingRewardError: if a reward query has no reward structure
        UnsupportedStructureError: for long-run queries on chains with
            several bottom components or a periodic one
    """
    if isinstance(formula, str):
        formula = parse(formula)

    evaluator = _Evaluator(d, rewards, options)
    if isinstance(formula, (ProbQuery, RewardQuery)):
        value = evaluator.initial_value(formula)
        if formula.bound.is_query:
            return value
        return formula.bound.holds(value)

    mask = evaluator.states(formula)
    return frozenset(int(s) for s in np.flatnonzero(mask))


def query_values(
    d: Dtmc,
    rewards: Rewards,
    query: Union[ProbQuery, RewardQuery],
    *,
    options: Optional[SolverOptions] = None,
) -> np.ndarray:
    """Returns the value of a probability or reward query in every state."""
    return _Evaluator(d, rewards, options).values(query)
