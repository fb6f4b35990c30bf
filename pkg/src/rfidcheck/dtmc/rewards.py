"""Reward operators: instantaneous, cumulative, reachability and long-run
average rewards.
"""

import numpy as np

from logging import getLogger
from scipy.sparse import csr_matrix
from typing import List, Optional

from rfidcheck.errors import UnsupportedStructureError

from .graph import bottom_components, forward_reachable, period, prob0, prob1
from .model import Dtmc, RewardStructure, StateSet, as_mask
from .probability import check_steps, point_mass
from .solvers import SolverOptions, solve_fixed_point, solve_stationary

__all__ = (
    "cumulative_series",
    "instantaneous_series",
    "long_run_distribution",
    "reward_cumulative",
    "reward_cumulative_vector",
    "reward_instantaneous",
    "reward_instantaneous_vector",
    "reward_reachability",
    "reward_reachability_vector",
    "reward_steady_state",
    "reward_steady_state_vector",
)

log = getLogger(__name__)

MAX_LISTED_STATES = 8


def reward_instantaneous(d: Dtmc, r: RewardStructure, t: int) -> float:
    """Expected state reward at time `t`."""
    return float(instantaneous_series(d, r, t)[-1])


def instantaneous_series(d: Dtmc, r: RewardStructure, horizon: int) -> np.ndarray:
    """Expected state rewards at times ``0..horizon``."""
    horizon = check_steps(horizon)
    transposed = csr_matrix(d.transitions.T)
    rho = r.state_rewards
    result = np.empty(horizon + 1)
    pi = point_mass(d)
    result[0] = pi @ rho
    for step in range(1, horizon + 1):
        pi = transposed @ pi
        result[step] = pi @ rho
    return result


def reward_instantaneous_vector(d: Dtmc, r: RewardStructure, t: int) -> np.ndarray:
    """Expected state reward at time `t`, per starting state."""
    t = check_steps(t)
    x = np.array(r.state_rewards, dtype=float)
    for _ in range(t):
        x = d.transitions @ x
    return x


def reward_cumulative(d: Dtmc, r: RewardStructure, t: int) -> float:
    """Expected reward accumulated during the first `t` steps.

    A path of `t` steps collects the state rewards of its first `t` states
    and the transition rewards of its `t` transitions.
    """
    return float(cumulative_series(d, r, t)[-1])


def cumulative_series(d: Dtmc, r: RewardStructure, horizon: int) -> np.ndarray:
    """Expected accumulated rewards for bounds ``0..horizon``; nondecreasing
    for non-negative rewards.
    """
    horizon = check_steps(horizon)
    transposed = csr_matrix(d.transitions.T)
    per_step = r.expected_step_rewards(d.transitions)
    result = np.zeros(horizon + 1)
    pi = point_mass(d)
    for step in range(1, horizon + 1):
        result[step] = result[step - 1] + pi @ per_step
        pi = transposed @ pi
    return result


def reward_cumulative_vector(d: Dtmc, r: RewardStructure, t: int) -> np.ndarray:
    """Expected reward accumulated during the first `t` steps, per starting
    state.
    """
    t = check_steps(t)
    per_step = r.expected_step_rewards(d.transitions)
    x = np.zeros(d.n_states)
    for _ in range(t):
        x = per_step + d.transitions @ x
    return x


def reward_reachability_vector(
    d: Dtmc,
    r: RewardStructure,
    target: StateSet,
    options: Optional[SolverOptions] = None,
) -> np.ndarray:
    """Expected reward accumulated before first reaching a target state, per
    starting state; infinite where the target is not reached almost surely.
    """
    everything = np.ones(d.n_states, dtype=bool)
    target_mask = as_mask(target, d.n_states)

    no = prob0(d, everything, target_mask)
    yes = prob1(d, everything, target_mask, no)

    result = np.full(d.n_states, np.inf)
    result[target_mask] = 0.0

    maybe = yes & ~target_mask
    if maybe.any():
        per_step = r.expected_step_rewards(d.transitions)
        rows = d.transitions[maybe]
        result[maybe] = solve_fixed_point(rows[:, maybe], per_step[maybe], options)
    return result


def reward_reachability(
    d: Dtmc,
    r: RewardStructure,
    target: StateSet,
    options: Optional[SolverOptions] = None,
) -> float:
    """Expected reward accumulated from the initial state before first
    reaching a target state.

    Returns:
        the expected reward, or ``inf`` if the target is reached with
        probability less than one

    Raises:
        NumericalError: if the linear equation system cannot be solved
    """
    return float(reward_reachability_vector(d, r, target, options)[d.initial])


def _describe(components: List[np.ndarray]) -> str:
    parts = []
    for members in components:
        states = ", ".join(str(int(s)) for s in members[:MAX_LISTED_STATES])
        if len(members) > MAX_LISTED_STATES:
            states += ", ..."
        parts.append("{" + states + "}")
    return "; ".join(parts)


def long_run_distribution(d: Dtmc, within: Optional[np.ndarray] = None) -> np.ndarray:
    """Returns the long-run distribution of the chain started in the initial
    state.

    The states of `within` (the states reachable from the initial state by
    default) must contain exactly one bottom strongly connected component,
    and that component must be aperiodic. Transient states get zero mass.

    Raises:
        UnsupportedStructureError: if the structural conditions do not hold
    """
    if within is None:
        within = forward_reachable(d)

    components = bottom_components(d, within)
    if len(components) != 1:
        raise UnsupportedStructureError(
            f"steady state requires a single bottom strongly connected "
            f"component, found {len(components)}: {_describe(components)}"
        )

    members = components[0]
    component_period = period(d, members)
    if component_period > 1:
        raise UnsupportedStructureError(
            f"bottom strongly connected component {_describe(components)} is "
            f"periodic with period {component_period}"
        )

    sub = csr_matrix(d.transitions[members][:, members])
    log.debug(f"Solving for the stationary distribution of {len(members)} states")

    result = np.zeros(d.n_states)
    result[members] = solve_stationary(sub)
    return result


def reward_steady_state(d: Dtmc, r: RewardStructure) -> float:
    """Long-run average reward per step of the chain started in the initial
    state.

    Raises:
        UnsupportedStructureError: if the reachable part of the chain has
            several bottom components or a periodic one
    """
    pi = long_run_distribution(d)
    return float(pi @ r.expected_step_rewards(d.transitions))


def reward_steady_state_vector(d: Dtmc, r: RewardStructure) -> np.ndarray:
    """Long-run average reward per starting state. Requires the whole chain
    to have a single aperiodic bottom component, so the value is the same in
    every state.
    """
    pi = long_run_distribution(d, np.ones(d.n_states, dtype=bool))
    value = float(pi @ r.expected_step_rewards(d.transitions))
    return np.full(d.n_states, value)
