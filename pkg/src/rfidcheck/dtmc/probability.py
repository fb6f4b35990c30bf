"""Transient analysis and the probabilistic path operators of PCTL."""

import numpy as np

from logging import getLogger
from scipy.sparse import csr_matrix
from typing import Optional

from rfidcheck.errors import InvalidArgumentError

from .graph import prob0, prob1
from .model import Dtmc, StateSet, as_mask
from .solvers import SolverOptions, solve_fixed_point

__all__ = (
    "point_mass",
    "prob_bounded_until",
    "prob_next",
    "prob_until",
    "transient_distribution",
    "transient_series",
)

log = getLogger(__name__)


def check_steps(t: int) -> int:
    if t < 0:
        raise InvalidArgumentError(f"step count must be non-negative, got {t}")
    return int(t)


def point_mass(d: Dtmc, state: Optional[int] = None) -> np.ndarray:
    """Returns the distribution concentrated on the given state (the initial
    state by default).
    """
    result = np.zeros(d.n_states)
    result[d.initial if state is None else state] = 1.0
    return result


def transient_distribution(d: Dtmc, t: int) -> np.ndarray:
    """Returns the distribution over states after `t` steps from the initial
    state, computed by `t` sparse vector-matrix products.
    """
    t = check_steps(t)
    transposed = csr_matrix(d.transitions.T)
    pi = point_mass(d)
    for _ in range(t):
        pi = transposed @ pi
    return pi


def transient_series(d: Dtmc, horizon: int) -> np.ndarray:
    """Returns the transient distributions for steps ``0..horizon`` as the
    rows of a dense matrix.
    """
    horizon = check_steps(horizon)
    transposed = csr_matrix(d.transitions.T)
    result = np.empty((horizon + 1, d.n_states))
    pi = point_mass(d)
    result[0] = pi
    for step in range(1, horizon + 1):
        pi = transposed @ pi
        result[step] = pi
    return result


def prob_next(d: Dtmc, target: StateSet) -> np.ndarray:
    """Probability of moving to a target state in one step, per state."""
    mask = as_mask(target, d.n_states)
    return d.transitions @ mask.astype(float)


def prob_bounded_until(d: Dtmc, a: StateSet, b: StateSet, t: int) -> np.ndarray:
    """Probability of ``a U<=t b``, per state."""
    t = check_steps(t)
    a_mask = as_mask(a, d.n_states)
    b_mask = as_mask(b, d.n_states)
    maybe = a_mask & ~b_mask

    x = b_mask.astype(float)
    for _ in range(t):
        x = np.where(maybe, d.transitions @ x, x)
    return x


def prob_until(
    d: Dtmc, a: StateSet, b: StateSet, options: Optional[SolverOptions] = None
) -> np.ndarray:
    """Probability of ``a U b``, per state.

    States with probability exactly 0 or 1 are found by graph analysis; the
    remaining ones are computed by solving a linear equation system.

    Raises:
        NumericalError: if the residual system cannot be solved
    """
    a_mask = as_mask(a, d.n_states)
    b_mask = as_mask(b, d.n_states)

    no = prob0(d, a_mask, b_mask)
    yes = prob1(d, a_mask, b_mask, no)
    maybe = ~(no | yes)

    result = yes.astype(float)
    if maybe.any():
        log.debug(
            f"Until: {int(yes.sum())} yes, {int(no.sum())} no, "
            f"{int(maybe.sum())} maybe states"
        )
        rows = d.transitions[maybe]
        A = rows[:, maybe]
        rhs = np.asarray(rows[:, yes].sum(axis=1)).ravel()
        result[maybe] = np.clip(solve_fixed_point(A, rhs, options), 0.0, 1.0)
    return result
