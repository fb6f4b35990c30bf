"""Labelled discrete-time Markov chains with reward structures and the
numerical engines that evaluate probability and reward queries on them.
"""

from .graph import (
    backward_reachable,
    bottom_components,
    forward_reachable,
    period,
    prob0,
    prob1,
)
from .io import dump_dtmc, dumps_dtmc, load_dtmc, loads_dtmc
from .model import Dtmc, RewardStructure, StateSet, as_mask, validate
from .probability import (
    prob_bounded_until,
    prob_next,
    prob_until,
    transient_distribution,
    transient_series,
)
from .rewards import (
    cumulative_series,
    instantaneous_series,
    long_run_distribution,
    reward_cumulative,
    reward_cumulative_vector,
    reward_instantaneous,
    reward_instantaneous_vector,
    reward_reachability,
    reward_reachability_vector,
    reward_steady_state,
    reward_steady_state_vector,
)
from .solvers import SolverOptions

__all__ = (
    "Dtmc",
    "RewardStructure",
    "SolverOptions",
    "StateSet",
    "as_mask",
    "backward_reachable",
    "bottom_components",
    "cumulative_series",
    "dump_dtmc",
    "dumps_dtmc",
    "forward_reachable",
    "instantaneous_series",
    "load_dtmc",
    "loads_dtmc",
    "long_run_distribution",
    "period",
    "prob0",
    "prob1",
    "prob_bounded_until",
    "prob_next",
    "prob_until",
    "reward_cumulative",
    "reward_cumulative_vector",
    "reward_instantaneous",
    "reward_instantaneous_vector",
    "reward_reachability",
    "reward_reachability_vector",
    "reward_steady_state",
    "reward_steady_state_vector",
    "transient_distribution",
    "transient_series",
    "validate",
)
