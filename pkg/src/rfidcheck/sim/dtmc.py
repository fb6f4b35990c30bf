"""Monte Carlo evaluation of probability and reward queries on chains.

Paths are sampled in blocks of runs that advance in lock step. Run `i`
draws its random numbers from its own PCG64 generator seeded with
``SeedSequence([seed, i])``, so the value of every run, and therefore the
estimate, depends only on the seed and the number of runs.
"""

import numpy as np

from dataclasses import dataclass
from logging import getLogger
from numpy.random import PCG64, Generator, SeedSequence
from typing import Callable, Optional, Tuple, Union

from rfidcheck.dtmc import Dtmc, RewardStructure, as_mask, prob0
from rfidcheck.errors import InvalidArgumentError, UnsupportedStructureError
from rfidcheck.pctl import (
    BoundedUntil,
    Cumulative,
    Formula,
    Instantaneous,
    Next,
    ProbQuery,
    Reachability,
    RewardQuery,
    Rewards,
    SteadyState,
    Until,
    evaluate,
    parse,
    select_reward_structure,
)

from .report import SimReport, summarize

__all__ = ("DtmcSampler", "RunStreams", "SimulationOptions", "simulate_dtmc")

log = getLogger(__name__)


@dataclass(frozen=True)
class SimulationOptions:
    """Options of the chain simulator."""

    max_steps: int = 1_000_000
    """Step cap for unbounded path formulas; runs that hit it are counted
    as unresolved.
    """

    steady_steps: int = 10_000
    """Length of the paths that estimate long-run averages."""

    min_steady_steps: int = 1_000
    """Shortest path length accepted for long-run averages."""

    block_size: int = 4096

    def __post_init__(self) -> None:
        if self.max_steps < 1 or self.block_size < 1:
            raise InvalidArgumentError("step cap and block size must be positive")

    @classmethod
    def from_config(cls, config: Optional[dict]) -> "SimulationOptions":
        """Creates simulator options from the ``SIMULATION`` section of the
        app configuration.
        """
        config = config or {}
        return cls(
            max_steps=int(config.get("max_steps", cls.max_steps)),
            steady_steps=int(config.get("steady_steps", cls.steady_steps)),
            min_steady_steps=int(config.get("min_steady_steps", cls.min_steady_steps)),
            block_size=int(config.get("block_size", cls.block_size)),
        )


class DtmcSampler:
    """Draws successor states of a chain for many runs at once.

    Every row of the transition matrix is turned into cumulative
    probabilities offset by the row index, so a single ``searchsorted``
    finds the successors of a whole block of runs.
    """

    def __init__(self, d: Dtmc, rewards: Optional[RewardStructure] = None):
        P = d.transitions
        n = d.n_states
        counts = np.diff(P.indptr)
        if (counts == 0).any():
            raise InvalidArgumentError("chain has states without successors")

        rows = np.repeat(np.arange(n), counts)
        totals = np.add.reduceat(P.data, P.indptr[:-1])
        running = np.cumsum(P.data)
        before = np.repeat(running[P.indptr[:-1]] - P.data[P.indptr[:-1]], counts)
        local = (running - before) / np.repeat(totals, counts)
        local[P.indptr[1:] - 1] = 1.0

        self._keys = rows + local
        self._last_edge = P.indptr[1:] - 1
        self._targets = P.indices.copy()
        self._state_rewards = None
        self._edge_rewards = None
        if rewards is not None:
            self._state_rewards = rewards.state_rewards
            self._edge_rewards = np.asarray(
                rewards.transition_rewards[rows, P.indices]
            ).ravel()

    def step(
        self, states: np.ndarray, uniforms: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Samples one successor for each of the given states.

        Parameters:
            states: the current states
            uniforms: one number drawn uniformly from [0, 1) per state

        Returns:
            the successor states and the indices of the traversed edges
        """
        edges = np.searchsorted(self._keys, states + uniforms, side="right")
        # rounding of states + u may push the key past the end of the row
        edges = np.minimum(edges, self._last_edge[states])
        return self._targets[edges], edges

    def step_rewards(self, states: np.ndarray, edges: np.ndarray) -> np.ndarray:
        """Reward collected when leaving `states` along `edges`."""
        assert self._state_rewards is not None and self._edge_rewards is not None
        return self._state_rewards[states] + self._edge_rewards[edges]

    def state_rewards(self, states: np.ndarray) -> np.ndarray:
        assert self._state_rewards is not None
        return self._state_rewards[states]


class RunStreams:
    """Independent random streams of a block of consecutive runs.

    Run `i` of a simulation with seed `seed` draws from a PCG64 generator
    seeded with ``SeedSequence([seed, i])``. Numbers are fetched from each
    generator in chunks and handed out one per step of the run.
    """

    CHUNK = 64

    def __init__(self, seed: int, first: int, size: int):
        self._generators = [
            Generator(PCG64(SeedSequence([seed, run])))
            for run in range(first, first + size)
        ]
        self._buffer = np.empty((size, self.CHUNK))
        self._position = np.full(size, self.CHUNK)

    @property
    def size(self) -> int:
        return len(self._generators)

    def draw(self, runs: Optional[np.ndarray] = None) -> np.ndarray:
        """Draws the next uniform number of each of the given runs, or of
        every run of the block.
        """
        if runs is None:
            runs = np.arange(self.size)
        exhausted = runs[self._position[runs] >= self.CHUNK]
        for run in exhausted:
            self._buffer[run] = self._generators[run].random(self.CHUNK)
        self._position[exhausted] = 0

        values = self._buffer[runs, self._position[runs]]
        self._position[runs] += 1
        return values


def _mask(d: Dtmc, rewards: Rewards, formula: Formula) -> np.ndarray:
    states = evaluate(d, rewards, formula)
    assert isinstance(states, frozenset)
    return as_mask(states, d.n_states)


# Each path evaluator takes the random streams of a block of runs and returns
# the values of the runs plus the number of unresolved runs.
PathEvaluator = Callable[[RunStreams], Tuple[np.ndarray, int]]


def _next(d: Dtmc, sampler: DtmcSampler, target: np.ndarray) -> PathEvaluator:
    def run(streams: RunStreams) -> Tuple[np.ndarray, int]:
        states = np.full(streams.size, d.initial)
        successors, _ = sampler.step(states, streams.draw())
        return target[successors].astype(float), 0

    return run


def _until(
    d: Dtmc,
    sampler: DtmcSampler,
    left: np.ndarray,
    right: np.ndarray,
    bound: Optional[int],
    max_steps: int,
) -> PathEvaluator:
    # States that cannot reach `right` through `left` decide the path at once.
    hopeless = prob0(d, left, right)
    limit = max_steps if bound is None else bound

    def run(streams: RunStreams) -> Tuple[np.ndarray, int]:
        states = np.full(streams.size, d.initial)
        values = np.zeros(streams.size)
        active = np.ones(streams.size, dtype=bool)
        steps = 0
        while True:
            won = active & right[states]
            values[won] = 1.0
            active &= ~won & left[states] & ~hopeless[states]
            if not active.any() or steps >= limit:
                break
            indices = np.flatnonzero(active)
            states[indices], _ = sampler.step(states[indices], streams.draw(indices))
            steps += 1

        unresolved = int(active.sum()) if bound is None else 0
        return values, unresolved

    return run


def _instantaneous(d: Dtmc, sampler: DtmcSampler, t: int) -> PathEvaluator:
    def run(streams: RunStreams) -> Tuple[np.ndarray, int]:
        states = np.full(streams.size, d.initial)
        for _ in range(t):
            states, _ = sampler.step(states, streams.draw())
        return sampler.state_rewards(states).astype(float), 0

    return run


def _cumulative(d: Dtmc, sampler: DtmcSampler, t: int) -> PathEvaluator:
    def run(streams: RunStreams) -> Tuple[np.ndarray, int]:
        states = np.full(streams.size, d.initial)
        values = np.zeros(streams.size)
        for _ in range(t):
            successors, edges = sampler.step(states, streams.draw())
            values += sampler.step_rewards(states, edges)
            states = successors
        return values, 0

    return run


def _reachability(
    d: Dtmc, sampler: DtmcSampler, target: np.ndarray, max_steps: int
) -> PathEvaluator:
    everything = np.ones(d.n_states, dtype=bool)
    hopeless = prob0(d, everything, target)

    def run(streams: RunStreams) -> Tuple[np.ndarray, int]:
        states = np.full(streams.size, d.initial)
        values = np.zeros(streams.size)
        active = ~target[states]
        steps = 0
        while active.any() and steps < max_steps:
            lost = active & hopeless[states]
            values[lost] = np.inf
            active &= ~lost

            indices = np.flatnonzero(active)
            if not indices.size:
                break
            successors, edges = sampler.step(states[indices], streams.draw(indices))
            values[indices] += sampler.step_rewards(states[indices], edges)
            states[indices] = successors
            active[indices] = ~target[successors]
            steps += 1

        return values, int(active.sum())

    return run


def _steady_state(d: Dtmc, sampler: DtmcSampler, steps: int) -> PathEvaluator:
    def run(streams: RunStreams) -> Tuple[np.ndarray, int]:
        states = np.full(streams.size, d.initial)
        values = np.zeros(streams.size)
        for _ in range(steps):
            successors, edges = sampler.step(states, streams.draw())
            values += sampler.step_rewards(states, edges)
            states = successors
        return values / steps, 0

    return run


def _path_evaluator(
    d: Dtmc,
    rewards: Rewards,
    query: Union[ProbQuery, RewardQuery],
    options: SimulationOptions,
) -> PathEvaluator:
    if isinstance(query, ProbQuery):
        sampler = DtmcSampler(d)
        path = query.path
        if isinstance(path, Next):
            return _next(d, sampler, _mask(d, rewards, path.operand))
        if isinstance(path, BoundedUntil):
            left, right = _mask(d, rewards, path.left), _mask(d, rewards, path.right)
            return _until(d, sampler, left, right, path.bound, options.max_steps)
        if isinstance(path, Until):
            left, right = _mask(d, rewards, path.left), _mask(d, rewards, path.right)
            return _until(d, sampler, left, right, None, options.max_steps)
        raise UnsupportedStructureError(f"cannot simulate path formula {path!r}")

    structure = select_reward_structure(d, rewards, query.reward_name)
    sampler = DtmcSampler(d, structure)
    form = query.form
    if isinstance(form, Instantaneous):
        return _instantaneous(d, sampler, form.t)
    if isinstance(form, Cumulative):
        return _cumulative(d, sampler, form.t)
    if isinstance(form, Reachability):
        target = _mask(d, rewards, form.target)
        return _reachability(d, sampler, target, options.max_steps)
    if isinstance(form, SteadyState):
        if options.steady_steps < options.min_steady_steps:
            raise UnsupportedStructureError(
                f"long-run averages need paths of at least "
                f"{options.min_steady_steps} steps, got {options.steady_steps}"
            )
        return _steady_state(d, sampler, options.steady_steps)
    raise UnsupportedStructureError(f"cannot simulate reward form {form!r}")


def simulate_dtmc(
    d: Dtmc,
    rewards: Rewards,
    query: Union[Formula, str],
    runs: int,
    seed: int,
    options: Optional[SimulationOptions] = None,
) -> SimReport:
    """Estimates the value of a ``=?`` query in the initial state of a chain
    by sampling paths.

    State subformulas are evaluated exactly; only the outermost path formula
    or reward form is sampled. Long-run averages are estimated as time
    averages over paths of ``options.steady_steps`` steps.

    Parameters:
        d: the chain
        rewards: reward structures for reward queries, as for
            :func:`rfidcheck.pctl.evaluate`
        query: the query or its textual form
        runs: number of sampled paths
        seed: seed of the random number generators

    Returns:
        the estimate; it is marked unreliable if some unbounded runs hit the
        step cap before their value was determined

    Raises:
        InvalidArgumentError: if the query is not a ``=?`` query or `runs`
            is not positive
        UnsupportedStructureError: for long-run queries with paths shorter
            than the configured minimum
    """
    options = options or SimulationOptions()
    if isinstance(query, str):
        query = parse(query)
    if not isinstance(query, (ProbQuery, RewardQuery)) or not query.bound.is_query:
        raise InvalidArgumentError("only =? queries can be simulated")
    if runs < 1:
        raise InvalidArgumentError("at least one run is needed")

    evaluator = _path_evaluator(d, rewards, query, options)

    chunks = []
    unresolved = 0
    for start in range(0, runs, options.block_size):
        size = min(options.block_size, runs - start)
        values, missing = evaluator(RunStreams(seed, start, size))
        chunks.append(values)
        unresolved += missing

    if unresolved:
        log.warning(
            f"{unresolved} of {runs} runs hit the step cap of {options.max_steps}"
        )

    return summarize(np.concatenate(chunks), seed, reliable=unresolved == 0)
