"""Labelled discrete-time Markov chains with reward structures."""

import numpy as np

from dataclasses import dataclass, field
from scipy.sparse import csr_matrix, issparse
from types import MappingProxyType
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from rfidcheck.errors import InvalidArgumentError, UnknownLabelError

__all__ = ("Dtmc", "RewardStructure", "StateSet", "validate")

ROW_SUM_TOLERANCE = 1e-9

StateSet = Union[np.ndarray, Iterable[int]]
"""Sets of states are given either as boolean masks or as iterables of state
indices.
"""

Transitions = Union[csr_matrix, np.ndarray, Iterable[Tuple[int, int, float]]]


def _to_csr(value: Transitions, n: int) -> csr_matrix:
    if issparse(value):
        matrix = csr_matrix(value, dtype=float, copy=True)
    elif isinstance(value, np.ndarray):
        matrix = csr_matrix(np.asarray(value, dtype=float))
    else:
        entries = list(value)  # type: ignore
        if entries:
            rows, cols, probs = zip(*entries)
        else:
            rows, cols, probs = (), (), ()
        rows_a = np.asarray(rows, dtype=np.int64)
        cols_a = np.asarray(cols, dtype=np.int64)
        if rows_a.size and (
            rows_a.min() < 0
            or cols_a.min() < 0
            or rows_a.max() >= n
            or cols_a.max() >= n
        ):
            raise InvalidArgumentError("transition refers to an unknown state")
        matrix = csr_matrix(
            (np.asarray(probs, dtype=float), (rows_a, cols_a)), shape=(n, n)
        )

    if matrix.shape != (n, n):
        raise InvalidArgumentError(
            f"matrix has shape {matrix.shape}, expected {(n, n)}"
        )

    matrix.sum_duplicates()
    matrix.sort_indices()
    matrix.data.flags.writeable = False
    return matrix


def as_mask(states: StateSet, n: int) -> np.ndarray:
    """Converts a set of states to a boolean mask of length `n`."""
    if isinstance(states, np.ndarray) and states.dtype == bool:
        if states.shape != (n,):
            raise InvalidArgumentError(
                f"state mask has shape {states.shape}, expected {(n,)}"
            )
        return states

    mask = np.zeros(n, dtype=bool)
    indices = np.fromiter((int(s) for s in states), dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= n):
        raise InvalidArgumentError("state set refers to an unknown state")
    mask[indices] = True
    return mask


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class RewardStructure:
    """State rewards ρ and transition rewards ι of a chain."""

    state_rewards: np.ndarray
    transition_rewards: csr_matrix

    @classmethod
    def create(
        cls,
        n: int,
        state_rewards: Optional[Union[Sequence[float], np.ndarray, Mapping[int, float]]] = None,
        transition_rewards: Optional[Transitions] = None,
    ) -> "RewardStructure":
        """Creates a reward structure for a chain with `n` states.

        Parameters:
            state_rewards: full vector of state rewards or a mapping from
                state indices to rewards; missing states get zero
            transition_rewards: matrix or ``(from, to, value)`` triples
        """
        if state_rewards is None:
            rho = np.zeros(n)
        elif isinstance(state_rewards, Mapping):
            rho = np.zeros(n)
            for state, value in state_rewards.items():
                rho[state] = value
        else:
            rho = np.array(state_rewards, dtype=float)

        iota = _to_csr(
            transition_rewards if transition_rewards is not None else (), n
        )
        return cls(rho, iota)

    def __post_init__(self) -> None:
        rho = np.array(self.state_rewards, dtype=float)
        if rho.ndim != 1:
            raise InvalidArgumentError("state rewards must be a vector")
        object.__setattr__(self, "state_rewards", _freeze(rho))
        if not issparse(self.transition_rewards):
            object.__setattr__(
                self,
                "transition_rewards",
                _to_csr(self.transition_rewards, rho.shape[0]),
            )

    @property
    def n_states(self) -> int:
        return self.state_rewards.shape[0]

    def expected_step_rewards(self, transitions: csr_matrix) -> np.ndarray:
        """Returns ``ρ(s) + Σ_s' P(s, s') ι(s, s')`` for every state `s`,
        i.e. the expected reward collected when leaving `s`.
        """
        edge_rewards = np.asarray(
            transitions.multiply(self.transition_rewards).sum(axis=1)
        ).ravel()
        return self.state_rewards + edge_rewards


@dataclass(frozen=True)
class Dtmc:
    """A labelled discrete-time Markov chain ``(S, s̄, P, L)``.

    Labels are stored as read-only boolean masks. Reward structures that were
    loaded or built together with the chain are kept by name in `rewards`.
    """

    transitions: csr_matrix
    initial: int
    labels: Mapping[str, np.ndarray] = field(default_factory=dict)
    rewards: Mapping[str, RewardStructure] = field(default_factory=dict)
    state_names: Optional[Sequence[str]] = None
    """Optional human-readable description of each state."""

    @classmethod
    def create(
        cls,
        n_states: int,
        initial: int,
        transitions: Transitions,
        labels: Optional[Mapping[str, StateSet]] = None,
        rewards: Optional[Mapping[str, RewardStructure]] = None,
        state_names: Optional[Sequence[str]] = None,
    ) -> "Dtmc":
        """Creates a chain from a matrix or from ``(from, to, prob)`` triples;
        duplicate triples are summed.
        """
        if n_states <= 0:
            raise InvalidArgumentError("a chain needs at least one state")
        matrix = _to_csr(transitions, n_states)
        masks = {
            name: as_mask(states, n_states) for name, states in (labels or {}).items()
        }
        return cls(matrix, initial, masks, dict(rewards or {}), state_names)

    def __post_init__(self) -> None:
        if not issparse(self.transitions):
            object.__setattr__(
                self,
                "transitions",
                _to_csr(self.transitions, np.shape(self.transitions)[0]),
            )
        n = self.transitions.shape[0]
        if self.transitions.shape != (n, n):
            raise InvalidArgumentError("transition matrix must be square")
        if not 0 <= self.initial < n:
            raise InvalidArgumentError(f"initial state {self.initial} out of range")

        masks: Dict[str, np.ndarray] = {}
        for name, states in self.labels.items():
            masks[name] = _freeze(np.array(as_mask(states, n), dtype=bool))
        object.__setattr__(self, "labels", MappingProxyType(masks))

        for name, structure in self.rewards.items():
            if structure.n_states != n:
                raise InvalidArgumentError(
                    f"reward structure {name!r} has {structure.n_states} states, "
                    f"expected {n}"
                )
        object.__setattr__(self, "rewards", MappingProxyType(dict(self.rewards)))

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_transitions(self) -> int:
        return self.transitions.nnz

    def mask(self, label: str) -> np.ndarray:
        """Returns the boolean mask of the states carrying the given label.

        Raises:
            UnknownLabelError: if the chain has no such label
        """
        try:
            return self.labels[label]
        except KeyError:
            raise UnknownLabelError(f"unknown label: {label!r}") from None

    def states(self, label: str) -> FrozenSet[int]:
        """Returns the set of states carrying the given label."""
        return frozenset(int(s) for s in np.flatnonzero(self.mask(label)))

    def with_rewards(self, **rewards: RewardStructure) -> "Dtmc":
        """Returns a copy of the chain with additional reward structures."""
        merged = dict(self.rewards)
        merged.update(rewards)
        return Dtmc(
            self.transitions, self.initial, self.labels, merged, self.state_names
        )

    def successors(self, state: int) -> List[Tuple[int, float]]:
        """Returns the successors of a state with their probabilities."""
        start, end = self.transitions.indptr[state], self.transitions.indptr[state + 1]
        return [
            (int(j), float(p))
            for j, p in zip(
                self.transitions.indices[start:end], self.transitions.data[start:end]
            )
        ]


def validate(
    d: Dtmc, rewards: Optional[Mapping[str, RewardStructure]] = None
) -> List[str]:
    """Checks the invariants of a chain and its reward structures.

    Returns:
        human-readable descriptions of all violations; empty if the chain is
        valid
    """
    violations: List[str] = []
    P = d.transitions
    n = d.n_states

    if not 0 <= d.initial < n:
        violations.append(f"initial state {d.initial} out of range")

    if P.nnz:
        bad = np.flatnonzero((P.data < 0) | (P.data > 1))
        for index in bad[:10]:
            row = int(np.searchsorted(P.indptr, index, side="right") - 1)
            violations.append(
                f"state {row}: probability {P.data[index]!r} outside [0, 1]"
            )

    row_sums = np.asarray(P.sum(axis=1)).ravel()
    for state in np.flatnonzero(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE):
        if row_sums[state] == 0:
            violations.append(f"state {state}: no outgoing transitions")
        else:
            violations.append(
                f"state {state}: outgoing probabilities sum to {row_sums[state]!r}"
            )

    structures = dict(d.rewards)
    if rewards:
        structures.update(rewards)

    for name, structure in structures.items():
        if structure.n_states != n:
            violations.append(
                f"reward structure {name!r}: {structure.n_states} state rewards "
                f"for {n} states"
            )
            continue

        rho = structure.state_rewards
        for state in np.flatnonzero(rho < 0):
            violations.append(
                f"reward structure {name!r}: negative reward at state {state}"
            )

        iota = structure.transition_rewards.tocoo()
        for i, j, value in zip(iota.row, iota.col, iota.data):
            if value < 0:
                violations.append(
                    f"reward structure {name!r}: negative reward on {i} -> {j}"
                )
            if value != 0 and P[i, j] == 0:
                violations.append(
                    f"reward structure {name!r}: reward on zero-probability "
                    f"transition {i} -> {j}"
                )

    return violations
