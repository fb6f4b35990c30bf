"""Graph-based analysis of chains: reachability, qualitative until
probabilities and bottom strongly connected components.
"""

import numpy as np

from math import gcd
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components
from typing import List, Optional

from .model import Dtmc

__all__ = (
    "backward_reachable",
    "bottom_components",
    "forward_reachable",
    "period",
    "prob0",
    "prob1",
)


def _pattern(matrix: csr_matrix) -> csr_matrix:
    result = csr_matrix(matrix, copy=True)
    result.data = (result.data > 0).astype(float)
    result.eliminate_zeros()
    return result


def backward_reachable(
    d: Dtmc, targets: np.ndarray, through: Optional[np.ndarray] = None
) -> np.ndarray:
    """Returns the mask of states that can reach a target state along a path
    whose states before the target all lie in `through` (all states if
    omitted). Targets are included.
    """
    graph = _pattern(d.transitions)
    reached = targets.copy()
    frontier = targets.copy()
    while frontier.any():
        predecessors = (graph @ frontier.astype(float)) > 0
        if through is not None:
            predecessors &= through
        frontier = predecessors & ~reached
        reached |= frontier
    return reached


def forward_reachable(d: Dtmc, source: Optional[int] = None) -> np.ndarray:
    """Returns the mask of states reachable from the given state (the initial
    state by default).
    """
    start = d.initial if source is None else source
    order = breadth_first_order(
        _pattern(d.transitions), start, directed=True, return_predecessors=False
    )
    mask = np.zeros(d.n_states, dtype=bool)
    mask[order] = True
    return mask


def prob0(d: Dtmc, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """States from which ``a U b`` holds with probability exactly zero."""
    return ~backward_reachable(d, b, a & ~b)


def prob1(
    d: Dtmc, a: np.ndarray, b: np.ndarray, no: Optional[np.ndarray] = None
) -> np.ndarray:
    """States from which ``a U b`` holds with probability exactly one.

    These are the states that cannot reach a probability-zero state while
    staying in ``a \\ b``.
    """
    if no is None:
        no = prob0(d, a, b)
    return ~backward_reachable(d, no, a & ~b)


def bottom_components(d: Dtmc, within: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """Returns the bottom strongly connected components of the chain,
    restricted to the states of `within` if given (which must be closed under
    successors), as sorted arrays of state indices.
    """
    n = d.n_states
    if within is None:
        within = np.ones(n, dtype=bool)

    graph = _pattern(d.transitions)
    _, component_of = connected_components(graph, directed=True, connection="strong")

    sources, targets = graph.nonzero()
    leaving = component_of[sources] != component_of[targets]
    non_bottom = set(component_of[sources[leaving]].tolist())

    result: List[np.ndarray] = []
    for component in sorted(set(component_of[within].tolist())):
        if component in non_bottom:
            continue
        members = np.flatnonzero(component_of == component)
        result.append(members)

    result.sort(key=lambda members: int(members[0]))
    return result


def period(d: Dtmc, component: np.ndarray) -> int:
    """Returns the period of a strongly connected set of states.

    Computed as the gcd of ``level(u) + 1 - level(v)`` over the edges
    ``u -> v`` inside the component, where levels are BFS distances from its
    first state.
    """
    sub = _pattern(d.transitions)[component][:, component]
    order, _ = breadth_first_order(sub, 0, directed=True, return_predecessors=True)

    level = np.full(len(component), -1, dtype=np.int64)
    level[0] = 0
    for node in order:
        start, end = sub.indptr[node], sub.indptr[node + 1]
        for succ in sub.indices[start:end]:
            if level[succ] < 0:
                level[succ] = level[node] + 1

    result = 0
    rows, cols = sub.nonzero()
    for u, v in zip(rows, cols):
        result = gcd(result, int(abs(level[u] + 1 - level[v])))
        if result == 1:
            break
    return result or 1
