"""Small chains with known answers, shared by the test modules."""

import numpy as np

from numpy.random import Generator

from rfidcheck.dtmc import Dtmc, RewardStructure


def geometric_chain(p: float) -> Dtmc:
    """State 0 moves to the absorbing state 1 with probability `p`; every
    step spent in state 0 costs one unit.
    """
    steps = RewardStructure.create(2, [1.0, 0.0])
    return Dtmc.create(
        2,
        0,
        [(0, 1, p), (0, 0, 1 - p), (1, 1, 1.0)],
        labels={"done": [1]},
        rewards={"steps": steps},
    )


def gamblers_ruin(n: int = 4) -> Dtmc:
    """Fair random walk on 0..n started in the middle, absorbed at both
    ends.
    """
    triples = [(0, 0, 1.0), (n, n, 1.0)]
    for i in range(1, n):
        triples += [(i, i - 1, 0.5), (i, i + 1, 0.5)]
    return Dtmc.create(
        n + 1,
        n // 2,
        triples,
        labels={"broke": [0], "b": [n], "playing": list(range(1, n))},
    )


def random_chain(rng: Generator, n: int) -> Dtmc:
    """Random chain with `n` states, at most three successors per state,
    labels ``a`` and ``b`` and a reward structure ``r`` with state and
    transition rewards.
    """
    triples = []
    transition_rewards = []
    for state in range(n):
        count = int(rng.integers(1, min(3, n) + 1))
        targets = rng.choice(n, size=count, replace=False)
        weights = rng.random(count) + 0.1
        for target, weight in zip(targets, weights / weights.sum()):
            triples.append((state, int(target), float(weight)))
            if rng.random() < 0.5:
                transition_rewards.append((state, int(target), float(rng.random())))

    b = rng.random(n) < 0.3
    b[int(rng.integers(n))] = True
    a = ~b & (rng.random(n) < 0.8)
    rewards = RewardStructure.create(n, rng.random(n) * 2, transition_rewards)
    return Dtmc.create(
        n,
        0,
        triples,
        labels={"a": np.flatnonzero(a), "b": np.flatnonzero(b)},
        rewards={"r": rewards},
    )
