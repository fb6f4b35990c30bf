import numpy as np
import pytest

from chains import gamblers_ruin, geometric_chain, random_chain
from numpy.random import PCG64, Generator, SeedSequence

from rfidcheck.dtmc import (
    Dtmc,
    RewardStructure,
    SolverOptions,
    bottom_components,
    cumulative_series,
    dumps_dtmc,
    forward_reachable,
    instantaneous_series,
    loads_dtmc,
    period,
    prob0,
    prob1,
    prob_bounded_until,
    prob_next,
    prob_until,
    reward_cumulative,
    reward_instantaneous,
    reward_reachability,
    reward_reachability_vector,
    reward_steady_state,
    transient_distribution,
    transient_series,
    validate,
)
from rfidcheck.errors import (
    InvalidArgumentError,
    ModelSyntaxError,
    NumericalError,
    UnknownLabelError,
    UnsupportedStructureError,
)


def test_create_rejects_invalid_chains():
    with pytest.raises(InvalidArgumentError):
        Dtmc.create(0, 0, [])
    with pytest.raises(InvalidArgumentError):
        Dtmc.create(2, 5, [(0, 1, 1.0), (1, 1, 1.0)])
    with pytest.raises(InvalidArgumentError):
        Dtmc.create(2, 0, [(0, 2, 1.0)])


def test_validate_reports_bad_rows():
    d = Dtmc.create(3, 0, [(0, 1, 0.5), (0, 2, 0.4), (1, 1, 1.0)])
    violations = validate(d)
    assert any("state 0" in item for item in violations)
    assert any("state 2: no outgoing" in item for item in violations)
    assert validate(geometric_chain(0.5)) == []


def test_unknown_label():
    with pytest.raises(UnknownLabelError):
        geometric_chain(0.5).mask("missing")


def test_transient_distribution():
    d = geometric_chain(0.5)
    assert transient_distribution(d, 0) == pytest.approx([1.0, 0.0])
    assert transient_distribution(d, 3) == pytest.approx([0.125, 0.875])

    series = transient_series(d, 3)
    assert series.shape == (4, 2)
    assert series[:, 0] == pytest.approx([1.0, 0.5, 0.25, 0.125])
    assert series.sum(axis=1) == pytest.approx(np.ones(4))


def test_prob_next_and_bounded_until():
    d = geometric_chain(0.25)
    done = d.mask("done")
    assert prob_next(d, done) == pytest.approx([0.25, 1.0])
    everything = np.ones(2, dtype=bool)
    assert prob_bounded_until(d, everything, done, 0) == pytest.approx([0.0, 1.0])
    assert prob_bounded_until(d, everything, done, 2)[0] == pytest.approx(
        1 - 0.75**2
    )


def test_gamblers_ruin_is_fair():
    d = gamblers_ruin(4)
    values = prob_until(d, d.mask("playing"), d.mask("b"))
    assert values[d.initial] == pytest.approx(0.5, abs=1e-8)
    assert values == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0], abs=1e-8)


def test_graph_precomputation():
    d = gamblers_ruin(4)
    a, b = d.mask("playing"), d.mask("b")
    assert list(np.flatnonzero(prob0(d, a, b))) == [0]
    assert list(np.flatnonzero(prob1(d, a, b))) == [4]
    assert forward_reachable(d).all()


@pytest.mark.parametrize("p", [0.5, 0.25, 0.1])
@pytest.mark.parametrize("method", ["gauss-seidel", "direct"])
def test_geometric_reachability_reward(p, method):
    d = geometric_chain(p)
    value = reward_reachability(
        d, d.rewards["steps"], d.mask("done"), SolverOptions(method=method)
    )
    assert value == pytest.approx(1 / p, abs=1e-8)


def test_jacobi_converges():
    d = geometric_chain(0.25)
    value = reward_reachability(
        d, d.rewards["steps"], d.mask("done"), SolverOptions(method="jacobi")
    )
    assert value == pytest.approx(4.0, rel=1e-6)


def test_iteration_cap_is_a_numerical_error():
    d = geometric_chain(0.01)
    options = SolverOptions(method="jacobi", max_iterations=3)
    with pytest.raises(NumericalError):
        reward_reachability(d, d.rewards["steps"], d.mask("done"), options)


def test_unreachable_target_gives_infinite_reward():
    d = Dtmc.create(
        3,
        0,
        [(0, 1, 0.5), (0, 2, 0.5), (1, 1, 1.0), (2, 2, 1.0)],
        labels={"goal": [1]},
    )
    r = RewardStructure.create(3, [1.0, 1.0, 1.0])
    values = reward_reachability_vector(d, r, d.mask("goal"))
    assert values[0] == np.inf
    assert values[1] == 0.0
    assert values[2] == np.inf


def test_instantaneous_and_cumulative_rewards():
    d = geometric_chain(0.5)
    r = RewardStructure.create(2, [1.0, 0.0], [(0, 1, 4.0)])
    assert reward_instantaneous(d, r, 0) == 1.0
    assert reward_instantaneous(d, r, 2) == pytest.approx(0.25)
    assert reward_cumulative(d, r, 0) == 0.0
    # first step: state reward 1 plus 4 with probability 1/2
    assert reward_cumulative(d, r, 1) == pytest.approx(3.0)
    series = cumulative_series(d, r, 10)
    assert series[1] == pytest.approx(3.0)
    assert np.all(np.diff(series) >= 0)
    assert instantaneous_series(d, r, 3) == pytest.approx([1.0, 0.5, 0.25, 0.125])


def test_negative_step_count():
    with pytest.raises(InvalidArgumentError):
        reward_cumulative(geometric_chain(0.5), RewardStructure.create(2), -1)


def test_steady_state_of_aperiodic_chain():
    d = Dtmc.create(2, 0, [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 1.0)])
    r = RewardStructure.create(2, [0.0, 3.0])
    # stationary distribution (2/3, 1/3)
    assert reward_steady_state(d, r) == pytest.approx(1.0)


def test_steady_state_rejects_periodic_and_split_chains():
    flip = Dtmc.create(2, 0, [(0, 1, 1.0), (1, 0, 1.0)])
    assert period(flip, np.array([0, 1])) == 2
    with pytest.raises(UnsupportedStructureError):
        reward_steady_state(flip, RewardStructure.create(2, [1.0, 0.0]))

    split = gamblers_ruin(4)
    assert len(bottom_components(split)) == 2
    with pytest.raises(UnsupportedStructureError):
        reward_steady_state(split, RewardStructure.create(5))


def test_text_format_round_trip():
    d = random_chain(Generator(PCG64(SeedSequence(7))), 6)
    loaded = loads_dtmc(dumps_dtmc(d))
    assert loaded.initial == d.initial
    assert (loaded.transitions != d.transitions).nnz == 0
    assert set(loaded.labels) == set(d.labels)
    assert np.array_equal(
        loaded.rewards["r"].state_rewards, d.rewards["r"].state_rewards
    )
    assert dumps_dtmc(loaded) == dumps_dtmc(d)


def test_text_format_errors_name_the_line():
    with pytest.raises(ModelSyntaxError, match="line 2"):
        loads_dtmc("dtmc 2 0\n0 1 x\n")
    with pytest.raises(ModelSyntaxError):
        loads_dtmc("0 1 1.0\n")


def _closure(P: np.ndarray, start: np.ndarray, through: np.ndarray) -> np.ndarray:
    """States in `start` plus those that reach it along `through` states."""
    edges = P > 0
    result = start.copy()
    while True:
        grown = result | (through & (edges @ result))
        if np.array_equal(grown, result):
            return result
        result = grown


def _dense_until(d: Dtmc, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    P = d.transitions.toarray()
    no = ~_closure(P, b, a)
    yes = ~_closure(P, no, a & ~b)
    maybe = ~(yes | no)

    result = yes.astype(float)
    if maybe.any():
        system = np.eye(int(maybe.sum())) - P[np.ix_(maybe, maybe)]
        rhs = P[np.ix_(maybe, yes)].sum(axis=1)
        result[maybe] = np.linalg.solve(system, rhs)
    return result


def _dense_reachability(d: Dtmc, r: RewardStructure, target: np.ndarray) -> np.ndarray:
    P = d.transitions.toarray()
    everything = np.ones(d.n_states, dtype=bool)
    never = ~_closure(P, target, everything)
    sure = ~_closure(P, never, ~target) & ~target

    step = r.state_rewards + (P * r.transition_rewards.toarray()).sum(axis=1)
    result = np.full(d.n_states, np.inf)
    result[target] = 0.0
    if sure.any():
        system = np.eye(int(sure.sum())) - P[np.ix_(sure, sure)]
        result[sure] = np.linalg.solve(system, step[sure])
    return result


@pytest.mark.parametrize("seed", range(50))
def test_engines_match_dense_oracle(seed):
    rng = Generator(PCG64(SeedSequence([99, seed])))
    d = random_chain(rng, int(rng.integers(2, 13)))
    a, b = d.mask("a"), d.mask("b")

    assert prob_until(d, a, b, SolverOptions()) == pytest.approx(
        _dense_until(d, a, b), abs=1e-7
    )

    expected = _dense_reachability(d, d.rewards["r"], b)
    actual = reward_reachability_vector(d, d.rewards["r"], b, SolverOptions())
    assert np.array_equal(np.isinf(actual), np.isinf(expected))
    finite = ~np.isinf(expected)
    assert actual[finite] == pytest.approx(expected[finite], rel=1e-7, abs=1e-7)


@pytest.mark.parametrize("seed", range(10))
def test_bounded_until_is_monotone_and_converges(seed):
    rng = Generator(PCG64(SeedSequence([98, seed])))
    d = random_chain(rng, int(rng.integers(2, 13)))
    a, b = d.mask("a"), d.mask("b")

    previous = np.zeros(d.n_states)
    for t in range(60):
        current = prob_bounded_until(d, a, b, t)
        assert np.all(current >= previous - 1e-12)
        assert np.all(current <= 1 + 1e-12)
        previous = current

    limit = prob_until(d, a, b)
    assert np.all(previous <= limit + 1e-7)
    assert prob_bounded_until(d, a, b, 5_000) == pytest.approx(limit, abs=1e-6)
