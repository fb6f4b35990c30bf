import math
import numpy as np
import pytest

from chains import gamblers_ruin, geometric_chain, random_chain
from numpy.random import PCG64, Generator, SeedSequence

from rfidcheck.dtmc import (
    Dtmc,
    RewardStructure,
    cumulative_series,
    instantaneous_series,
    reward_steady_state,
)
from rfidcheck.errors import InvalidArgumentError, UnsupportedStructureError
from rfidcheck.modelgen import RfidModelConfig, build_rfid_model
from rfidcheck.pctl import evaluate
from rfidcheck.protocol import ProtocolConfig, ServerDatabase
from rfidcheck.sim import (
    SERIES,
    DtmcSampler,
    RunStreams,
    SimReport,
    SimulationOptions,
    compare,
    simulate_dtmc,
    simulate_protocol,
    summarize,
)
from rfidcheck.sim.protocol import AUTHENTICATED, IDLE, _Deployment


def test_sampler_follows_transition_probabilities(rng):
    d = geometric_chain(0.3)
    sampler = DtmcSampler(d)
    states = np.zeros(100_000, dtype=np.int64)
    successors, _ = sampler.step(states, rng.random(states.size))
    assert np.mean(successors == 1) == pytest.approx(0.3, abs=0.01)

    absorbed, _ = sampler.step(np.ones(1000, dtype=np.int64), rng.random(1000))
    assert (absorbed == 1).all()


def test_sampler_collects_state_and_transition_rewards(rng):
    d = geometric_chain(0.5)
    r = RewardStructure.create(2, [1.0, 0.0], [(0, 1, 4.0)])
    sampler = DtmcSampler(d, r)
    states = np.zeros(1000, dtype=np.int64)
    successors, edges = sampler.step(states, rng.random(1000))
    rewards = sampler.step_rewards(states, edges)
    assert set(rewards[successors == 1]) == {5.0}
    assert set(rewards[successors == 0]) == {1.0}


@pytest.mark.parametrize(
    "query",
    [
        "P=? [F done]",
        "P=? [F<=3 done]",
        "P=? [X done]",
        'R{"steps"}=? [F done]',
        'R{"steps"}=? [C<=5]',
        'R{"steps"}=? [I=2]',
    ],
)
def test_estimates_agree_with_exact_values(query):
    d = geometric_chain(0.4)
    report = simulate_dtmc(d, None, query, runs=20_000, seed=7)
    assert report.reliable
    assert report.runs == 20_000
    assert compare(evaluate(d, None, query), report, sigma=4).passed


def test_until_with_constraint():
    d = gamblers_ruin(4)
    report = simulate_dtmc(d, None, "P=? [playing U b]", runs=20_000, seed=3)
    assert compare(0.5, report, sigma=4).passed


def test_long_run_average():
    d = Dtmc.create(2, 0, [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 1.0)])
    r = RewardStructure.create(2, [0.0, 3.0])
    options = SimulationOptions(steady_steps=2000)
    report = simulate_dtmc(d, r, "R=? [S]", runs=200, seed=11, options=options)
    assert report.estimate == pytest.approx(1.0, abs=0.05)

    with pytest.raises(UnsupportedStructureError):
        simulate_dtmc(
            d, r, "R=? [S]", runs=10, seed=11, options=SimulationOptions(steady_steps=10)
        )


def test_estimates_are_reproducible():
    d = geometric_chain(0.2)
    options = SimulationOptions(block_size=100)
    first = simulate_dtmc(d, None, "R=? [F done]", runs=1000, seed=5, options=options)
    second = simulate_dtmc(d, None, "R=? [F done]", runs=1000, seed=5, options=options)
    other = simulate_dtmc(d, None, "R=? [F done]", runs=1000, seed=6, options=options)
    assert first == second
    assert first.estimate != other.estimate


def test_block_size_does_not_change_estimates():
    d = gamblers_ruin(4)
    estimates = [
        simulate_dtmc(
            d,
            None,
            "P=? [playing U b]",
            runs=500,
            seed=13,
            options=SimulationOptions(block_size=size),
        )
        for size in (1, 7, 64, 4096)
    ]
    assert all(report == estimates[0] for report in estimates)


def test_run_streams_depend_on_the_run_only():
    whole = RunStreams(3, 0, 10)
    first = [whole.draw() for _ in range(100)]

    tail = RunStreams(3, 6, 4)
    assert np.array_equal(tail.draw(), first[0][6:])

    # runs that sit out a step keep their next number
    part = RunStreams(3, 0, 10)
    part.draw(np.array([2]))
    assert np.array_equal(part.draw(np.array([2, 5])), [first[1][2], first[0][5]])


_RANDOM_QUERIES = (
    "P=? [X b]",
    "P=? [a U<=5 b]",
    "P=? [a U b]",
    "P=? [F b]",
    'R{"r"}=? [I=3]',
    'R{"r"}=? [C<=5]',
    'R{"r"}=? [F b]',
)


@pytest.mark.parametrize("seed", range(20))
def test_estimates_agree_with_the_engine_on_random_chains(seed):
    rng = Generator(PCG64(SeedSequence([77, seed])))
    d = random_chain(rng, int(rng.integers(2, 9)))

    reach = evaluate(d, None, "P=? [F b]")
    for index, query in enumerate(_RANDOM_QUERIES):
        exact = evaluate(d, None, query)
        if math.isinf(exact) and reach > 0.99:
            # too few diverging runs to show up in the sample
            continue
        report = simulate_dtmc(d, None, query, runs=2000, seed=seed * 100 + index)
        assert report.reliable
        if report.std_error == 0 and not math.isinf(exact):
            # no variation in the sample; rare outcomes may not have shown up
            assert report.estimate == pytest.approx(
                exact, rel=5 / report.runs, abs=1e-9
            ), query
            continue
        comparison = compare(float(exact), report, sigma=4.5)
        assert comparison.passed, f"{query}: {comparison}"


@pytest.mark.parametrize("seed", range(5))
def test_long_run_average_on_random_chains(seed):
    rng = Generator(PCG64(SeedSequence([78, seed])))
    for _ in range(100):
        d = random_chain(rng, int(rng.integers(2, 9)))
        try:
            exact = reward_steady_state(d, d.rewards["r"])
        except UnsupportedStructureError:
            continue
        break
    else:
        pytest.fail("no chain with a single aperiodic bottom component")

    options = SimulationOptions(steady_steps=2000)
    report = simulate_dtmc(d, None, 'R{"r"}=? [S]', runs=200, seed=seed, options=options)
    assert report.estimate == pytest.approx(exact, abs=0.05)


def test_step_cap_makes_estimates_unreliable():
    d = geometric_chain(0.001)
    options = SimulationOptions(max_steps=2)
    report = simulate_dtmc(d, None, "P=? [F done]", runs=100, seed=1, options=options)
    assert not report.reliable
    assert "unreliable" in str(report)


def test_unreachable_targets_give_infinite_rewards():
    d = Dtmc.create(
        3,
        0,
        [(0, 1, 0.5), (0, 2, 0.5), (1, 1, 1.0), (2, 2, 1.0)],
        labels={"goal": [1]},
    )
    r = RewardStructure.create(3, [1.0, 1.0, 1.0])
    report = simulate_dtmc(d, r, "R=? [F goal]", runs=100, seed=2)
    assert report.estimate == math.inf
    assert compare(math.inf, report).passed


def test_only_numeric_queries_can_be_simulated():
    d = geometric_chain(0.5)
    with pytest.raises(InvalidArgumentError):
        simulate_dtmc(d, None, "P>=1 [F done]", runs=10, seed=1)
    with pytest.raises(InvalidArgumentError):
        simulate_dtmc(d, None, "done", runs=10, seed=1)
    with pytest.raises(InvalidArgumentError):
        simulate_dtmc(d, None, "P=? [F done]", runs=0, seed=1)


def test_summarize():
    report = summarize([1.0, 2.0, 3.0, 4.0], seed=9)
    assert report.estimate == 2.5
    assert report.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert not report.low_confidence

    single = summarize([3.0], seed=9)
    assert single.low_confidence
    assert single.std_error == 0.0

    with pytest.raises(InvalidArgumentError):
        summarize([], seed=9)


def test_compare():
    report = SimReport(10.0, 1.0, 100, 0)
    assert compare(12.5, report).passed
    assert not compare(13.5, report).passed
    assert compare(13.5, report).deviation == pytest.approx(3.5)
    assert compare(13.5, report, sigma=4).passed
    assert not compare(math.inf, report).passed
    assert "FAIL" in str(compare(20.0, report))
    with pytest.raises(InvalidArgumentError):
        compare(10.0, report, sigma=0)


def test_protocol_simulation_of_smallest_deployment():
    cfg = RfidModelConfig(1, 1, arrival_prob=1.0)
    sim = simulate_protocol(cfg, ProtocolConfig(l=64), horizon=10, runs=5, seed=4)

    assert set(sim.means) == set(SERIES)
    assert sim.horizon == 10
    assert sim.unfinished == 0
    assert list(sim.means["authenticated"]) == [0, 0, 0, 0, 0, 0, 2, 2, 2, 2, 2]
    assert list(sim.means["in_service"][:7]) == [0, 1, 2, 2, 2, 2, 0]
    assert sim.means["cum_tx"][10] == 18.0
    assert sim.means["cum_srv"][10] == 4.0
    assert sim.means["cum_tag"][10] == 6.0
    assert not sim.std_errors["cum_tx"].any()

    assert sorted(sim.delays) == [4, 4, 4, 4, 4, 5, 5, 5, 5, 5]
    assert sim.mean_delay == pytest.approx(4.5)
    assert sim.throughput == pytest.approx(2.0)

    report = sim.report("cum_tx", 10)
    assert report.estimate == 18.0
    assert report.reliable
    with pytest.raises(InvalidArgumentError):
        sim.report("energy", 1)
    with pytest.raises(InvalidArgumentError):
        sim.report("cum_tx", 11)


def test_protocol_simulation_matches_the_model():
    cfg = RfidModelConfig(2, 1, service_rate=2, arrival_prob=0.5, fault_prob=0.3)
    horizon = 30
    sim = simulate_protocol(cfg, ProtocolConfig(l=64), horizon, runs=400, seed=8)

    result = build_rfid_model(cfg)
    d, rewards = result.dtmc, result.rewards
    analytic = {
        "authenticated": instantaneous_series(d, rewards["authenticated"], horizon),
        "in_service": instantaneous_series(d, rewards["in_service"], horizon),
        "cum_tx": cumulative_series(d, rewards["MD_RT"], horizon),
        "cum_srv": cumulative_series(d, rewards["MD_RC_server"], horizon),
        "cum_tag": cumulative_series(d, rewards["MD_RC_tag"], horizon),
    }
    for series, values in analytic.items():
        for t in (5, 15, 30):
            comparison = compare(float(values[t]), sim.report(series, t), sigma=4.5)
            assert comparison.passed, f"{series} at t={t}: {comparison}"


def test_protocol_simulation_arguments():
    cfg = RfidModelConfig(1, 1)
    with pytest.raises(InvalidArgumentError):
        simulate_protocol(cfg, ProtocolConfig(l=64), horizon=0, runs=1, seed=0)
    with pytest.raises(InvalidArgumentError):
        simulate_protocol(cfg, ProtocolConfig(l=64), horizon=5, runs=0, seed=0)


def test_unfinished_runs_are_reported():
    cfg = RfidModelConfig(2, 2, arrival_prob=0.01)
    sim = simulate_protocol(
        cfg, ProtocolConfig(l=64), horizon=3, runs=3, seed=0, max_steps=3
    )
    assert sim.unfinished == 3
    assert not sim.report("authenticated", 3).reliable
    assert math.isnan(sim.mean_delay)
    assert math.isnan(sim.throughput)


def test_tags_that_reject_the_reply_return_to_idle(rng):
    cfg = RfidModelConfig(1, 1, arrival_prob=1.0)
    pcfg = ProtocolConfig(l=64)
    db = ServerDatabase(pcfg)
    tags = [db.register_random(rng), db.register_random(rng)]
    world = _Deployment(cfg, pcfg, rng, db, tags, np.array([0, 1], dtype=np.int8))

    world.join(0, 0)
    world.join(1, 1)
    for now in range(2, 5):
        world.advance_service(now)
    assert world.phase == 3

    corrupted, intact = world.sessions[0].tag, world.sessions[1].tag
    identifier = tags[corrupted].t
    world.sessions[0].m3 ^= 1
    world.advance_service(5)

    assert world.status[corrupted] == IDLE
    assert world.tags[corrupted].t == identifier
    assert world.tags[corrupted].pending_r1 is None
    assert world.status[intact] == AUTHENTICATED
    assert world.tags[intact].t != tags[intact].t
    assert world.phase == 0
    assert world.rounds == 1


@pytest.mark.slow
def test_throughput_at_full_service_rate():
    cfg = RfidModelConfig(1, 1, service_rate=25).with_tags(100)
    sim = simulate_protocol(cfg, ProtocolConfig(l=64), horizon=50, runs=5, seed=21)

    assert sim.unfinished == 0
    assert sim.throughput == pytest.approx(25, rel=0.1)
