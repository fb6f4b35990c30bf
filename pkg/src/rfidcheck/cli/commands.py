"""Implementation of the subcommands of the ``rfidcheck`` application.

Every command is an async function that receives the application and the
parsed command line arguments and returns the exit code of the app.
Domain errors are left to the application, which maps them to exit codes.
"""

import numpy as np
import trio

from argparse import Namespace
from dataclasses import dataclass
from functools import partial
from numpy.random import PCG64, Generator, SeedSequence
from pathlib import Path
from time import perf_counter
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

from rfidcheck.configurator import Configuration
from rfidcheck.dtmc import (
    Dtmc,
    SolverOptions,
    cumulative_series,
    dump_dtmc,
    instantaneous_series,
    load_dtmc,
)
from rfidcheck.errors import (
    ApplicationExit,
    InvalidArgumentError,
    MissingRewardError,
    NumericalError,
    RfidCheckError,
    StateLimitExceededError,
    UnsupportedStructureError,
)
from rfidcheck.modelgen import (
    BuildResult,
    CostTable,
    RfidModelConfig,
    ServiceMetrics,
    build,
    build_rfid_model,
    computation_costs,
    count_series,
    dump_model,
    load_model,
    rfid_model_text,
    service_metrics,
    transmission_series,
)
from rfidcheck.pctl import Property, Rewards, evaluate, load_properties, select_property
from rfidcheck.protocol import (
    AuthSuccess,
    Fault,
    ProtocolConfig,
    ServerDatabase,
    run_session,
)
from rfidcheck.sim import SERIES, Comparison, compare, simulate_protocol

from .experiment import ExperimentSpec
from .output import format_table, write_csv

if TYPE_CHECKING:
    from .app import RfidCheckApp

__all__ = (
    "SweepPoint",
    "check",
    "demo",
    "evaluate_sweep_point",
    "exit_code_for",
    "export",
    "simulate",
    "sweep",
)

DTMC_SUFFIXES = (".dtmc", ".tra")
"""Suffixes of files holding an explicit chain instead of a model."""

CHECKPOINTS = 5
"""Number of time points at which simulations are compared with the
analytic series.
"""


def exit_code_for(ex: BaseException) -> int:
    """Returns the exit code that the application uses for an error."""
    if isinstance(
        ex, (NumericalError, StateLimitExceededError, UnsupportedStructureError)
    ):
        return 3
    return 2


# --- Loading ----------------------------------------------------------------


def _state_limit(config: Configuration) -> Optional[int]:
    limit = config.get("STATE_LIMIT")
    return int(limit) if limit is not None else None


def _solver_options(config: Configuration) -> SolverOptions:
    return SolverOptions.from_config(config.get("SOLVER"))


def _seed(config: Configuration, seed: Optional[int]) -> int:
    return int(config.get("SEED", 0)) if seed is None else seed


def load_rfid_config(path: Path, config: Configuration) -> RfidModelConfig:
    """Reads an RFID model configuration, taking missing cost entries from
    the ``COSTS`` section of the app configuration.
    """
    return RfidModelConfig.load(path, costs=config.get("COSTS"))


def load_chain(path: Path, config: Configuration) -> Dtmc:
    """Loads a chain from an RFID model configuration (``.toml``), an
    explicit chain (``.dtmc``, ``.tra``) or a guarded-command model (any
    other suffix).
    """
    suffix = path.suffix.lower()
    if suffix == ".toml":
        cfg = load_rfid_config(path, config)
        return build_rfid_model(cfg, state_limit=_state_limit(config)).dtmc
    if suffix in DTMC_SUFFIXES:
        return load_dtmc(path)
    return build(load_model(path), state_limit=_state_limit(config)).dtmc


def experiment_from_args(args: Namespace) -> ExperimentSpec:
    """Assembles the experiment from ``--experiment`` and the flags that
    override its settings.
    """
    spec = ExperimentSpec.load(args.experiment) if args.experiment else ExperimentSpec()
    return spec.override(
        model=args.model,
        properties=getattr(args, "props", None),
        sweep=getattr(args, "sweep", None),
        horizon=args.horizon,
        out=args.out,
        seed=args.seed,
    )


# --- check ------------------------------------------------------------------


def _rewards_for(d: Dtmc, name: Optional[str]) -> Rewards:
    """Reward structures for the queries; `name` becomes the structure of
    reward queries that do not name one.
    """
    if name is None:
        return None
    if name not in d.rewards:
        raise MissingRewardError(f"no reward structure named {name!r}")
    return {**d.rewards, "default": d.rewards[name]}


def _initial_value(d: Dtmc, value: Any) -> Any:
    # state formulas are reported in the initial state
    if isinstance(value, frozenset):
        return d.initial in value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    return float(value)


async def check(app: "RfidCheckApp", args: Namespace) -> int:
    """Evaluates the properties of a property file on a model."""
    config = app.config
    properties = load_properties(args.props)
    if args.property is not None:
        properties = [select_property(properties, args.property)]

    d = load_chain(args.model, config)
    rewards = _rewards_for(d, args.reward)
    options = _solver_options(config)

    rows: List[Tuple[int, int, str, Any]] = []
    timings: List[float] = []
    for index, prop in enumerate(properties, 1):
        started = perf_counter()
        try:
            value = evaluate(d, rewards, prop.formula, options=options)
        except RfidCheckError as ex:
            raise ApplicationExit(
                f"{args.props}, line {prop.line}: {ex}", exit_code=exit_code_for(ex)
            ) from ex
        timings.append(perf_counter() - started)
        rows.append((index, prop.line, prop.text, _initial_value(d, value)))

    print(
        format_table(
            ("#", "line", "property", "value", "time [s]"),
            [(*row, f"{elapsed:.3f}") for row, elapsed in zip(rows, timings)],
        )
    )
    if args.out:
        write_csv(args.out, ("index", "line", "property", "value"), rows)

    failed = [row for row in rows if row[3] is False]
    if failed:
        lines = ", ".join(str(row[1]) for row in failed)
        app.log.warning(f"Properties on lines {lines} do not hold")
        return 1

    app.log.info(
        f"Checked {len(rows)} properties", extra={"semantics": "success"}
    )
    return 0


# --- sweep ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    """Everything the sweep computes for one number of tags."""

    n_tags: int
    counts: np.ndarray
    transmission: np.ndarray
    server_cost: float
    tag_cost: float
    metrics: ServiceMetrics
    properties: Sequence[Tuple[Property, Any]] = ()


def evaluate_sweep_point(
    cfg: RfidModelConfig,
    horizon: int,
    *,
    options: Optional[SolverOptions] = None,
    state_limit: Optional[int] = None,
    properties: Sequence[Property] = (),
) -> SweepPoint:
    """Builds the chain of one deployment and computes the series and
    metrics of the sweep on it. Runs in a worker thread.
    """
    result = build_rfid_model(cfg, state_limit=state_limit)
    d = result.dtmc
    server_cost, tag_cost = computation_costs(result, options)
    values = [
        (prop, _initial_value(d, evaluate(d, None, prop.formula, options=options)))
        for prop in properties
    ]
    return SweepPoint(
        n_tags=cfg.n_tags,
        counts=count_series(result, horizon),
        transmission=transmission_series(result, horizon),
        server_cost=server_cost,
        tag_cost=tag_cost,
        metrics=service_metrics(result, cfg, options),
        properties=values,
    )


def write_sweep(out: Path, points: Sequence[SweepPoint], horizon: int) -> List[Path]:
    """Writes the CSV files of a sweep; `points` must be ordered by N."""
    columns = ["t"] + [f"N={point.n_tags}" for point in points]
    paths = [
        write_csv(
            out / "fig2.csv",
            columns,
            ([t] + [point.counts[t] for point in points] for t in range(horizon + 1)),
        ),
        write_csv(
            out / "fig3.csv",
            columns,
            (
                [t] + [point.transmission[t] for point in points]
                for t in range(horizon + 1)
            ),
        ),
        write_csv(
            out / "fig4.csv",
            ("N", "server", "tag"),
            ((p.n_tags, p.server_cost, p.tag_cost) for p in points),
        ),
        write_csv(
            out / "fig5.csv",
            ("N", "processing_time", "mean_delay", "service_rate"),
            (
                (
                    p.n_tags,
                    p.metrics.processing_time,
                    p.metrics.mean_delay,
                    p.metrics.service_rate,
                )
                for p in points
            ),
        ),
    ]
    if any(point.properties for point in points):
        paths.append(
            write_csv(
                out / "properties.csv",
                ("N", "line", "property", "value"),
                (
                    (point.n_tags, prop.line, prop.text, value)
                    for point in points
                    for prop, value in point.properties
                ),
            )
        )
    return paths


async def sweep(app: "RfidCheckApp", args: Namespace) -> int:
    """Evaluates the RFID model for a range of tag counts and writes the
    series behind the result figures.
    """
    config = app.config
    spec = experiment_from_args(args)
    if spec.model:
        base = load_rfid_config(spec.model, config)
    else:
        base = RfidModelConfig(1, 1, costs=CostTable.from_mapping(config.get("COSTS", {})))
    properties = load_properties(spec.properties) if spec.properties else []

    evaluate_point = partial(
        evaluate_sweep_point,
        options=_solver_options(config),
        state_limit=_state_limit(config),
        properties=properties,
    )
    workers = int(config.get("SWEEP", {}).get("workers", 1))
    limiter = trio.CapacityLimiter(max(workers, 1))
    results: Dict[int, SweepPoint] = {}
    failures: Dict[int, RfidCheckError] = {}

    async with trio.open_nursery() as nursery:

        async def evaluate_tags(n_tags: int) -> None:
            try:
                cfg = base.with_tags(n_tags)
                results[n_tags] = await trio.to_thread.run_sync(
                    evaluate_point, cfg, spec.horizon, limiter=limiter
                )
            except RfidCheckError as ex:
                failures[n_tags] = ex
                nursery.cancel_scope.cancel()
            else:
                app.log.info(f"Evaluated N = {n_tags}")

        for n_tags in spec.tag_counts:
            nursery.start_soon(evaluate_tags, n_tags)

    if failures:
        n_tags = min(failures)
        ex = failures[n_tags]
        raise ApplicationExit(f"N = {n_tags}: {ex}", exit_code=exit_code_for(ex))

    points = [results[n_tags] for n_tags in spec.tag_counts]
    paths = write_sweep(spec.out, points, spec.horizon)
    app.log.info(
        f"Wrote {len(paths)} files to {spec.out}", extra={"semantics": "success"}
    )
    return 0


# --- simulate ---------------------------------------------------------------


def checkpoints(horizon: int, count: int = CHECKPOINTS) -> List[int]:
    """Time points, spread evenly up to the horizon, at which simulated and
    analytic series are compared.
    """
    return sorted({max(1, round(horizon * k / count)) for k in range(1, count + 1)})


def analytic_series(result: BuildResult, horizon: int) -> Dict[str, np.ndarray]:
    """Expected values of the simulated time series, computed on the
    chain.
    """
    d = result.dtmc
    rewards = result.rewards
    return {
        "authenticated": instantaneous_series(d, rewards["authenticated"], horizon),
        "in_service": instantaneous_series(d, rewards["in_service"], horizon),
        "cum_tx": cumulative_series(d, rewards["MD_RT"], horizon),
        "cum_srv": cumulative_series(d, rewards["MD_RC_server"], horizon),
        "cum_tag": cumulative_series(d, rewards["MD_RC_tag"], horizon),
    }


def _flags(comparison: Comparison) -> str:
    flags = []
    if not comparison.report.reliable:
        flags.append("unreliable")
    if comparison.report.low_confidence:
        flags.append("low-confidence")
    return ";".join(flags)


async def simulate(app: "RfidCheckApp", args: Namespace) -> int:
    """Simulates a deployment running the real protocol and compares the
    outcome with the expected values computed on the chain.
    """
    config = app.config
    spec = experiment_from_args(args)
    if spec.model is None:
        raise InvalidArgumentError("simulate needs a model configuration (--model)")

    cfg = load_rfid_config(spec.model, config)
    pcfg = ProtocolConfig(l=args.l)
    settings = config.get("SIMULATION", {})
    runs = args.runs or int(settings.get("protocol_runs", 200))
    seed = _seed(config, spec.seed)
    horizon = spec.horizon

    outcome = await trio.to_thread.run_sync(
        partial(
            simulate_protocol,
            cfg,
            pcfg,
            horizon,
            runs,
            seed,
            max_steps=int(settings.get("max_steps", 1_000_000)),
        )
    )
    result = build_rfid_model(cfg, state_limit=_state_limit(config))
    expected = analytic_series(result, horizon)

    write_csv(
        spec.out / "sim.csv",
        ("t",) + SERIES,
        (
            [t] + [outcome.means[name][t] for name in SERIES]
            for t in range(horizon + 1)
        ),
    )
    write_csv(
        spec.out / "delays.csv",
        ("sample", "delay"),
        enumerate(outcome.delays.tolist()),
    )

    rows = []
    for name in SERIES:
        for t in checkpoints(horizon):
            comparison = compare(float(expected[name][t]), outcome.report(name, t))
            rows.append(
                (
                    name,
                    t,
                    comparison.analytic,
                    comparison.report.estimate,
                    comparison.report.std_error,
                    "pass" if comparison.passed else "fail",
                    _flags(comparison),
                )
            )
    header = ("series", "t", "analytic", "estimate", "std_error", "result", "flags")
    write_csv(spec.out / "comparison.csv", header, rows)
    print(format_table(header, rows))

    metrics = service_metrics(result, cfg, _solver_options(config))
    delay = outcome.delay_report() if outcome.delays.size else "n/a"
    print()
    print(f"Mean tag delay: analytic {metrics.mean_delay:.6g}, simulated {delay}")
    print(f"Service throughput: {outcome.throughput:.6g} tags per round")

    failed = sum(1 for row in rows if row[5] == "fail")
    if failed:
        app.log.warning(f"{failed} of {len(rows)} comparisons failed")
        return 1

    app.log.info(
        f"All {len(rows)} comparisons passed", extra={"semantics": "success"}
    )
    return 0


# --- demo -------------------------------------------------------------------


def _server_decision(result: Any) -> str:
    if result is None:
        return "not reached"
    if isinstance(result, AuthSuccess):
        return (
            f"accepted ({result.matched.value} pair of record {result.record_index}, "
            f"{result.probes} probes)"
        )
    return f"rejected ({result.probes} probes)"


async def demo(app: "RfidCheckApp", args: Namespace) -> int:
    """Runs a single protocol session and prints its transcript."""
    pcfg = ProtocolConfig(l=args.l)
    fault = Fault.parse(args.fault)
    rng = Generator(PCG64(SeedSequence(_seed(app.config, args.seed))))

    db = ServerDatabase(pcfg)
    tag = db.register_random(rng)
    transcript = run_session(pcfg, tag, db, rng, fault)

    print(f"Session with l = {pcfg.l} bits, fault: {fault}")
    print(transcript.format(pcfg.l), end="")
    print(f"server: {_server_decision(transcript.server_result)}")
    print(f"tag: {'accepted' if transcript.tag_accepted else 'rejected'}")

    if transcript.mutual:
        app.log.info("Mutual authentication succeeded", extra={"semantics": "success"})
        return 0

    app.log.warning("Mutual authentication failed")
    return 1


# --- export -----------------------------------------------------------------


async def export(app: "RfidCheckApp", args: Namespace) -> int:
    """Writes the guarded-command model and the explicit chain of a model."""
    config = app.config
    source: Path = args.model
    out: Path = args.out or Path(".")

    model = None
    if source.suffix.lower() == ".toml":
        cfg = load_rfid_config(source, config)
        text = rfid_model_text(cfg)
        d = build_rfid_model(cfg, state_limit=_state_limit(config)).dtmc
    else:
        model = load_model(source)
        d = build(model, state_limit=_state_limit(config)).dtmc

    model_path = out / f"{source.stem}.pm"
    chain_path = out / f"{source.stem}.dtmc"
    if source.resolve() in (model_path.resolve(), chain_path.resolve()):
        raise InvalidArgumentError(f"refusing to overwrite the input file {source}")

    out.mkdir(parents=True, exist_ok=True)
    if model is None:
        model_path.write_text(text, encoding="utf-8")
    else:
        dump_model(model, model_path)
    dump_dtmc(d, chain_path)
    app.log.info(
        f"Wrote {model_path} and {chain_path} ({d.n_states} states)",
        extra={"semantics": "success"},
    )
    return 0
