"""Discrete-event simulation of an RFID deployment with individual tags and
real protocol sessions.

The simulator follows the scheduling of the chain built by
:func:`rfidcheck.modelgen.build_rfid_model` step by step: in every time step
one of the enabled activities (admitting requests of group A, admitting
requests of group B, or advancing the service round) is chosen uniformly at
random. Unlike the chain, each tag runs the actual protocol against a server
database, so server costs come from the records the lookups really examined.
"""

import numpy as np

from dataclasses import dataclass, field
from logging import getLogger
from numpy.random import PCG64, Generator, SeedSequence
from typing import Dict, List, Optional, Tuple

from rfidcheck.errors import InvalidArgumentError
from rfidcheck.modelgen import RfidModelConfig
from rfidcheck.protocol import (
    Accept,
    AuthSuccess,
    ProtocolConfig,
    ServerDatabase,
    TagState,
    random_nonzero_bits,
    reader_challenge,
    server_authenticate,
    tag_finalize,
    tag_respond,
)

from .report import SimReport, summarize

__all__ = ("SERIES", "ProtocolSimulation", "simulate_protocol")

log = getLogger(__name__)

SERIES = ("authenticated", "in_service", "cum_tx", "cum_srv", "cum_tag")
"""Names of the time series recorded by the simulator."""

IDLE, REQUESTED, AUTHENTICATED = 0, 1, 2


@dataclass
class _Session:
    tag: int
    r1: int = 0
    m1: int = 0
    m2: int = 0
    m3: int = 0
    pending: Optional[TagState] = None


@dataclass
class _Deployment:
    """State of one simulated run."""

    cfg: RfidModelConfig
    pcfg: ProtocolConfig
    rng: Generator
    db: ServerDatabase
    tags: List[TagState]
    group_of: np.ndarray

    status: np.ndarray = field(init=False)
    requested_at: np.ndarray = field(init=False)
    delays: np.ndarray = field(init=False)
    phase: int = 0
    sessions: List[_Session] = field(default_factory=list)
    queue: List[int] = field(default_factory=list)
    """Tags waiting for the next service round, in admission order."""

    tx: float = 0.0
    srv: float = 0.0
    tag_cost: float = 0.0
    rounds: int = 0

    def __post_init__(self) -> None:
        n = len(self.tags)
        self.status = np.zeros(n, dtype=np.int8)
        self.requested_at = np.zeros(n, dtype=np.int64)
        self.delays = np.zeros(n, dtype=np.int64)

    @property
    def waiting(self) -> int:
        return len(self.queue)

    def requested(self, group: int) -> int:
        return int(np.count_nonzero((self.group_of == group) & (self.status > IDLE)))

    def all_requested(self) -> bool:
        return bool((self.status > IDLE).all())

    def all_authenticated(self) -> bool:
        return bool((self.status == AUTHENTICATED).all())

    def enabled(self) -> List[str]:
        if self.phase > 0:
            return ["service"]

        result = []
        capacity = self.cfg.capacity
        sizes = (self.cfg.n_a, self.cfg.n_b)
        for group, name in enumerate(("join_a", "join_b")):
            if self.requested(group) < sizes[group] and self.waiting < capacity:
                result.append(name)
        if self.waiting > 0 and (self.waiting == capacity or self.all_requested()):
            result.append("service")
        return result

    def join(self, group: int, now: int) -> None:
        idle = np.flatnonzero((self.group_of == group) & (self.status == IDLE))
        requests = idle[self.rng.random(idle.size) < self.cfg.arrival_prob]
        room = self.cfg.capacity - self.waiting
        admitted = self.rng.permutation(requests)[:room]
        for tag in admitted:
            self.status[tag] = REQUESTED
            self.requested_at[tag] = now + 1
            self.queue.append(int(tag))

    def advance_service(self, now: int) -> None:
        costs = self.cfg.costs
        if self.phase == 0:
            # Step 1: the reader challenges every admitted tag.
            self.sessions = [_Session(tag) for tag in self.queue]
            self.queue = []
            for session in self.sessions:
                session.r1 = reader_challenge(self.pcfg, self.rng).r1
            self.tx += costs.tx_challenge * len(self.sessions)
            self.phase = 1

        elif self.phase == 1:
            # Step 2: the tags respond.
            for session in self.sessions:
                response, session.pending = tag_respond(
                    self.pcfg, self.tags[session.tag], session.r1, self.rng
                )
                session.m1, session.m2 = response.m1, response.m2
            busy = len(self.sessions)
            self.tx += costs.tx_response * busy
            self.tag_cost += costs.tag_keyed_hash * busy
            self.phase = 2

        elif self.phase == 2:
            # Steps 3 and 4: the reader forwards, the server looks up.
            busy = len(self.sessions)
            survivors = []
            for session in self.sessions:
                m2 = session.m2
                if self.cfg.fault_prob > 0 and self.rng.random() < self.cfg.fault_prob:
                    m2 ^= random_nonzero_bits(self.rng, self.pcfg.l)
                result = server_authenticate(
                    self.pcfg, self.db, session.r1, session.m1, m2
                )
                self.srv += costs.server_probe * result.probes**costs.server_exponent
                if isinstance(result, AuthSuccess):
                    session.m3 = result.m3
                    survivors.append(session)
                else:
                    self._abort(session, now)
            self.sessions = survivors
            self.tx += (
                costs.tx_forward * busy
                + costs.tx_reply * len(survivors)
                + costs.tx_error * (busy - len(survivors))
            )
            self.phase = 3 if survivors else 0

        else:
            # Steps 5 and 6: the reader relays, the tags verify and update.
            for session in self.sessions:
                assert session.pending is not None
                outcome = tag_finalize(self.pcfg, session.pending, session.m3)
                if not isinstance(outcome, Accept):
                    log.warning(f"Tag {session.tag} rejected the server reply")
                    self._abort(session, now)
                    continue
                self.tags[session.tag] = outcome.tag
                self.status[session.tag] = AUTHENTICATED
                self.delays[session.tag] += now + 1 - self.requested_at[session.tag]
            busy = len(self.sessions)
            self.tx += costs.tx_relay * busy
            self.tag_cost += 2 * costs.tag_hash * busy
            self.sessions = []
            self.rounds += 1
            self.phase = 0

    def _abort(self, session: _Session, now: int) -> None:
        tag = session.tag
        self.tags[tag] = self.tags[tag].abort()
        self.status[tag] = IDLE
        self.delays[tag] += now + 1 - self.requested_at[tag]


@dataclass(frozen=True)
class ProtocolSimulation:
    """Aggregated outcome of simulating a deployment several times."""

    means: Dict[str, np.ndarray]
    """Mean of each time series over the runs, for times ``0..horizon``."""

    std_errors: Dict[str, np.ndarray]
    delays: np.ndarray
    """Delay of every tag of every run that completed its authentication,
    in steps.
    """

    throughput: float
    """Tags authenticated per completed service round."""

    runs: int
    seed: int
    unfinished: int = 0
    """Number of runs that hit the step cap before every tag was
    authenticated.
    """

    @property
    def horizon(self) -> int:
        return self.means["authenticated"].shape[0] - 1

    @property
    def mean_delay(self) -> float:
        return float(self.delays.mean()) if self.delays.size else float("nan")

    def report(self, series: str, t: int) -> SimReport:
        """Returns the estimate of one series at time `t`."""
        if series not in self.means:
            raise InvalidArgumentError(f"unknown series: {series!r}")
        if not 0 <= t <= self.horizon:
            raise InvalidArgumentError(f"time {t} outside 0..{self.horizon}")
        return SimReport(
            float(self.means[series][t]),
            float(self.std_errors[series][t]),
            self.runs,
            self.seed,
            reliable=self.unfinished == 0,
            low_confidence=self.runs < 2,
        )

    def delay_report(self) -> SimReport:
        """Returns the estimate of the mean tag delay."""
        return summarize(self.delays, self.seed, reliable=self.unfinished == 0)


def _run(
    cfg: RfidModelConfig,
    pcfg: ProtocolConfig,
    horizon: int,
    rng: Generator,
    max_steps: int,
) -> Tuple[np.ndarray, _Deployment, bool]:
    n = cfg.n_tags
    group_of = np.array([0] * cfg.n_a + [1] * cfg.n_b, dtype=np.int8)

    # Records are stored in random order so the expected number of records
    # examined per lookup does not depend on the group of the tag.
    db = ServerDatabase(pcfg)
    registered: Dict[int, TagState] = {}
    for tag in rng.permutation(n):
        registered[int(tag)] = db.register_random(rng)
    tags = [registered[tag] for tag in range(n)]
    world = _Deployment(cfg, pcfg, rng, db, tags, group_of)

    series = np.zeros((len(SERIES), horizon + 1))
    now = 0
    while True:
        if now <= horizon:
            series[:, now] = (
                np.count_nonzero(world.status == AUTHENTICATED),
                np.count_nonzero(world.status == REQUESTED),
                world.tx,
                world.srv,
                world.tag_cost,
            )
        done = world.all_authenticated()
        if (now >= horizon and done) or now >= max(horizon, max_steps):
            break

        choices = world.enabled()
        if choices:
            choice = choices[int(rng.integers(len(choices)))]
            if choice == "service":
                world.advance_service(now)
            else:
                world.join(0 if choice == "join_a" else 1, now)
        now += 1

    return series, world, world.all_authenticated()


def simulate_protocol(
    cfg: RfidModelConfig,
    pcfg: ProtocolConfig,
    horizon: int,
    runs: int,
    seed: int,
    *,
    max_steps: int = 1_000_000,
) -> ProtocolSimulation:
    """Simulates the deployment `runs` times.

    Run `i` draws its random numbers from a PCG64 generator seeded with
    ``SeedSequence([seed, i])``. Each run is continued past the horizon until
    every tag is authenticated (at most `max_steps` steps) so that the
    delays of all tags are known.

    The delay of a tag is the total number of steps it spent requesting
    authentication, summed over its attempts.

    Raises:
        InvalidArgumentError: if `horizon` or `runs` is not positive
    """
    if horizon < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    if runs < 1:
        raise InvalidArgumentError("at least one run is needed")

    samples = np.zeros((runs, len(SERIES), horizon + 1))
    delays: List[np.ndarray] = []
    completed = 0
    rounds = 0
    unfinished = 0

    for run in range(runs):
        rng = Generator(PCG64(SeedSequence([seed, run])))
        series, world, finished = _run(cfg, pcfg, horizon, rng, max_steps)
        samples[run] = series
        if finished:
            delays.append(world.delays)
            completed += cfg.n_tags
            rounds += world.rounds
        else:
            unfinished += 1

    if unfinished:
        log.warning(f"{unfinished} of {runs} runs did not authenticate every tag")

    means = samples.mean(axis=0)
    if runs > 1:
        errors = samples.std(axis=0, ddof=1) / np.sqrt(runs)
    else:
        errors = np.zeros_like(means)

    log.info(
        f"Simulated {runs} runs of {cfg.n_tags} tags", extra={"semantics": "success"}
    )
    return ProtocolSimulation(
        means={name: means[i] for i, name in enumerate(SERIES)},
        std_errors={name: errors[i] for i, name in enumerate(SERIES)},
        delays=np.concatenate(delays) if delays else np.zeros(0, dtype=np.int64),
        throughput=completed / rounds if rounds else float("nan"),
        runs=runs,
        seed=seed,
        unfinished=unfinished,
    )
