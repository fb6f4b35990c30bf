"""Guarded-command model of a deployment of the RFID mutual authentication
protocol with two groups of tags, a reader and a back-end server.

The model counts tags instead of tracking them individually: ``ra`` tags of
group A have requested authentication so far and ``da`` of them have been
authenticated (``rb`` and ``db`` for group B). Requests are admitted up to
the service capacity; once the capacity is filled, or every tag has
requested, the server starts a service round that walks all admitted
sessions through the protocol in four steps:

- ``[challenge]``: the reader broadcasts its nonce
- ``[respond]``: the tags answer with their two response fields
- ``[lookup]``: the reader forwards the answers and the server searches its
  database; each session fails independently with the fault probability,
  and failed tags go back to idle to retry later
- ``[relay]``: the reader relays the server replies and the tags update
  their identifiers

One transition of the chain is one time step; the builder picks uniformly
among the enabled commands.
"""

import numpy as np

from dataclasses import dataclass, field, fields, replace
from itertools import combinations
from logging import getLogger
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from rfidcheck.dtmc import (
    Dtmc,
    SolverOptions,
    cumulative_series,
    instantaneous_series,
    reward_reachability,
)
from rfidcheck.errors import InvalidArgumentError

from .builder import BuildResult, build
from .model import Model
from .text import parse_model

try:
    from tomllib import load as load_toml
except ImportError:
    from tomli import load as load_toml

__all__ = (
    "CostTable",
    "MAX_EXPLICIT_TAGS",
    "RfidModelConfig",
    "ServiceMetrics",
    "build_rfid_model",
    "computation_costs",
    "count_series",
    "increment_spread",
    "rfid_model",
    "rfid_model_text",
    "saturation_time",
    "service_metrics",
    "transmission_series",
)

log = getLogger(__name__)

MAX_EXPLICIT_TAGS = 6
"""Largest number of tags for which the per-tag model may be generated."""

ROUND_LENGTH = 4
"""Number of steps a service round takes."""


@dataclass(frozen=True)
class CostTable:
    """Weights of the events that the reward structures accumulate.

    Transmission weights count the identifier-sized fields of each message;
    the server pays `server_probe` per keyed-hash probe of its database,
    raised to `server_exponent`; tags pay one keyed hash when responding and
    two hashes when verifying the server reply.
    """

    tx_challenge: float = 1.0
    tx_response: float = 2.0
    tx_forward: float = 3.0
    tx_reply: float = 2.0
    tx_relay: float = 1.0
    tx_error: float = 1.0
    server_probe: float = 1.0
    server_exponent: float = 1.0
    tag_keyed_hash: float = 1.0
    tag_hash: float = 1.0

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "CostTable":
        """Creates a cost table from a mapping; missing entries take their
        defaults.

        Raises:
            InvalidArgumentError: for unknown entries and invalid values
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InvalidArgumentError(f"unknown cost entries: {', '.join(unknown)}")
        try:
            return cls(**{key: float(value) for key, value in values.items()})
        except (TypeError, ValueError):
            raise InvalidArgumentError("cost entries must be numbers") from None

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise InvalidArgumentError(f"cost {f.name!r} must not be negative")

    @property
    def session_transmission(self) -> float:
        """Transmission cost of one successful session."""
        return (
            self.tx_challenge
            + self.tx_response
            + self.tx_forward
            + self.tx_reply
            + self.tx_relay
        )

    @property
    def session_tag_cost(self) -> float:
        """Computation cost of a tag in one successful session."""
        return self.tag_keyed_hash + 2 * self.tag_hash

    def server_success_cost(self, n_tags: int) -> float:
        """Expected server cost of a successful lookup in a database of
        `n_tags` records, averaged over the position of the matching record.
        """
        probes = 2 * np.arange(n_tags, dtype=float) + 1
        return float(self.server_probe * np.mean(probes**self.server_exponent))

    def server_failure_cost(self, n_tags: int) -> float:
        """Server cost of a failed lookup, which probes every stored pair."""
        return float(self.server_probe * (2.0 * n_tags) ** self.server_exponent)


@dataclass(frozen=True)
class RfidModelConfig:
    """Parameters of the RFID deployment model."""

    n_a: int
    n_b: int
    service_rate: int = 25
    """Number of sessions the server runs in one service round."""

    arrival_prob: float = 0.05
    """Probability that an idle tag requests authentication in a step in
    which its group may join.
    """

    fault_prob: float = 0.0
    """Probability that a session fails at the server lookup."""

    costs: CostTable = field(default_factory=CostTable)

    explicit: bool = False
    """Whether to generate one variable per tag instead of counters."""

    def __post_init__(self) -> None:
        for name in ("n_a", "n_b"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value <= 50:
                raise InvalidArgumentError(f"{name} must be an integer in 0..50")
        if not 1 <= self.n_tags <= 100:
            raise InvalidArgumentError("the total number of tags must be in 1..100")
        if not isinstance(self.service_rate, int) or self.service_rate < 1:
            raise InvalidArgumentError("service_rate must be a positive integer")
        if not 0 < self.arrival_prob <= 1:
            raise InvalidArgumentError("arrival_prob must be in (0, 1]")
        if not 0 <= self.fault_prob < 1:
            raise InvalidArgumentError("fault_prob must be in [0, 1)")
        if self.explicit and self.n_tags > MAX_EXPLICIT_TAGS:
            raise InvalidArgumentError(
                f"the per-tag model supports at most {MAX_EXPLICIT_TAGS} tags"
            )

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RfidModelConfig":
        """Creates a configuration from a mapping, typically the contents of
        a TOML file. An optional ``costs`` table overrides entries of the
        given or default cost table.

        Raises:
            InvalidArgumentError: for unknown keys and invalid values
        """
        values = dict(values)
        costs = values.pop("costs", {})
        if isinstance(costs, CostTable):
            cost_table = costs
        elif isinstance(costs, Mapping):
            cost_table = CostTable.from_mapping(costs)
        else:
            raise InvalidArgumentError("costs must be a table")

        known = {f.name for f in fields(cls)} - {"costs"}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InvalidArgumentError(
                f"unknown model parameters: {', '.join(unknown)}"
            )
        if "n_a" not in values or "n_b" not in values:
            raise InvalidArgumentError("model configuration needs n_a and n_b")

        try:
            n_a = int(values["n_a"])
            n_b = int(values["n_b"])
            service_rate = int(values.get("service_rate", cls.service_rate))
            arrival_prob = float(values.get("arrival_prob", cls.arrival_prob))
            fault_prob = float(values.get("fault_prob", cls.fault_prob))
        except (TypeError, ValueError) as ex:
            raise InvalidArgumentError(f"invalid model parameter: {ex}") from None

        return cls(
            n_a=n_a,
            n_b=n_b,
            service_rate=service_rate,
            arrival_prob=arrival_prob,
            fault_prob=fault_prob,
            costs=cost_table,
            explicit=bool(values.get("explicit", False)),
        )

    @classmethod
    def load(
        cls, path: Union[str, Path], *, costs: Optional[Mapping[str, Any]] = None
    ) -> "RfidModelConfig":
        """Reads a configuration from a ``key = value`` file in TOML syntax.

        Parameters:
            costs: cost entries to use where the ``costs`` table of the file
                does not set them

        Raises:
            InvalidArgumentError: if the file is malformed
        """
        try:
            with open(path, "rb") as fp:
                values = load_toml(fp)
        except ValueError as ex:
            raise InvalidArgumentError(f"{path}: {ex}") from None
        if costs:
            file_costs = values.get("costs", {})
            if isinstance(file_costs, Mapping):
                values["costs"] = {**costs, **file_costs}
        try:
            return cls.from_mapping(values)
        except InvalidArgumentError as ex:
            raise InvalidArgumentError(f"{path}: {ex}") from None

    @property
    def n_tags(self) -> int:
        return self.n_a + self.n_b

    @property
    def capacity(self) -> int:
        """Number of sessions in a full service round."""
        return min(self.service_rate, self.n_tags)

    def with_tags(self, n_tags: int) -> "RfidModelConfig":
        """Returns a copy with `n_tags` tags split between the groups, group
        A taking the larger half.
        """
        n_b = n_tags // 2
        return replace(self, n_a=n_tags - n_b, n_b=n_b)


# --- Model text -------------------------------------------------------------


def _number(value: float) -> str:
    return repr(float(value))


def _sum(terms: Sequence[str]) -> str:
    return " + ".join(terms) if terms else "0"


def _header(cfg: RfidModelConfig) -> List[str]:
    costs = cfg.costs
    lines = [
        "dtmc",
        "",
        f"const int nA = {cfg.n_a};",
        f"const int nB = {cfg.n_b};",
        f"const int cap = {cfg.capacity};",
        f"const double p = {_number(cfg.arrival_prob)};",
        f"const double f = {_number(cfg.fault_prob)};",
        "",
    ]
    for item in fields(costs):
        if item.name.startswith("server_"):
            continue
        lines.append(f"const double {item.name} = {_number(getattr(costs, item.name))};")
    lines.append(
        f"const double srv_success = {_number(costs.server_success_cost(cfg.n_tags))};"
    )
    lines.append(
        f"const double srv_failure = {_number(costs.server_failure_cost(cfg.n_tags))};"
    )
    lines.append("")
    return lines


def _shared_formulas() -> List[str]:
    return [
        "formula waiting = ra + rb - da - db;",
        "formula room = cap - waiting;",
        "",
    ]


def _admission(k: int, idle: str) -> str:
    """Probability that exactly `k` of `idle` tags are admitted when each
    requests with probability `p` and at most `room` are let in.
    """
    return (
        f"({k} < room ? binom({k}, {idle}, p) : "
        f"({k} = room ? binom_tail({k}, {idle}, p) : 0))"
    )


def _join_command(group: str, cfg: RfidModelConfig) -> str:
    size = cfg.n_a if group == "a" else cfg.n_b
    bound = "nA" if group == "a" else "nB"
    updates = [
        f"{_admission(k, f'{bound} - r{group}')} : (r{group}'=r{group} + {k})"
        for k in range(min(size, cfg.capacity) + 1)
    ]
    joined = "\n      + ".join(updates)
    return f"  [join_{group}] ph=0 & r{group} < {bound} & waiting < cap\n      -> {joined};"


_CHALLENGE = (
    "  [challenge] ph=0 & waiting > 0 & (waiting = cap | ra = nA & rb = nB)\n"
    "      -> (busy'=waiting) & (ph'=1) & (inflight'=waiting);"
)

_RESPOND = "  [respond] ph=1 -> (ph'=2);"


def _after_failures(failed: str) -> str:
    return (
        f"(busy'=busy - {failed}) & (ph'=(busy - {failed} > 0 ? 3 : 0)) & "
        f"(inflight'=busy - {failed})"
    )


def _counter_lookup(cfg: RfidModelConfig) -> str:
    if cfg.fault_prob == 0:
        return "  [lookup] ph=2 -> (ph'=3);"

    updates = []
    for fa in range(min(cfg.n_a, cfg.capacity) + 1):
        for fb in range(min(cfg.n_b, cfg.capacity) + 1):
            updates.append(
                f"binom({fa}, ra - da, f) * binom({fb}, rb - db, f) : "
                f"(ra'=ra - {fa}) & (rb'=rb - {fb}) & "
                + _after_failures(f"{fa + fb}")
            )
    joined = "\n      + ".join(updates)
    return f"  [lookup] ph=2\n      -> {joined};"


_COUNTER_RELAY = (
    "  [relay] ph=3 -> (ph'=0) & (da'=ra) & (db'=rb) & (busy'=0) & (inflight'=0);"
)


def _rewards_and_labels() -> List[str]:
    return [
        'label "allauth" = da = nA & db = nB;',
        'label "saturated" = ph > 0 & busy = cap;',
        "",
        'rewards "MD_RT"',
        "  [challenge] true : tx_challenge * waiting;",
        "  [respond] true : tx_response * busy;",
        "  [lookup] true : tx_forward * busy + tx_reply * busy' + tx_error * (busy - busy');",
        "  [relay] true : tx_relay * busy;",
        "endrewards",
        "",
        'rewards "MD_RC_server"',
        "  [lookup] true : srv_success * busy' + srv_failure * (busy - busy');",
        "endrewards",
        "",
        'rewards "MD_RC_tag"',
        "  [respond] true : tag_keyed_hash * busy;",
        "  [relay] true : 2 * tag_hash * busy;",
        "endrewards",
        "",
        'rewards "MD_RC"',
        "  [lookup] true : srv_success * busy' + srv_failure * (busy - busy');",
        "  [respond] true : tag_keyed_hash * busy;",
        "  [relay] true : 2 * tag_hash * busy;",
        "endrewards",
        "",
        'rewards "count"',
        "  true : ra + rb;",
        "endrewards",
        "",
        'rewards "authenticated"',
        "  true : da + db;",
        "endrewards",
        "",
        'rewards "in_service"',
        "  true : ra + rb - da - db;",
        "endrewards",
        "",
        'rewards "delay"',
        "  true : ra + rb - da - db;",
        "endrewards",
        "",
        'rewards "time"',
        "  true : 1;",
        "endrewards",
        "",
        'rewards "rounds"',
        "  [relay] true : 1;",
        "endrewards",
    ]


def _counter_model_text(cfg: RfidModelConfig) -> str:
    lines = _header(cfg) + _shared_formulas()
    lines += [
        "module MD_TA",
        "  ra : [0..nA] init 0;",
        "  da : [0..nA] init 0;",
        "",
        _join_command("a", cfg),
        "endmodule",
        "",
        "module MD_TB",
        "  rb : [0..nB] init 0;",
        "  db : [0..nB] init 0;",
        "",
        _join_command("b", cfg),
        "endmodule",
        "",
        "module MD_S",
        "  busy : [0..cap] init 0;",
        "",
        _CHALLENGE,
        _counter_lookup(cfg),
        "endmodule",
        "",
        "module MD_Medium",
        "  ph : [0..3] init 0;",
        "  inflight : [0..cap] init 0;",
        "",
        _RESPOND,
        _COUNTER_RELAY,
        "endmodule",
        "",
    ]
    lines += _rewards_and_labels()
    return "\n".join(lines) + "\n"


# Per-tag status: 0 idle, 1 requested or in service, 2 authenticated.


def _tag_names(prefix: str, count: int) -> List[str]:
    return [f"{prefix}{i + 1}" for i in range(count)]


def _explicit_join(group: str, tags: List[str]) -> str:
    bound = "nA" if group == "a" else "nB"
    idle = f"{bound} - r{group}"
    updates = []
    for k in range(len(tags) + 1):
        for chosen in combinations(tags, k):
            if k == 0:
                probability = f"pow(1 - p, {idle})"
                assignments = "true"
            else:
                condition = " & ".join(f"{tag} = 0" for tag in chosen)
                probability = (
                    f"({condition} ? ({k} < room ? pow(p, {k}) * pow(1 - p, {idle} - {k}) : "
                    f"({k} = room ? binom_tail({k}, {idle}, p) / comb({idle}, {k}) : 0)) : 0)"
                )
                assignments = " & ".join(f"({tag}'=1)" for tag in chosen)
            updates.append(f"{probability} : {assignments}")
    joined = "\n      + ".join(updates)
    return f"  [join_{group}] ph=0 & r{group} < {bound} & waiting < cap\n      -> {joined};"


def _explicit_lookup(cfg: RfidModelConfig, tags: List[str]) -> str:
    if cfg.fault_prob == 0:
        return "  [lookup] ph=2 -> (ph'=3);"

    updates = []
    for k in range(len(tags) + 1):
        for failed in combinations(tags, k):
            factors = [
                f"({tag} = 1 ? f : 0)" if tag in failed else f"({tag} = 1 ? 1 - f : 1)"
                for tag in tags
            ]
            assignments = [f"({tag}'=0)" for tag in failed]
            assignments.append(_after_failures(str(k)))
            updates.append(f"{' * '.join(factors)} : {' & '.join(assignments)}")
    joined = "\n      + ".join(updates)
    return f"  [lookup] ph=2\n      -> {joined};"


def _explicit_model_text(cfg: RfidModelConfig) -> str:
    tags_a = _tag_names("a", cfg.n_a)
    tags_b = _tag_names("b", cfg.n_b)
    tags = tags_a + tags_b

    def count(names: List[str], test: str) -> str:
        return _sum([f"({name} {test} ? 1 : 0)" for name in names])

    lines = _header(cfg)
    lines += [
        f"formula ra = {count(tags_a, '> 0')};",
        f"formula da = {count(tags_a, '= 2')};",
        f"formula rb = {count(tags_b, '> 0')};",
        f"formula db = {count(tags_b, '= 2')};",
    ]
    lines += _shared_formulas()

    lines += ["module MD_TA"]
    lines += [f"  {tag} : [0..2] init 0;" for tag in tags_a]
    lines += ["", _explicit_join("a", tags_a), "endmodule", ""]
    lines += ["module MD_TB"]
    lines += [f"  {tag} : [0..2] init 0;" for tag in tags_b]
    lines += ["", _explicit_join("b", tags_b), "endmodule", ""]

    relay = ["(ph'=0)", "(busy'=0)", "(inflight'=0)"]
    relay += [f"({tag}'=({tag} = 1 ? 2 : {tag}))" for tag in tags]
    lines += [
        "module MD_S",
        "  busy : [0..cap] init 0;",
        "",
        _CHALLENGE,
        _explicit_lookup(cfg, tags),
        "endmodule",
        "",
        "module MD_Medium",
        "  ph : [0..3] init 0;",
        "  inflight : [0..cap] init 0;",
        "",
        _RESPOND,
        f"  [relay] ph=3 -> {' & '.join(relay)};",
        "endmodule",
        "",
    ]
    lines += _rewards_and_labels()
    return "\n".join(lines) + "\n"


def rfid_model_text(cfg: RfidModelConfig) -> str:
    """Returns the guarded-command model of the deployment in textual
    form.
    """
    if cfg.explicit:
        return _explicit_model_text(cfg)
    return _counter_model_text(cfg)


def rfid_model(cfg: RfidModelConfig) -> Model:
    """Returns the guarded-command model of the deployment."""
    return parse_model(rfid_model_text(cfg))


def _tag_counts(result: BuildResult, cfg: RfidModelConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Returns the number of tags that requested authentication and the
    number of authenticated tags in every state.
    """
    if not cfg.explicit:
        requested = result.column("ra") + result.column("rb")
        authenticated = result.column("da") + result.column("db")
        return requested, authenticated

    tags = _tag_names("a", cfg.n_a) + _tag_names("b", cfg.n_b)
    status = np.stack([result.column(tag) for tag in tags], axis=1)
    return (status > 0).sum(axis=1), (status == 2).sum(axis=1)


def build_rfid_model(
    cfg: RfidModelConfig, *, state_limit: Optional[int] = None
) -> BuildResult:
    """Builds the chain of the deployment.

    Besides the labels of the model (``init``, ``deadlock``, ``allauth``,
    ``saturated``) the chain carries ``count_<k>`` and ``auth_<k>`` for
    k = 0..N, marking the states in which k tags have requested
    authentication or have been authenticated, respectively.

    Raises:
        StateLimitExceededError: if the chain has more than `state_limit`
            states
    """
    log.info(
        f"Building {'per-tag' if cfg.explicit else 'counter'} model for "
        f"N = {cfg.n_tags} (nA = {cfg.n_a}, nB = {cfg.n_b})"
    )
    result = build(rfid_model(cfg), state_limit=state_limit)

    requested, authenticated = _tag_counts(result, cfg)
    labels: Dict[str, np.ndarray] = dict(result.dtmc.labels)
    for k in range(cfg.n_tags + 1):
        labels[f"count_{k}"] = requested == k
        labels[f"auth_{k}"] = authenticated == k

    d = result.dtmc
    dtmc = Dtmc(d.transitions, d.initial, labels, d.rewards, d.state_names)
    return BuildResult(dtmc, result.states, result.variables)


# --- Figure metrics ---------------------------------------------------------


def count_series(result: BuildResult, horizon: int) -> np.ndarray:
    """Expected number of tags under authentication at times
    ``0..horizon``.
    """
    return instantaneous_series(result.dtmc, result.rewards["count"], horizon)


def transmission_series(result: BuildResult, horizon: int) -> np.ndarray:
    """Expected transmission cost accumulated up to times ``0..horizon``."""
    return cumulative_series(result.dtmc, result.rewards["MD_RT"], horizon)


def computation_costs(
    result: BuildResult, options: Optional[SolverOptions] = None
) -> Tuple[float, float]:
    """Expected server-side and tag-side computation cost until every tag
    is authenticated.
    """
    d = result.dtmc
    target = d.mask("allauth")
    server = reward_reachability(d, result.rewards["MD_RC_server"], target, options)
    tag = reward_reachability(d, result.rewards["MD_RC_tag"], target, options)
    return server, tag


@dataclass(frozen=True)
class ServiceMetrics:
    processing_time: float
    """Expected number of steps until every tag is authenticated."""

    mean_delay: float
    """Expected number of steps between the request of a tag and the
    completion of its authentication, averaged over the tags.
    """

    service_rate: float
    """Tags authenticated per completed service round."""


def service_metrics(
    result: BuildResult, cfg: RfidModelConfig, options: Optional[SolverOptions] = None
) -> ServiceMetrics:
    d = result.dtmc
    target = d.mask("allauth")
    time = reward_reachability(d, result.rewards["time"], target, options)
    delay = reward_reachability(d, result.rewards["delay"], target, options)
    rounds = reward_reachability(d, result.rewards["rounds"], target, options)
    return ServiceMetrics(
        processing_time=time,
        mean_delay=delay / cfg.n_tags,
        service_rate=cfg.n_tags / rounds if rounds > 0 else float("nan"),
    )


def saturation_time(
    series: Sequence[float], n_tags: int, eps: Optional[float] = None
) -> Optional[int]:
    """Returns the first time at which the expected number of tags under
    authentication reaches ``n_tags - eps``, or ``None`` if the series never
    gets there. `eps` defaults to one percent of `n_tags`.
    """
    threshold = n_tags - (0.01 * n_tags if eps is None else eps)
    hits = np.flatnonzero(np.asarray(series) >= threshold)
    return int(hits[0]) if hits.size else None


def increment_spread(series: Sequence[float], start: int) -> float:
    """Measures how far the per-step increments of a cumulative series
    deviate from being constant from `start` on.

    Returns:
        the difference between the largest and the smallest increment after
        `start`, relative to the mean increment up to `start`; zero if
        nothing was accumulated before `start`
    """
    values = np.asarray(series, dtype=float)
    if not 0 < start < values.size - 1:
        raise InvalidArgumentError(f"start {start} outside the series")
    increments = np.diff(values[start:])
    reference = values[start] / start
    if reference == 0:
        return 0.0
    return float((increments.max() - increments.min()) / reference)
