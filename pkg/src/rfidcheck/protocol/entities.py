"""The protocol entities: tag, reader and back-end server, and the
operations they perform in steps 1-6 of a session.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from logging import getLogger
from numpy.random import Generator
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from rfidcheck.errors import InvalidStateError

from .bits import Direction, check_bits, random_bits
from .crypto import ProtocolConfig, hash_bits, keyed_hash
from .messages import Challenge, TagResponse

__all__ = (
    "Accept",
    "AuthFailure",
    "AuthSuccess",
    "Match",
    "Reject",
    "ServerDatabase",
    "ServerRecord",
    "TagState",
    "reader_challenge",
    "server_authenticate",
    "tag_finalize",
    "tag_respond",
    "update_identifiers",
)

log = getLogger(__name__)


@dataclass(frozen=True)
class TagState:
    """State of a single tag: its identifier and the nonces of the session
    that is currently in progress.
    """

    t: int
    pending_r1: Optional[int] = None
    pending_r2: Optional[int] = None

    def __post_init__(self) -> None:
        if (self.pending_r1 is None) != (self.pending_r2 is None):
            raise InvalidStateError("pending nonces must be set together")

    @property
    def in_session(self) -> bool:
        return self.pending_r1 is not None

    def abort(self) -> "TagState":
        """Returns the state of the tag after a session that was lost before
        step 6; the identifier stays the same.
        """
        return TagState(self.t)


@dataclass
class ServerRecord:
    """Server-side record of a tag: the most recent and the previous
    ``(u, t)`` pairs and the data associated with the tag.
    """

    u_new: int
    t_new: int
    u_old: int
    t_old: int
    d: bytes = b""

    def check(self, cfg: ProtocolConfig) -> None:
        """Checks that both stored identifiers are the hashes of their
        secrets.

        Raises:
            InvalidStateError: if the check fails
        """
        if hash_bits(cfg, self.u_new) != self.t_new:
            raise InvalidStateError("record violates t_new = h(u_new)")
        if hash_bits(cfg, self.u_old) != self.t_old:
            raise InvalidStateError("record violates t_old = h(u_old)")

    def pairs(self) -> Iterator[Tuple["Match", int, int]]:
        """Yields the pairs of the record in lookup order."""
        yield Match.NEW, self.u_new, self.t_new
        yield Match.OLD, self.u_old, self.t_old


class ServerDatabase:
    """Ordered collection of server records; records are probed in
    insertion order.
    """

    _cfg: ProtocolConfig
    _records: List[ServerRecord]

    def __init__(self, cfg: ProtocolConfig):
        self._cfg = cfg
        self._records = []

    def __getitem__(self, index: int) -> ServerRecord:
        return self._records[index]

    def __iter__(self) -> Iterator[ServerRecord]:
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def register(self, u: int, d: bytes = b"") -> TagState:
        """Registers a new tag with secret `u` and associated data `d`.

        Returns:
            the initial state of the tag, holding ``t = h(u)``
        """
        check_bits(u, self._cfg.l, "u")
        t = hash_bits(self._cfg, u)
        self._records.append(ServerRecord(u, t, u, t, bytes(d)))
        return TagState(t)

    def register_random(self, rng: Generator, d: bytes = b"") -> TagState:
        """Registers a new tag with a secret drawn from the given generator."""
        return self.register(random_bits(rng, self._cfg.l), d)


class Match(Enum):
    """Which pair of a server record matched the tag's response."""

    NEW = "new"
    OLD = "old"


@dataclass(frozen=True)
class AuthSuccess:
    """The server authenticated the tag."""

    m3: int
    d: bytes
    matched: Match
    probes: int
    record_index: int


@dataclass(frozen=True)
class AuthFailure:
    """No record matched the tag's response."""

    probes: int


@dataclass(frozen=True)
class Accept:
    """The tag authenticated the server and refreshed its identifier."""

    tag: TagState


@dataclass(frozen=True)
class Reject:
    """The tag could not authenticate the server; its identifier is
    unchanged.
    """

    tag: TagState


def reader_challenge(cfg: ProtocolConfig, rng: Generator) -> Challenge:
    """Step 1: the reader draws a fresh l-bit nonce."""
    return Challenge(random_bits(rng, cfg.l))


def tag_respond(
    cfg: ProtocolConfig,
    tag: TagState,
    r1: int,
    rng: Generator,
    *,
    r2: Optional[int] = None,
) -> Tuple[TagResponse, TagState]:
    """Step 2: the tag draws its own nonce ``r2`` and answers with
    ``M1 = t xor r2`` and ``M2 = f_t(r1 xor r2)``.

    Parameters:
        r2: forces the tag nonce instead of drawing it from the generator

    Returns:
        the response and the new state of the tag, remembering both nonces
    """
    check_bits(r1, cfg.l, "r1")
    if r2 is None:
        r2 = random_bits(rng, cfg.l)
    else:
        check_bits(r2, cfg.l, "r2")

    m1 = tag.t ^ r2
    m2 = keyed_hash(cfg, tag.t, r1 ^ r2)
    return TagResponse(m1, m2), replace(tag, pending_r1=r1, pending_r2=r2)


def update_identifiers(
    cfg: ProtocolConfig, u: int, t: int, r1: int, r2: int
) -> Tuple[int, int]:
    """Computes the refreshed pair
    ``u' = (u << l/4) xor (t >> l/4) xor r1 xor r2`` and ``t' = h(u')``.
    """
    for name, value in (("u", u), ("t", t), ("r1", r1), ("r2", r2)):
        check_bits(value, cfg.l, name)

    quarter = cfg.l // 4
    u_next = (
        cfg.shifted(u, quarter, Direction.LEFT)
        ^ cfg.shifted(t, quarter, Direction.RIGHT)
        ^ r1
        ^ r2
    )
    return u_next, hash_bits(cfg, u_next)


def _blind(cfg: ProtocolConfig, r2: int) -> int:
    return cfg.shifted(r2, cfg.l // 2, Direction.RIGHT)


def server_authenticate(
    cfg: ProtocolConfig,
    db: Union[ServerDatabase, Sequence[ServerRecord]],
    r1: int,
    m1: int,
    m2: int,
) -> Union[AuthSuccess, AuthFailure]:
    """Step 4: the server looks for a record whose new or old identifier
    explains the tag's response, answers with ``M3 = u xor (r2 >> l/2)`` and
    refreshes the record.

    Records are probed in insertion order, the new pair before the old one;
    the first match wins. The database is left unchanged on failure.
    """
    check_bits(r1, cfg.l, "r1")
    check_bits(m1, cfg.l, "m1")
    check_bits(m2, cfg.l, "m2")

    probes = 0
    for index, record in enumerate(db):
        for matched, u, t in record.pairs():
            r2 = m1 ^ t
            probes += 1
            if keyed_hash(cfg, t, r1 ^ r2) != m2:
                continue

            m3 = u ^ _blind(cfg, r2)
            u_next, t_next = update_identifiers(cfg, u, t, r1, r2)
            record.u_old, record.t_old = u, t
            record.u_new, record.t_new = u_next, t_next
            record.check(cfg)
            return AuthSuccess(m3, record.d, matched, probes, index)

    log.debug(f"No record matched after {probes} probes")
    return AuthFailure(probes)


def tag_finalize(
    cfg: ProtocolConfig, tag: TagState, m3: int
) -> Union[Accept, Reject]:
    """Step 6: the tag recovers ``u`` from ``M3``, checks ``h(u) = t`` and, if
    the check passes, refreshes its identifier.

    Raises:
        InvalidStateError: if the tag has no session in progress
    """
    if tag.pending_r1 is None or tag.pending_r2 is None:
        raise InvalidStateError("tag has no session in progress")
    check_bits(m3, cfg.l, "m3")

    r1, r2 = tag.pending_r1, tag.pending_r2
    u = m3 ^ _blind(cfg, r2)
    if hash_bits(cfg, u) != tag.t:
        return Reject(TagState(tag.t))

    _, t_next = update_identifiers(cfg, u, tag.t, r1, r2)
    return Accept(TagState(t_next))
