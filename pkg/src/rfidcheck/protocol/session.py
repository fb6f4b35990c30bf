"""Execution of a complete six-step session between a tag, a reader and the
server, with an optional fault on the radio link between reader and tag.
"""

from dataclasses import dataclass, field
from enum import Enum
from logging import getLogger
from numpy.random import Generator
from typing import List, Optional, Union

from rfidcheck.errors import InvalidArgumentError

from .bits import check_bits, random_nonzero_bits
from .crypto import ProtocolConfig
from .entities import (
    Accept,
    AuthFailure,
    AuthSuccess,
    ServerDatabase,
    TagState,
    reader_challenge,
    server_authenticate,
    tag_finalize,
    tag_respond,
)
from .messages import (
    Challenge,
    ReaderForward,
    ReaderRelay,
    ServerError,
    ServerReply,
    TagResponse,
    TagVerdict,
    TranscriptEntry,
    format_transcript,
)

__all__ = ("Fault", "FaultKind", "SessionTranscript", "run_session")

log = getLogger(__name__)

RADIO_STEPS = (1, 2, 5)
"""Steps whose messages travel on the radio link between reader and tag."""


class FaultKind(Enum):
    NONE = "none"
    DROP = "drop"
    CORRUPT = "corrupt"


@dataclass(frozen=True)
class Fault:
    """Fault injected into one radio message of a session."""

    kind: FaultKind = FaultKind.NONE
    step: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is FaultKind.NONE:
            if self.step is not None:
                raise InvalidArgumentError("fault-free sessions have no fault step")
        elif self.step not in RADIO_STEPS:
            raise InvalidArgumentError(
                f"faults apply to radio steps {RADIO_STEPS} only, got {self.step}"
            )

    @classmethod
    def none(cls) -> "Fault":
        return cls()

    @classmethod
    def drop(cls, step: int) -> "Fault":
        return cls(FaultKind.DROP, step)

    @classmethod
    def corrupt(cls, step: int) -> "Fault":
        return cls(FaultKind.CORRUPT, step)

    @classmethod
    def parse(cls, spec: str) -> "Fault":
        """Parses a fault specification: ``none``, ``drop_m3``,
        ``drop:<step>`` or ``corrupt:<step>``.
        """
        spec = spec.strip().lower()
        if spec in ("", "none"):
            return cls.none()
        if spec == "drop_m3":
            return cls.drop(5)

        kind, sep, step = spec.partition(":")
        if sep and kind in ("drop", "corrupt"):
            try:
                step_no = int(step)
            except ValueError:
                raise InvalidArgumentError(f"invalid fault step: {step!r}") from None
            return cls(FaultKind(kind), step_no)

        raise InvalidArgumentError(f"invalid fault specification: {spec!r}")

    def hits(self, step: int) -> bool:
        return self.kind is not FaultKind.NONE and self.step == step

    def __str__(self) -> str:
        if self.kind is FaultKind.NONE:
            return "none"
        if self.kind is FaultKind.DROP and self.step == 5:
            return "drop_m3"
        return f"{self.kind.value}:{self.step}"


@dataclass
class SessionTranscript:
    """Everything that happened during one session."""

    entries: List[TranscriptEntry] = field(default_factory=list)
    """Messages in the order they were sent."""

    server_result: Optional[Union[AuthSuccess, AuthFailure]] = None
    """Outcome of the server lookup; ``None`` if the server was never
    reached.
    """

    tag_accepted: bool = False
    """Whether the tag authenticated the server and refreshed its
    identifier.
    """

    tag: Optional[TagState] = None
    """State of the tag at the end of the session."""

    @property
    def probes(self) -> int:
        """Number of keyed-hash evaluations the server performed."""
        return self.server_result.probes if self.server_result else 0

    @property
    def server_accepted(self) -> bool:
        return isinstance(self.server_result, AuthSuccess)

    @property
    def mutual(self) -> bool:
        """Whether both sides authenticated each other."""
        return self.server_accepted and self.tag_accepted

    def format(self, width: int) -> str:
        return format_transcript(self.entries, width)


def _corrupt(cfg: ProtocolConfig, value: int, rng: Generator) -> int:
    return value ^ random_nonzero_bits(rng, cfg.l)


def run_session(
    cfg: ProtocolConfig,
    tag: TagState,
    db: ServerDatabase,
    rng: Generator,
    fault: Fault = Fault(),
) -> SessionTranscript:
    """Runs steps 1-6 of the protocol for the given tag.

    The reader is pass-through logic. Faults apply to the reader-tag link
    only; a dropped message ends the session, a corrupted message is
    delivered with random bits flipped. A tag that does not reach step 6 is
    left with its identifier unchanged and no session pending.

    Returns:
        the transcript of the session; faults show up as failed outcomes,
        never as exceptions
    """
    check_bits(tag.t, cfg.l, "t")
    transcript = SessionTranscript(tag=tag.abort())

    # Step 1: challenge. The reader keeps the nonce it sent; the tag answers
    # the one it received.
    challenge = reader_challenge(cfg, rng)
    r1_reader = challenge.r1
    if fault.hits(1):
        if fault.kind is FaultKind.DROP:
            transcript.entries.append(TranscriptEntry(1, challenge, delivered=False))
            return transcript
        challenge = Challenge(_corrupt(cfg, challenge.r1, rng))
        transcript.entries.append(TranscriptEntry(1, challenge, delivered=False))
    else:
        transcript.entries.append(TranscriptEntry(1, challenge))

    response, pending = tag_respond(cfg, tag, challenge.r1, rng)

    # Step 2: response
    delivered = True
    if fault.hits(2):
        if fault.kind is FaultKind.DROP:
            transcript.entries.append(TranscriptEntry(2, response, delivered=False))
            transcript.tag = pending.abort()
            return transcript
        response = TagResponse(
            _corrupt(cfg, response.m1, rng), _corrupt(cfg, response.m2, rng)
        )
        delivered = False
    transcript.entries.append(TranscriptEntry(2, response, delivered=delivered))

    # Steps 3-4: forward to the server over the secure channel
    transcript.entries.append(
        TranscriptEntry(3, ReaderForward(r1_reader, response.m1, response.m2))
    )
    result = server_authenticate(cfg, db, r1_reader, response.m1, response.m2)
    transcript.server_result = result
    if isinstance(result, AuthFailure):
        transcript.entries.append(TranscriptEntry(4, ServerError()))
        transcript.tag = pending.abort()
        log.debug(f"Server rejected the tag after {result.probes} probes")
        return transcript
    transcript.entries.append(TranscriptEntry(4, ServerReply(result.m3, result.d)))

    # Step 5: relay
    relay = ReaderRelay(result.m3)
    if fault.hits(5):
        if fault.kind is FaultKind.DROP:
            transcript.entries.append(TranscriptEntry(5, relay, delivered=False))
            transcript.tag = pending.abort()
            return transcript
        relay = ReaderRelay(_corrupt(cfg, relay.m3, rng))
        transcript.entries.append(TranscriptEntry(5, relay, delivered=False))
    else:
        transcript.entries.append(TranscriptEntry(5, relay))

    # Step 6: verification on the tag
    outcome = tag_finalize(cfg, pending, relay.m3)
    transcript.tag = outcome.tag
    transcript.tag_accepted = isinstance(outcome, Accept)
    transcript.entries.append(
        TranscriptEntry(6, TagVerdict(transcript.tag_accepted, outcome.tag.t))
    )
    return transcript
