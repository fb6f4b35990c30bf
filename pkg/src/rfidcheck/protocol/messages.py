"""Messages exchanged during one protocol session and the transcript that
records them.
"""

from dataclasses import dataclass, fields
from typing import ClassVar, List, Tuple, Union

from .bits import format_bits

__all__ = (
    "Challenge",
    "Message",
    "ReaderForward",
    "ReaderRelay",
    "ServerError",
    "ServerReply",
    "TagResponse",
    "TagVerdict",
    "TranscriptEntry",
    "format_transcript",
)


class _MessageMixin:
    BIT_FIELDS: ClassVar[Tuple[str, ...]] = ()

    @property
    def type_name(self) -> str:
        return self.__class__.__name__

    def payload(self, width: int) -> str:
        """Returns the payload of the message as lowercase hexadecimal; l-bit
        fields come first in declaration order, followed by byte fields.
        """
        parts: List[str] = []
        for field in fields(self):  # type: ignore
            value = getattr(self, field.name)
            if isinstance(value, bytes):
                parts.append(value.hex())
            elif isinstance(value, bool):
                continue
            elif isinstance(value, int):
                parts.append(format_bits(value, width))
        return "".join(parts)


@dataclass(frozen=True)
class Challenge(_MessageMixin):
    """Step 1: the reader's random challenge to the tag."""

    r1: int


@dataclass(frozen=True)
class TagResponse(_MessageMixin):
    """Step 2: the tag's blinded identifier and authenticator."""

    m1: int
    m2: int


@dataclass(frozen=True)
class ReaderForward(_MessageMixin):
    """Step 3: the reader forwards the challenge and the tag's response to
    the server.
    """

    r1: int
    m1: int
    m2: int


@dataclass(frozen=True)
class ServerReply(_MessageMixin):
    """Step 4 (success): the server's proof of knowledge of ``u`` and the data
    associated with the tag.
    """

    m3: int
    d: bytes


@dataclass(frozen=True)
class ServerError(_MessageMixin):
    """Step 4 (failure): no record matched; the session is aborted."""


@dataclass(frozen=True)
class ReaderRelay(_MessageMixin):
    """Step 5: the reader relays ``M3`` to the tag."""

    m3: int


@dataclass(frozen=True)
class TagVerdict(_MessageMixin):
    """Step 6: outcome of the tag's verification of the server. Not a radio
    message; recorded so that transcripts show how the session ended. The
    payload is the tag identifier after the step.
    """

    accepted: bool
    t: int

    @property
    def type_name(self) -> str:
        return "TagAccept" if self.accepted else "TagReject"


Message = Union[
    Challenge,
    TagResponse,
    ReaderForward,
    ServerReply,
    ServerError,
    ReaderRelay,
    TagVerdict,
]


@dataclass(frozen=True)
class TranscriptEntry:
    """A single line of a session transcript."""

    step: int
    message: Message
    delivered: bool = True
    """Whether the message reached its recipient unmodified."""

    def format(self, width: int) -> str:
        line = (
            f"step={self.step} type={self.message.type_name} "
            f"payload={self.message.payload(width)}"
        )
        return line


def format_transcript(entries: List[TranscriptEntry], width: int) -> str:
    """Formats a transcript in the line-oriented text format, one message
    per line, with a trailing newline.
    """
    return "".join(entry.format(width) + "\n" for entry in entries)
