"""Executable model of the hash-based RFID mutual authentication protocol
with old/new identifier pairs on the server.
"""

from .bits import (
    Direction,
    format_bits,
    logical_shift,
    random_bits,
    random_nonzero_bits,
    rot,
)
from .crypto import ProtocolConfig, hash_bits, keyed_hash
from .entities import (
    Accept,
    AuthFailure,
    AuthSuccess,
    Match,
    Reject,
    ServerDatabase,
    ServerRecord,
    TagState,
    reader_challenge,
    server_authenticate,
    tag_finalize,
    tag_respond,
    update_identifiers,
)
from .messages import TranscriptEntry, format_transcript
from .session import Fault, FaultKind, SessionTranscript, run_session

__all__ = (
    "Accept",
    "AuthFailure",
    "AuthSuccess",
    "Direction",
    "Fault",
    "FaultKind",
    "Match",
    "ProtocolConfig",
    "Reject",
    "ServerDatabase",
    "ServerRecord",
    "SessionTranscript",
    "TagState",
    "TranscriptEntry",
    "format_bits",
    "format_transcript",
    "hash_bits",
    "keyed_hash",
    "logical_shift",
    "random_bits",
    "random_nonzero_bits",
    "reader_challenge",
    "rot",
    "run_session",
    "server_authenticate",
    "tag_finalize",
    "tag_respond",
    "update_identifiers",
)
