"""Hash instantiation of the protocol: the plain hash ``h`` and the keyed hash
``f_k``.
"""

import hashlib

from dataclasses import dataclass
from typing import Optional

from rfidcheck.errors import InvalidArgumentError

from .bits import Direction, check_bits, logical_shift, rot

__all__ = ("ProtocolConfig", "hash_bits", "keyed_hash")

SHIFT_MODES = ("rotate", "logical")


@dataclass(frozen=True)
class ProtocolConfig:
    """Parameters of one instantiation of the protocol."""

    l: int = 128  # noqa: E741
    """Bit-length of tag identifiers, nonces and messages."""

    hash_id: str = "sha256"
    """Name of the ``hashlib`` algorithm that instantiates the hash function."""

    shift: str = "rotate"
    """Semantics of the shift operators of the identifier update; ``rotate``
    for circular rotation, ``logical`` for zero-filling shifts.
    """

    def __post_init__(self) -> None:
        if self.l <= 0 or self.l % 4:
            raise InvalidArgumentError(
                "identifier length must be positive and divisible by 4"
            )
        if self.shift not in SHIFT_MODES:
            raise InvalidArgumentError(f"unknown shift semantics: {self.shift!r}")
        if self.hash_id.startswith("shake") or self.hash_id not in set(
            hashlib.algorithms_available
        ):
            raise InvalidArgumentError(f"unsupported hash function: {self.hash_id!r}")

    @property
    def mask(self) -> int:
        """Bit mask with the lowest `l` bits set."""
        return (1 << self.l) - 1

    def shifted(self, x: int, k: int, direction: Direction) -> int:
        """Applies the configured shift operator to an l-bit string."""
        if self.shift == "rotate":
            return rot(x, k, direction, width=self.l)
        else:
            return logical_shift(x, k, direction, width=self.l)


def _digest(cfg: ProtocolConfig, data: bytes) -> bytes:
    return hashlib.new(cfg.hash_id, data).digest()


def hash_bits(cfg: ProtocolConfig, x: int, width: Optional[int] = None) -> int:
    """Hashes a bit-string of the given width (defaults to `l`) to exactly
    `l` bits.

    The bit-string is encoded big-endian into ``ceil(width / 8)`` bytes. The
    result is the first `l` bits of the digest; digests shorter than `l` bits
    are extended by hashing the input followed by a big-endian block counter.
    """
    width = cfg.l if width is None else width
    if width < 0:
        raise InvalidArgumentError("width must be non-negative")
    check_bits(x, width, "x")

    data = x.to_bytes((width + 7) // 8, "big")
    digest = _digest(cfg, data)
    if len(digest) * 8 < cfg.l:
        blocks = [digest]
        counter = 1
        while sum(len(block) for block in blocks) * 8 < cfg.l:
            blocks.append(_digest(cfg, data + counter.to_bytes(4, "big")))
            counter += 1
        digest = b"".join(blocks)

    value = int.from_bytes(digest, "big")
    return value >> (len(digest) * 8 - cfg.l)


def keyed_hash(cfg: ProtocolConfig, key: int, msg: int) -> int:
    """Keyed hash ``f_key(msg) = h(key || msg)`` over two l-bit strings.

    Raises:
        InvalidArgumentError: if the key or the message is not l bits
    """
    check_bits(key, cfg.l, "key")
    check_bits(msg, cfg.l, "msg")
    return hash_bits(cfg, (key << cfg.l) | msg, width=2 * cfg.l)
