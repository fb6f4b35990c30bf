"""Helpers for l-bit strings represented as non-negative Python integers."""

from enum import Enum
from numpy.random import Generator

from rfidcheck.errors import InvalidArgumentError

__all__ = (
    "Direction",
    "check_bits",
    "format_bits",
    "logical_shift",
    "random_bits",
    "random_nonzero_bits",
    "rot",
)


class Direction(Enum):
    """Direction of a rotation or shift."""

    LEFT = "left"
    RIGHT = "right"


def check_bits(value: int, width: int, name: str = "value") -> int:
    """Checks that the given integer fits into `width` bits and returns it.

    Raises:
        InvalidArgumentError: if the value is negative or too wide
    """
    if value < 0 or value >> width:
        raise InvalidArgumentError(f"{name} must be a {width}-bit string")
    return value


def format_bits(value: int, width: int) -> str:
    """Formats an l-bit string as lowercase hexadecimal, zero-padded to
    ``ceil(width / 4)`` digits.
    """
    return format(value, "0{}x".format((width + 3) // 4))


def rot(x: int, k: int, direction: Direction, *, width: int) -> int:
    """Circular rotation of a `width`-bit string by `k` positions.

    Raises:
        InvalidArgumentError: if `k` is negative or larger than the width
    """
    if k < 0 or k > width:
        raise InvalidArgumentError(f"rotation amount must be in 0..{width}")
    check_bits(x, width, "x")

    k %= width
    if k == 0:
        return x

    mask = (1 << width) - 1
    if direction is Direction.LEFT:
        return ((x << k) | (x >> (width - k))) & mask
    else:
        return ((x >> k) | (x << (width - k))) & mask


def logical_shift(x: int, k: int, direction: Direction, *, width: int) -> int:
    """Non-circular shift of a `width`-bit string by `k` positions; vacated
    bits are filled with zeros.
    """
    if k < 0 or k > width:
        raise InvalidArgumentError(f"shift amount must be in 0..{width}")
    check_bits(x, width, "x")

    mask = (1 << width) - 1
    if direction is Direction.LEFT:
        return (x << k) & mask
    else:
        return x >> k


def random_bits(rng: Generator, width: int) -> int:
    """Draws `width` uniformly random bits from the given generator."""
    nbytes = (width + 7) // 8
    value = int.from_bytes(rng.bytes(nbytes), "big")
    return value >> (nbytes * 8 - width)


def random_nonzero_bits(rng: Generator, width: int) -> int:
    """Draws a uniformly random non-zero `width`-bit string."""
    while True:
        value = random_bits(rng, width)
        if value:
            return value
