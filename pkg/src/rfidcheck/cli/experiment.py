"""Description of an experiment: which model to analyze, which properties
to check, and which range of tag counts to sweep.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Tuple, Union

from rfidcheck.errors import InvalidArgumentError

try:
    from tomllib import load as load_toml
except ImportError:
    from tomli import load as load_toml

__all__ = ("ExperimentSpec", "parse_sweep")

MIN_TAGS, MAX_TAGS = 2, 100

Sweep = Tuple[int, int, int]


def parse_sweep(value: Union[str, Sweep, list]) -> Sweep:
    """Parses a sweep range given as ``start:stop:step`` or as a sequence of
    three integers. Both ends are inclusive.

    Raises:
        InvalidArgumentError: if the range is malformed or leaves 2..100
    """
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) == 2:
            parts.append("1")
    else:
        parts = list(value)

    try:
        start, stop, step = (int(part) for part in parts)
    except (TypeError, ValueError):
        raise InvalidArgumentError(
            f"invalid sweep range {value!r}, expected start:stop:step"
        ) from None

    if not MIN_TAGS <= start <= stop <= MAX_TAGS:
        raise InvalidArgumentError(
            f"sweep range must satisfy {MIN_TAGS} <= start <= stop <= {MAX_TAGS}"
        )
    if step < 1:
        raise InvalidArgumentError("sweep step must be positive")
    return start, stop, step


@dataclass(frozen=True)
class ExperimentSpec:
    model: Optional[Path] = None
    """RFID model configuration; the built-in defaults if omitted."""

    properties: Optional[Path] = None
    sweep: Sweep = (10, 100, 10)
    horizon: int = 2500
    out: Path = Path("results")
    seed: Optional[int] = None
    """Seed of the simulations; the configured default if omitted."""

    def __post_init__(self) -> None:
        parse_sweep(self.sweep)
        if self.horizon < 1:
            raise InvalidArgumentError("horizon must be at least 1")

    @property
    def tag_counts(self) -> range:
        start, stop, step = self.sweep
        return range(start, stop + 1, step)

    @classmethod
    def from_mapping(
        cls, values: Mapping[str, Any], base: Optional[Path] = None
    ) -> "ExperimentSpec":
        """Creates an experiment from a mapping; relative paths are resolved
        against `base`.
        """
        known = {"model", "properties", "sweep", "horizon", "out", "seed"}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InvalidArgumentError(
                f"unknown experiment settings: {', '.join(unknown)}"
            )

        def path(key: str) -> Optional[Path]:
            value = values.get(key)
            if value is None:
                return None
            result = Path(value)
            return base / result if base and not result.is_absolute() else result

        try:
            return cls(
                model=path("model"),
                properties=path("properties"),
                sweep=parse_sweep(values.get("sweep", cls.sweep)),
                horizon=int(values.get("horizon", cls.horizon)),
                out=path("out") or cls.out,
                seed=int(values["seed"]) if "seed" in values else None,
            )
        except (TypeError, ValueError) as ex:
            if isinstance(ex, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"invalid experiment setting: {ex}") from None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentSpec":
        """Reads an experiment from a TOML file."""
        path = Path(path)
        try:
            with path.open("rb") as fp:
                values = load_toml(fp)
        except ValueError as ex:
            raise InvalidArgumentError(f"{path}: {ex}") from None
        return cls.from_mapping(values, base=path.parent)

    def override(self, **values: Any) -> "ExperimentSpec":
        """Returns a copy in which the given settings replace the current
        ones; ``None`` values are ignored.
        """
        changes = {key: value for key, value in values.items() if value is not None}
        return replace(self, **changes)
