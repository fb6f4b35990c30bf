"""Plain-text import and export of chains and their reward structures.

The format is line-oriented::

    dtmc <n_states> <initial>
    <from> <to> <prob>
    ...
    label <name> <state> <state> ...
    rewards <name>
    srew <state> <value>
    trew <from> <to> <value>

``srew`` and ``trew`` lines belong to the reward structure selected by the
last ``rewards`` line (``default`` if there was none). Blank lines and lines
starting with ``#`` are ignored.
"""

import numpy as np

from pathlib import Path
from typing import IO, Dict, List, Tuple, Union

from rfidcheck.errors import ModelSyntaxError

from .model import Dtmc, RewardStructure

__all__ = ("dump_dtmc", "dumps_dtmc", "load_dtmc", "loads_dtmc")

DEFAULT_REWARD_NAME = "default"


def _number(value: float) -> str:
    # repr() round-trips floats exactly
    return repr(float(value))


def dumps_dtmc(d: Dtmc) -> str:
    """Formats a chain, its labels and its reward structures."""
    P = d.transitions
    lines: List[str] = [f"dtmc {d.n_states} {d.initial}"]

    for row in range(d.n_states):
        start, end = P.indptr[row], P.indptr[row + 1]
        for col, prob in zip(P.indices[start:end], P.data[start:end]):
            lines.append(f"{row} {col} {_number(prob)}")

    for name, mask in d.labels.items():
        states = " ".join(str(int(s)) for s in np.flatnonzero(mask))
        lines.append(f"label {name} {states}".rstrip())

    for name, structure in d.rewards.items():
        lines.append(f"rewards {name}")
        for state in np.flatnonzero(structure.state_rewards):
            lines.append(f"srew {state} {_number(structure.state_rewards[state])}")
        iota = structure.transition_rewards
        for row in range(d.n_states):
            start, end = iota.indptr[row], iota.indptr[row + 1]
            for col, value in zip(iota.indices[start:end], iota.data[start:end]):
                if value != 0:
                    lines.append(f"trew {row} {col} {_number(value)}")

    return "\n".join(lines) + "\n"


def dump_dtmc(d: Dtmc, fp: Union[str, Path, IO[str]]) -> None:
    """Writes a chain to a file or a file-like object."""
    text = dumps_dtmc(d)
    if isinstance(fp, (str, Path)):
        Path(fp).write_text(text, encoding="utf-8")
    else:
        fp.write(text)


def _parse_int(token: str, line_no: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ModelSyntaxError(f"invalid {what}: {token!r}", line=line_no) from None


def _parse_float(token: str, line_no: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ModelSyntaxError(f"invalid {what}: {token!r}", line=line_no) from None


def _check_state(state: int, n: int, line_no: int) -> int:
    if not 0 <= state < n:
        raise ModelSyntaxError(f"state {state} out of range", line=line_no)
    return state


def loads_dtmc(text: str) -> Dtmc:
    """Parses a chain from its textual form.

    Raises:
        ModelSyntaxError: if the text is malformed; the message names the
            offending line
    """
    n = -1
    initial = 0
    transitions: List[Tuple[int, int, float]] = []
    labels: Dict[str, List[int]] = {}
    state_rewards: Dict[str, Dict[int, float]] = {}
    transition_rewards: Dict[str, List[Tuple[int, int, float]]] = {}
    current_rewards = DEFAULT_REWARD_NAME

    for line_no, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue

        tokens = line.split()
        keyword = tokens[0]

        if n < 0:
            if keyword != "dtmc" or len(tokens) != 3:
                raise ModelSyntaxError(
                    "expected header 'dtmc <n_states> <initial>'", line=line_no
                )
            n = _parse_int(tokens[1], line_no, "state count")
            if n <= 0:
                raise ModelSyntaxError("state count must be positive", line=line_no)
            initial = _check_state(
                _parse_int(tokens[2], line_no, "initial state"), n, line_no
            )
            continue

        if keyword == "dtmc":
            raise ModelSyntaxError("duplicate header", line=line_no)

        elif keyword == "label":
            if len(tokens) < 2:
                raise ModelSyntaxError("label without a name", line=line_no)
            labels.setdefault(tokens[1], []).extend(
                _check_state(_parse_int(token, line_no, "state"), n, line_no)
                for token in tokens[2:]
            )

        elif keyword == "rewards":
            if len(tokens) != 2:
                raise ModelSyntaxError("expected 'rewards <name>'", line=line_no)
            current_rewards = tokens[1]
            state_rewards.setdefault(current_rewards, {})
            transition_rewards.setdefault(current_rewards, [])

        elif keyword == "srew":
            if len(tokens) != 3:
                raise ModelSyntaxError("expected 'srew <state> <value>'", line=line_no)
            state = _check_state(_parse_int(tokens[1], line_no, "state"), n, line_no)
            value = _parse_float(tokens[2], line_no, "reward")
            state_rewards.setdefault(current_rewards, {})[state] = value
            transition_rewards.setdefault(current_rewards, [])

        elif keyword == "trew":
            if len(tokens) != 4:
                raise ModelSyntaxError(
                    "expected 'trew <from> <to> <value>'", line=line_no
                )
            source = _check_state(_parse_int(tokens[1], line_no, "state"), n, line_no)
            target = _check_state(_parse_int(tokens[2], line_no, "state"), n, line_no)
            value = _parse_float(tokens[3], line_no, "reward")
            transition_rewards.setdefault(current_rewards, []).append(
                (source, target, value)
            )
            state_rewards.setdefault(current_rewards, {})

        else:
            if len(tokens) != 3:
                raise ModelSyntaxError(
                    f"unknown directive {keyword!r}", line=line_no
                )
            source = _check_state(_parse_int(tokens[0], line_no, "state"), n, line_no)
            target = _check_state(_parse_int(tokens[1], line_no, "state"), n, line_no)
            prob = _parse_float(tokens[2], line_no, "probability")
            transitions.append((source, target, prob))

    if n < 0:
        raise ModelSyntaxError("missing header 'dtmc <n_states> <initial>'")

    rewards = {
        name: RewardStructure.create(
            n, state_rewards.get(name, {}), transition_rewards.get(name, [])
        )
        for name in state_rewards
    }
    return Dtmc.create(n, initial, transitions, labels, rewards)


def load_dtmc(fp: Union[str, Path, IO[str]]) -> Dtmc:
    """Reads a chain from a file or a file-like object."""
    if isinstance(fp, (str, Path)):
        text = Path(fp).read_text(encoding="utf-8")
    else:
        text = fp.read()
    return loads_dtmc(text)
