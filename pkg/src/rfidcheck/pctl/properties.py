"""Property files: one formula per line, ``#`` starts a comment."""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

from rfidcheck.errors import InvalidArgumentError, PctlSyntaxError

from .ast import Formula
from .parser import parse

__all__ = ("Property", "load_properties", "parse_properties", "select_property")


@dataclass(frozen=True)
class Property:
    """A formula read from a property file."""

    line: int
    """1-based line number of the property in its file."""

    text: str
    formula: Formula


def _strip_comment(line: str) -> str:
    quoted = False
    for index, char in enumerate(line):
        if char == '"':
            quoted = not quoted
        elif char == "#" and not quoted:
            return line[:index]
    return line


def parse_properties(text: str, source: str = "<string>") -> List[Property]:
    """Parses the contents of a property file.

    Raises:
        PctlSyntaxError: if a line is not a well-formed formula; the error
            names the source and the line
    """
    result: List[Property] = []
    for line_no, raw_line in enumerate(text.splitlines(), 1):
        body = _strip_comment(raw_line).strip()
        if not body:
            continue
        try:
            formula = parse(body)
        except PctlSyntaxError as ex:
            raise PctlSyntaxError(
                ex.reason,
                position=ex.position,
                expected=ex.expected,
                location=f"{source}, line {line_no}",
            ) from None
        result.append(Property(line_no, body, formula))
    return result


def load_properties(path: Union[str, Path]) -> List[Property]:
    """Reads the properties of a property file."""
    path = Path(path)
    return parse_properties(path.read_text(encoding="utf-8"), str(path))


def select_property(properties: List[Property], line: int) -> Property:
    """Returns the property on the given 1-based line of its file.

    Raises:
        InvalidArgumentError: if there is no property on that line
    """
    for prop in properties:
        if prop.line == line:
            return prop
    raise InvalidArgumentError(f"no property on line {line}")
