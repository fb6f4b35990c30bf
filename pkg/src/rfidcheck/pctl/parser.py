"""Recursive-descent parser for the surface syntax of PCTL formulas.

Grammar (``!`` binds tighter than ``&``, ``&`` is left-associative and
``U`` does not associate)::

    state   := unary ("&" unary)*
    unary   := "!" unary | primary
    primary := "true" | label | '"' label '"' | "(" state ")"
             | "P" bound "[" path "]"
             | "R" ("{" '"' name '"' "}")? bound "[" reward "]"
    bound   := "=?" | ("<" | "<=" | ">" | ">=") number
    path    := "X" state | "F" ("<=" int)? state | state "U" ("<=" int)? state
    reward  := "I" "=" int | "C" "<=" int | "F" state | "S"
"""

import re

from dataclasses import dataclass
from typing import List, NoReturn, Optional, Sequence

from rfidcheck.errors import InvalidArgumentError, PctlSyntaxError

from .ast import (
    And,
    Atom,
    Bound,
    BoundedUntil,
    Cumulative,
    Formula,
    Instantaneous,
    Next,
    Not,
    PathFormula,
    ProbQuery,
    Reachability,
    RewardForm,
    RewardQuery,
    SteadyState,
    TrueFormula,
    Until,
)

__all__ = ("RESERVED_WORDS", "parse")

RESERVED_WORDS = frozenset({"P", "R", "X", "U", "F", "I", "C", "S", "true"})
"""Identifiers that cannot be used as unquoted labels."""

_TOKEN_PATTERN = re.compile(
    r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|=\?|[<>=&!()\[\]{}])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    """One of ``number``, ``string``, ``ident``, ``op`` or ``end``."""

    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    """Splits a formula into tokens; the list always ends with an ``end``
    token.

    Raises:
        PctlSyntaxError: on characters that cannot start a token
    """
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        match = _TOKEN_PATTERN.match(text, position)
        if not match:
            if text[position] == '"':
                raise PctlSyntaxError("unterminated quoted label", position=position)
            raise PctlSyntaxError(
                f"unexpected character {text[position]!r}", position=position
            )
        kind = match.lastgroup
        assert kind is not None
        if kind != "space":
            tokens.append(Token(kind, match.group(), position))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


def _describe(token: Token) -> str:
    return "end of input" if token.kind == "end" else repr(token.text)


class _Parser:
    _tokens: List[Token]
    _index: int

    def __init__(self, text: str):
        self._tokens = tokenize(text)
        self._index = 0

    @property
    def _current(self) -> Token:
        return self._tokens[self._index]

    def _fail(self, expected: Sequence[str], token: Optional[Token] = None) -> NoReturn:
        token = token or self._current
        raise PctlSyntaxError(
            f"unexpected {_describe(token)}",
            position=token.position,
            expected=expected,
        )

    def _at(self, text: str) -> bool:
        token = self._current
        return token.kind in ("op", "ident") and token.text == text

    def _accept(self, text: str) -> Optional[Token]:
        if self._at(text):
            token = self._current
            self._index += 1
            return token
        return None

    def _expect(self, text: str) -> Token:
        token = self._accept(text)
        if token is None:
            self._fail([repr(text)])
        return token

    def _expect_int(self) -> int:
        token = self._current
        if token.kind != "number" or not token.text.isdigit():
            self._fail(["non-negative integer"])
        self._index += 1
        return int(token.text)

    def _expect_number(self) -> float:
        token = self._current
        if token.kind != "number":
            self._fail(["number"])
        self._index += 1
        return float(token.text)

    def parse(self) -> Formula:
        formula = self._state()
        if self._current.kind != "end":
            self._fail(["'&'", "end of input"])
        return formula

    def _state(self) -> Formula:
        result = self._unary()
        while self._accept("&"):
            result = And(result, self._unary())
        return result

    def _unary(self) -> Formula:
        if self._accept("!"):
            return Not(self._unary())
        return self._primary()

    def _primary(self) -> Formula:
        token = self._current

        if token.kind == "string":
            self._index += 1
            name = token.text[1:-1]
            if not name:
                raise PctlSyntaxError("empty label", position=token.position)
            return Atom(name)

        if token.kind == "ident":
            if token.text == "true":
                self._index += 1
                return TrueFormula()
            if token.text == "P":
                self._index += 1
                return self._prob_query()
            if token.text == "R":
                self._index += 1
                return self._reward_query(token)
            if token.text not in RESERVED_WORDS:
                self._index += 1
                return Atom(token.text)

        if self._accept("("):
            result = self._state()
            self._expect(")")
            return result

        self._fail(["'true'", "label", "'!'", "'('", "'P'", "'R'"])

    def _bound(self, is_probability: bool) -> Bound:
        token = self._current
        if self._accept("=?"):
            return Bound.query()
        for op in ("<=", ">=", "<", ">"):
            if self._accept(op):
                value_token = self._current
                value = self._expect_number()
                try:
                    if is_probability and not 0 <= value <= 1:
                        raise InvalidArgumentError(
                            f"probability threshold {value!r} outside [0, 1]"
                        )
                    return Bound(op, value)
                except InvalidArgumentError as ex:
                    raise PctlSyntaxError(
                        str(ex), position=value_token.position
                    ) from None
        self._fail(["'=?'", "'<'", "'<='", "'>'", "'>='"], token)

    def _prob_query(self) -> Formula:
        bound = self._bound(is_probability=True)
        self._expect("[")
        path = self._path()
        self._expect("]")
        return ProbQuery(bound, path)

    def _path(self) -> PathFormula:
        if self._accept("X"):
            return Next(self._state())

        if self._accept("F"):
            if self._accept("<="):
                steps = self._expect_int()
                return BoundedUntil(TrueFormula(), self._state(), steps)
            return Until(TrueFormula(), self._state())

        left = self._state()
        if not self._accept("U"):
            self._fail(["'&'", "'U'"])
        if self._accept("<="):
            steps = self._expect_int()
            return BoundedUntil(left, self._state(), steps)
        return Until(left, self._state())

    def _reward_query(self, start: Token) -> Formula:
        name: Optional[str] = None
        if self._accept("{"):
            token = self._current
            if token.kind != "string":
                self._fail(["quoted reward structure name"])
            self._index += 1
            name = token.text[1:-1]
            self._expect("}")

        bound = self._bound(is_probability=False)
        if bound.value is not None and bound.value < 0:
            raise PctlSyntaxError(
                f"reward threshold {bound.value!r} is negative",
                position=start.position,
            )

        self._expect("[")
        form = self._reward_form()
        self._expect("]")
        return RewardQuery(bound, form, name)

    def _reward_form(self) -> RewardForm:
        if self._accept("I"):
            self._expect("=")
            return Instantaneous(self._expect_int())
        if self._accept("C"):
            self._expect("<=")
            return Cumulative(self._expect_int())
        if self._accept("F"):
            return Reachability(self._state())
        if self._accept("S"):
            return SteadyState()
        self._fail(["'I'", "'C'", "'F'", "'S'"])


def parse(text: str) -> Formula:
    """Parses a PCTL state formula or query.

    Raises:
        PctlSyntaxError: if the text is not a well-formed formula; the error
            carries the position and the tokens that would have been accepted
    """
    return _Parser(text).parse()
