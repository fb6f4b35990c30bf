"""Grammar of the guarded-command model language and the transformer that
lowers parse trees of expressions into syntax tree nodes.

Operator precedence from loosest to tightest: ``? :``, ``=>``, ``|``,
``&``, ``!``, relational operators, ``+ -``, ``* /``, unary minus.
Relational operators do not associate; ``=>`` associates to the right.
"""

from functools import lru_cache
from lark import Lark, Token, Transformer, v_args
from lark.exceptions import (
    UnexpectedCharacters,
    UnexpectedEOF,
    UnexpectedInput,
    UnexpectedToken,
)
from typing import Iterable, Optional

from rfidcheck.errors import ModelSyntaxError

from .expressions import (
    Binary,
    Call,
    Conditional,
    Expression,
    Literal,
    Name,
    Unary,
)

__all__ = (
    "GRAMMAR",
    "ExpressionBuilder",
    "get_parser",
    "parse_expression",
    "syntax_error_from",
)


GRAMMAR = r"""
model: "dtmc"? _declaration*

_declaration: constant
            | formula
            | label
            | module
            | rewards

constant: "const" const_type? NAME "=" expression ";"
!const_type: "int" | "double" | "bool"
formula: "formula" NAME "=" expression ";"
label: "label" STRING "=" expression ";"

module: "module" NAME (variable | command)* "endmodule"
variable: "var"? NAME ":" "[" expression ".." expression "]" ("init" expression)? ";"
command: action expression "->" updates ";"
action: "[" NAME? "]"

updates: update ("+" update)*
update: expression ":" assignments  -> weighted_update
      | assignments                 -> certain_update
assignments: "true"                        -> no_assignments
           | assignment ("&" assignment)*
assignment: "(" NAME "'" "=" expression ")"

rewards: "rewards" STRING reward_item* "endrewards"
reward_item: action? expression ":" expression ";"

?expression: implication
           | implication "?" expression ":" expression  -> conditional

?implication: disjunction
            | disjunction "=>" implication  -> implies

?disjunction: conjunction
            | disjunction "|" conjunction  -> or_

?conjunction: negation
            | conjunction "&" negation  -> and_

?negation: relation
         | "!" negation  -> not_

?relation: sum
         | sum "=" sum   -> eq
         | sum "!=" sum  -> ne
         | sum "<" sum   -> lt
         | sum "<=" sum  -> le
         | sum ">" sum   -> gt
         | sum ">=" sum  -> ge

?sum: product
    | sum "+" product  -> add
    | sum "-" product  -> sub

?product: unary
        | product "*" unary  -> mul
        | product "/" unary  -> div

?unary: primary
      | "-" unary  -> neg

?primary: INT                                      -> int_literal
        | FLOAT                                    -> float_literal
        | "true"                                   -> true_literal
        | "false"                                  -> false_literal
        | NAME "'"                                 -> primed_name
        | NAME                                     -> name
        | NAME "(" expression ("," expression)* ")"  -> call
        | "(" expression ")"

NAME: /[A-Za-z_][A-Za-z0-9_]*/
STRING: /"[^"\n]*"/
FLOAT.2: /\d+\.\d+([eE][+-]?\d+)?|\d+[eE][+-]?\d+/
INT: /\d+/
COMMENT: /\/\/[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""


@lru_cache(maxsize=None)
def get_parser() -> Lark:
    """Returns the parser of the model language, built once."""
    return Lark(
        GRAMMAR,
        parser="earley",
        lexer="basic",
        start=["model", "expression"],
        propagate_positions=True,
    )


def _binary(op: str):
    @v_args(inline=True)
    def build(self, left: Expression, right: Expression) -> Expression:
        return Binary(op, left, right)

    return build


class ExpressionBuilder(Transformer):
    """Lowers parse trees of expressions into syntax tree nodes."""

    implies = _binary("=>")
    or_ = _binary("|")
    and_ = _binary("&")
    eq = _binary("=")
    ne = _binary("!=")
    lt = _binary("<")
    le = _binary("<=")
    gt = _binary(">")
    ge = _binary(">=")
    add = _binary("+")
    sub = _binary("-")
    mul = _binary("*")
    div = _binary("/")

    @v_args(inline=True)
    def conditional(
        self, condition: Expression, if_true: Expression, if_false: Expression
    ) -> Expression:
        return Conditional(condition, if_true, if_false)

    @v_args(inline=True)
    def not_(self, operand: Expression) -> Expression:
        return Unary("!", operand)

    @v_args(inline=True)
    def neg(self, operand: Expression) -> Expression:
        return Unary("-", operand)

    @v_args(inline=True)
    def int_literal(self, token: Token) -> Expression:
        return Literal(int(token))

    @v_args(inline=True)
    def float_literal(self, token: Token) -> Expression:
        return Literal(float(token))

    def true_literal(self, _) -> Expression:
        return Literal(True)

    def false_literal(self, _) -> Expression:
        return Literal(False)

    @v_args(inline=True)
    def name(self, token: Token) -> Expression:
        return Name(str(token))

    @v_args(inline=True)
    def primed_name(self, token: Token) -> Expression:
        return Name(str(token), primed=True)

    @v_args(inline=True)
    def call(self, function: Token, *args: Expression) -> Expression:
        return Call(str(function), tuple(args))


_TERMINAL_NAMES = {
    "NAME": "an identifier",
    "STRING": "a quoted name",
    "INT": "a number",
    "FLOAT": "a number",
}


def _describe_expected(names: Iterable[str]) -> str:
    parser = get_parser()
    described = set()
    for name in names:
        if name in _TERMINAL_NAMES:
            described.add(_TERMINAL_NAMES[name])
            continue
        try:
            pattern = parser.get_terminal(name).pattern
        except KeyError:
            described.add(name)
        else:
            described.add(repr(pattern.value) if pattern.type == "str" else name)

    items = sorted(described)
    if not items:
        return "nothing"
    elif len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " or " + items[-1]


def syntax_error_from(ex: UnexpectedInput, text: str) -> ModelSyntaxError:
    """Converts a parse failure reported by the parser into a syntax error
    naming the offending line.
    """
    line: Optional[int] = getattr(ex, "line", None)
    if line is None or line < 1:
        line = text.rstrip().count("\n") + 1

    if isinstance(ex, UnexpectedCharacters):
        message = f"unexpected character {ex.char!r}"
    elif isinstance(ex, UnexpectedToken):
        message = (
            f"expected {_describe_expected(ex.expected)}, found {str(ex.token)!r}"
        )
    elif isinstance(ex, UnexpectedEOF):
        message = f"expected {_describe_expected(ex.expected)}, found end of input"
    else:
        message = "malformed input"

    return ModelSyntaxError(message, line=line)


def parse_expression(text: str) -> Expression:
    """Parses a single expression.

    Raises:
        ModelSyntaxError: if the text is not a well-formed expression
    """
    try:
        tree = get_parser().parse(text, start="expression")
    except UnexpectedInput as ex:
        raise syntax_error_from(ex, text) from None
    return ExpressionBuilder().transform(tree)
