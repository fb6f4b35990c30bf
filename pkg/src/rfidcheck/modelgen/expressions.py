"""Expression language of guarded-command models: syntax tree, printer
and compiler to Python callables.
"""

import math

from dataclasses import dataclass
from functools import lru_cache
from scipy.stats import binom
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Mapping,
    Sequence,
    Tuple,
    Union,
)

from rfidcheck.errors import ModelError

__all__ = (
    "Binary",
    "Call",
    "Conditional",
    "Expression",
    "FUNCTIONS",
    "Literal",
    "Name",
    "Scope",
    "Unary",
    "binom_pmf",
    "binom_tail",
    "compile_expression",
    "evaluate_constant",
    "format_expression",
    "free_names",
)


# --- Syntax tree ------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: Union[bool, int, float]


@dataclass(frozen=True)
class Name:
    """Reference to a variable, constant or formula; `primed` refers to the
    value of a variable in the successor state.
    """

    name: str
    primed: bool = False


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Conditional:
    condition: "Expression"
    if_true: "Expression"
    if_false: "Expression"


@dataclass(frozen=True)
class Call:
    function: str
    args: Tuple["Expression", ...]


Expression = Union[Literal, Name, Unary, Binary, Conditional, Call]


# --- Built-in functions -----------------------------------------------------


@lru_cache(maxsize=65536)
def binom_pmf(k: int, n: int, p: float) -> float:
    """Probability of exactly `k` successes in `n` Bernoulli(p) trials."""
    k, n = int(k), int(n)
    if k < 0 or n < 0 or k > n:
        return 0.0
    return float(binom.pmf(k, n, p))


@lru_cache(maxsize=65536)
def binom_tail(k: int, n: int, p: float) -> float:
    """Probability of at least `k` successes in `n` Bernoulli(p) trials."""
    k, n = int(k), int(n)
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    return float(binom.sf(k - 1, n, p))


def _mod(a: int, b: int) -> int:
    return a % b


def _comb(n: int, k: int) -> int:
    n, k = int(n), int(k)
    return math.comb(n, k) if 0 <= k <= n else 0


FUNCTIONS: Dict[str, Tuple[Callable[..., Any], int]] = {
    "min": (min, -2),
    "max": (max, -2),
    "floor": (math.floor, 1),
    "ceil": (math.ceil, 1),
    "pow": (pow, 2),
    "mod": (_mod, 2),
    "comb": (_comb, 2),
    "binom": (binom_pmf, 3),
    "binom_tail": (binom_tail, 3),
}
"""Built-in functions with their arity; negative arities give the minimum
number of arguments of variadic functions.
"""


# --- Printer ----------------------------------------------------------------

_PRECEDENCE = {
    "=>": 1,
    "|": 2,
    "&": 3,
    "=": 5,
    "!=": 5,
    "<": 5,
    "<=": 5,
    ">": 5,
    ">=": 5,
    "+": 6,
    "-": 6,
    "*": 7,
    "/": 7,
}


def _precedence(expr: Expression) -> int:
    if isinstance(expr, Conditional):
        return 0
    elif isinstance(expr, Binary):
        return _PRECEDENCE[expr.op]
    elif isinstance(expr, Unary):
        return 4 if expr.op == "!" else 8
    return 9


def _format_literal(value: Union[bool, int, float]) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    elif isinstance(value, int):
        return str(value)
    text = repr(float(value))
    if text in ("inf", "-inf", "nan"):
        raise ModelError(f"cannot write non-finite literal {text}")
    return text


def format_expression(expr: Expression) -> str:
    """Formats an expression so that parsing the result yields an equal
    syntax tree.
    """
    if isinstance(expr, Literal):
        if not isinstance(expr.value, bool) and expr.value < 0:
            return f"({_format_literal(expr.value)})"
        return _format_literal(expr.value)
    elif isinstance(expr, Name):
        return expr.name + ("'" if expr.primed else "")
    elif isinstance(expr, Call):
        return f"{expr.function}({', '.join(format_expression(a) for a in expr.args)})"
    elif isinstance(expr, Unary):
        operand = format_expression(expr.operand)
        if _precedence(expr.operand) < _precedence(expr):
            operand = f"({operand})"
        return f"{expr.op}{operand}"
    elif isinstance(expr, Binary):
        own = _precedence(expr)
        left = format_expression(expr.left)
        right = format_expression(expr.right)
        if _precedence(expr.left) < own or (
            own in (1, 5) and _precedence(expr.left) == own
        ):
            left = f"({left})"
        if _precedence(expr.right) <= own:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    elif isinstance(expr, Conditional):
        condition = format_expression(expr.condition)
        if _precedence(expr.condition) == 0:
            condition = f"({condition})"
        return (
            f"{condition} ? {format_expression(expr.if_true)} : "
            f"{format_expression(expr.if_false)}"
        )
    raise TypeError(f"not an expression: {expr!r}")


# --- Compiler ---------------------------------------------------------------


def free_names(expr: Expression) -> List[Name]:
    """Returns the names referenced by an expression, in order of
    appearance.
    """
    if isinstance(expr, Name):
        return [expr]
    elif isinstance(expr, Unary):
        return free_names(expr.operand)
    elif isinstance(expr, Binary):
        return free_names(expr.left) + free_names(expr.right)
    elif isinstance(expr, Conditional):
        return (
            free_names(expr.condition)
            + free_names(expr.if_true)
            + free_names(expr.if_false)
        )
    elif isinstance(expr, Call):
        return [name for arg in expr.args for name in free_names(arg)]
    return []


_PYTHON_OPERATORS = {
    "=": "==",
    "!=": "!=",
    "<": "<",
    "<=": "<=",
    ">": ">",
    ">=": ">=",
    "+": "+",
    "-": "-",
    "*": "*",
    "/": "/",
    "&": "and",
    "|": "or",
}


@dataclass
class Scope:
    """Names visible to compiled expressions."""

    variables: Mapping[str, int]
    """Index of each variable in the state tuple."""

    constants: Mapping[str, Union[bool, int, float]]
    formulas: Mapping[str, Expression]


class _PythonTranslator:
    def __init__(self, scope: Scope, allow_primed: bool):
        self._scope = scope
        self._allow_primed = allow_primed
        self._expanding: List[str] = []

    def translate(self, expr: Expression) -> str:
        if isinstance(expr, Literal):
            return repr(expr.value)

        if isinstance(expr, Name):
            return self._name(expr)

        if isinstance(expr, Unary):
            operand = self.translate(expr.operand)
            return f"(not {operand})" if expr.op == "!" else f"(-{operand})"

        if isinstance(expr, Binary):
            left = self.translate(expr.left)
            right = self.translate(expr.right)
            if expr.op == "=>":
                return f"((not {left}) or {right})"
            return f"({left} {_PYTHON_OPERATORS[expr.op]} {right})"

        if isinstance(expr, Conditional):
            return (
                f"({self.translate(expr.if_true)} if {self.translate(expr.condition)} "
                f"else {self.translate(expr.if_false)})"
            )

        if isinstance(expr, Call):
            if expr.function not in FUNCTIONS:
                raise ModelError(f"unknown function {expr.function!r}")
            _, arity = FUNCTIONS[expr.function]
            count = len(expr.args)
            if (arity >= 0 and count != arity) or (arity < 0 and count < -arity):
                raise ModelError(
                    f"function {expr.function!r} called with {count} arguments"
                )
            args = ", ".join(self.translate(arg) for arg in expr.args)
            return f"_f_{expr.function}({args})"

        raise TypeError(f"not an expression: {expr!r}")

    def _name(self, expr: Name) -> str:
        scope = self._scope
        if expr.name in scope.variables:
            index = scope.variables[expr.name]
            if expr.primed:
                if not self._allow_primed:
                    raise ModelError(
                        f"primed variable {expr.name}' is not allowed here"
                    )
                return f"t[{index}]"
            return f"s[{index}]"

        if expr.primed:
            raise ModelError(f"{expr.name!r} is not a variable")

        if expr.name in scope.constants:
            return repr(scope.constants[expr.name])

        if expr.name in scope.formulas:
            if expr.name in self._expanding:
                raise ModelError(f"formula {expr.name!r} refers to itself")
            self._expanding.append(expr.name)
            try:
                return self.translate(scope.formulas[expr.name])
            finally:
                self._expanding.pop()

        raise ModelError(f"unknown identifier {expr.name!r}")


_NAMESPACE = {f"_f_{name}": func for name, (func, _) in FUNCTIONS.items()}


def compile_expression(
    expr: Expression, scope: Scope, *, allow_primed: bool = False
) -> Callable[..., Any]:
    """Compiles an expression to a Python function.

    The function takes the state tuple as its first argument and, when
    `allow_primed` is set, the successor state tuple as its second one.

    Raises:
        ModelError: if the expression refers to unknown names or functions
    """
    source = _PythonTranslator(scope, allow_primed).translate(expr)
    params = "s, t" if allow_primed else "s"
    code = compile(f"lambda {params}: {source}", "<model>", "eval")
    return eval(code, dict(_NAMESPACE))


def evaluate_constant(
    expr: Expression, constants: Mapping[str, Union[bool, int, float]]
) -> Union[bool, int, float]:
    """Evaluates an expression that may only refer to constants."""
    function = compile_expression(expr, Scope({}, constants, {}))
    try:
        return function(())
    except (ArithmeticError, TypeError, ValueError) as ex:
        raise ModelError(f"cannot evaluate {format_expression(expr)}: {ex}") from None


def translate_all(exprs: Sequence[Expression], scope: Scope) -> List[str]:
    """Returns the Python source of several expressions; used by the builder
    to fuse them into a single function.
    """
    translator = _PythonTranslator(scope, allow_primed=False)
    return [translator.translate(expr) for expr in exprs]


def compile_source(source: str, params: str) -> Callable[..., Any]:
    """Compiles Python source produced by :func:`translate_all`."""
    code = compile(f"lambda {params}: {source}", "<model>", "eval")
    return eval(code, dict(_NAMESPACE))
