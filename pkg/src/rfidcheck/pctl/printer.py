"""Formatting of formulas in the surface syntax accepted by the parser."""

import re

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
from .parser import RESERVED_WORDS

__all__ = ("format_formula",)

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _label(name: str) -> str:
    if _IDENTIFIER.match(name) and name not in RESERVED_WORDS:
        return name
    return f'"{name}"'


def _bound(bound: Bound) -> str:
    if bound.is_query:
        return "=?"
    return f"{bound.op}{bound.value!r}"


def _path(path: PathFormula) -> str:
    if isinstance(path, Next):
        return f"X {format_formula(path.operand)}"
    elif isinstance(path, BoundedUntil):
        return (
            f"{format_formula(path.left)} U<={path.bound} "
            f"{format_formula(path.right)}"
        )
    elif isinstance(path, Until):
        return f"{format_formula(path.left)} U {format_formula(path.right)}"
    raise TypeError(f"not a path formula: {path!r}")


def _reward_form(form: RewardForm) -> str:
    if isinstance(form, Instantaneous):
        return f"I={form.t}"
    elif isinstance(form, Cumulative):
        return f"C<={form.t}"
    elif isinstance(form, Reachability):
        return f"F {format_formula(form.target)}"
    elif isinstance(form, SteadyState):
        return "S"
    raise TypeError(f"not a reward form: {form!r}")


def format_formula(formula: Formula) -> str:
    """Formats a formula so that parsing the result yields an equal
    formula.
    """
    if isinstance(formula, TrueFormula):
        return "true"
    elif isinstance(formula, Atom):
        return _label(formula.name)
    elif isinstance(formula, And):
        right = format_formula(formula.right)
        if isinstance(formula.right, And):
            right = f"({right})"
        return f"{format_formula(formula.left)} & {right}"
    elif isinstance(formula, Not):
        operand = format_formula(formula.operand)
        if isinstance(formula.operand, And):
            operand = f"({operand})"
        return f"!{operand}"
    elif isinstance(formula, ProbQuery):
        return f"P{_bound(formula.bound)} [ {_path(formula.path)} ]"
    elif isinstance(formula, RewardQuery):
        selector = (
            f'{{"{formula.reward_name}"}}' if formula.reward_name is not None else ""
        )
        return f"R{selector}{_bound(formula.bound)} [ {_reward_form(formula.form)} ]"
    raise TypeError(f"not a state formula: {formula!r}")
