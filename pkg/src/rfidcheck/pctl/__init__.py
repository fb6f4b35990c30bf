"""PCTL formulas with reward queries: syntax, parser, printer and
evaluator.
"""

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
from .evaluator import Rewards, evaluate, query_values, select_reward_structure
from .parser import RESERVED_WORDS, parse
from .printer import format_formula
from .properties import Property, load_properties, parse_properties, select_property

__all__ = (
    "And",
    "Atom",
    "Bound",
    "BoundedUntil",
    "Cumulative",
    "Formula",
    "Instantaneous",
    "Next",
    "Not",
    "PathFormula",
    "ProbQuery",
    "Property",
    "RESERVED_WORDS",
    "Reachability",
    "RewardForm",
    "RewardQuery",
    "Rewards",
    "SteadyState",
    "TrueFormula",
    "Until",
    "evaluate",
    "format_formula",
    "load_properties",
    "parse",
    "parse_properties",
    "query_values",
    "select_property",
    "select_reward_structure",
)
