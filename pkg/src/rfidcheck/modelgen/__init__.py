"""Guarded-command models, their textual form, the explicit-state builder
and the generator of the RFID deployment model.
"""

from .builder import DEFAULT_STATE_LIMIT, BuildResult, build
from .expressions import Expression, FUNCTIONS, format_expression
from .model import (
    Command,
    GuardedCommandModule,
    Model,
    RewardItem,
    RewardSpec,
    Update,
    Variable,
)
from .rfid import (
    CostTable,
    MAX_EXPLICIT_TAGS,
    RfidModelConfig,
    ServiceMetrics,
    build_rfid_model,
    computation_costs,
    count_series,
    increment_spread,
    rfid_model,
    rfid_model_text,
    saturation_time,
    service_metrics,
    transmission_series,
)
from .syntax import parse_expression
from .text import dump_model, format_model, load_model, parse_model

__all__ = (
    "BuildResult",
    "Command",
    "CostTable",
    "DEFAULT_STATE_LIMIT",
    "Expression",
    "FUNCTIONS",
    "GuardedCommandModule",
    "MAX_EXPLICIT_TAGS",
    "Model",
    "RewardItem",
    "RewardSpec",
    "RfidModelConfig",
    "ServiceMetrics",
    "Update",
    "Variable",
    "build",
    "build_rfid_model",
    "computation_costs",
    "count_series",
    "dump_model",
    "format_expression",
    "format_model",
    "increment_spread",
    "load_model",
    "parse_expression",
    "parse_model",
    "rfid_model",
    "rfid_model_text",
    "saturation_time",
    "service_metrics",
    "transmission_series",
)
