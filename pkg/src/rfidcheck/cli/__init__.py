"""Command line interface of the toolkit."""

import trio

from typing import Optional, Sequence

from .app import RfidCheckApp
from .experiment import ExperimentSpec, parse_sweep

__all__ = ("ExperimentSpec", "RfidCheckApp", "main", "parse_sweep")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs the command line application and returns its exit code."""
    app = RfidCheckApp(argv)
    return trio.run(app.run)
