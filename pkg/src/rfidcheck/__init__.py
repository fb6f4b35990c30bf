"""Quantitative verification toolkit for a hash-based RFID mutual
authentication protocol: protocol entities, a Markov chain model checker,
a generator of the deployment model and Monte Carlo oracles.
"""

from .base import AsyncApp, BaseApp
from .configurator import Configuration
from .version import __version__, __version_info__

__all__ = (
    "__version__",
    "__version_info__",
    "AsyncApp",
    "BaseApp",
    "Configuration",
)
