"""Monte Carlo oracles: a path sampler for chains and a discrete-event
simulator of RFID deployments running the real protocol.
"""

from .dtmc import DtmcSampler, RunStreams, SimulationOptions, simulate_dtmc
from .protocol import SERIES, ProtocolSimulation, simulate_protocol
from .report import Comparison, SimReport, compare, summarize

__all__ = (
    "Comparison",
    "DtmcSampler",
    "ProtocolSimulation",
    "RunStreams",
    "SERIES",
    "SimReport",
    "SimulationOptions",
    "compare",
    "simulate_dtmc",
    "simulate_protocol",
    "summarize",
)
