"""Default configuration of the rfidcheck application.

Keys must be uppercase; anything else is ignored by the configurator.
"""

SEED = 20240229
"""Seed used by simulations and sweeps when none is given on the command
line.
"""

SOLVER = {
    "method": "gauss-seidel",
    "tolerance": 1e-8,
    "max_iterations": 1_000_000,
}
"""Options of the linear equation solvers used by the chain engines."""

STATE_LIMIT = 5_000_000
"""Maximum number of states that the model builder may explore."""

SIMULATION = {
    "runs": 100_000,
    "protocol_runs": 200,
    "max_steps": 1_000_000,
    "min_steady_steps": 1_000,
    "steady_steps": 10_000,
    "block_size": 4096,
}
"""Options of the Monte Carlo executors."""

SWEEP = {"workers": 4}
"""Number of N values that a sweep evaluates concurrently."""

COSTS = {
    "tx_challenge": 1.0,
    "tx_response": 2.0,
    "tx_forward": 3.0,
    "tx_reply": 2.0,
    "tx_relay": 1.0,
    "tx_error": 1.0,
    "server_probe": 1.0,
    "server_exponent": 1.0,
    "tag_keyed_hash": 1.0,
    "tag_hash": 1.0,
}
"""Default cost table of the RFID model; see ``rfidcheck.modelgen.rfid``."""
