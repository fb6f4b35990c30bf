"""Monte Carlo estimates and their comparison with analytic values."""

import math
import numpy as np

from dataclasses import dataclass
from typing import Sequence

from rfidcheck.errors import InvalidArgumentError

__all__ = ("Comparison", "SimReport", "compare", "summarize")


@dataclass(frozen=True)
class SimReport:
    """Mean of a quantity over independent simulation runs."""

    estimate: float
    std_error: float
    runs: int
    seed: int

    reliable: bool = True
    """``False`` if some runs were cut off by the step cap before their
    value was determined.
    """

    low_confidence: bool = False
    """``True`` if there were too few runs to estimate the standard error."""

    def __str__(self) -> str:
        text = f"{self.estimate:.6g} ± {self.std_error:.3g} ({self.runs} runs)"
        if not self.reliable:
            text += " [unreliable]"
        if self.low_confidence:
            text += " [low confidence]"
        return text


def summarize(
    values: Sequence[float], seed: int, *, reliable: bool = True
) -> SimReport:
    """Creates a report from the values of the individual runs.

    The standard error is the sample standard deviation over the square
    root of the number of runs. A run with an infinite value makes the
    estimate infinite.
    """
    array = np.asarray(values, dtype=float)
    runs = int(array.size)
    if runs < 1:
        raise InvalidArgumentError("at least one run is needed")

    if np.isinf(array).any():
        return SimReport(math.inf, 0.0, runs, seed, reliable, runs < 2)

    estimate = float(array.mean())
    if runs < 2:
        return SimReport(estimate, 0.0, runs, seed, reliable, True)

    std_error = float(array.std(ddof=1) / math.sqrt(runs))
    return SimReport(estimate, std_error, runs, seed, reliable, False)


@dataclass(frozen=True)
class Comparison:
    """Outcome of comparing an analytic value with a simulation estimate."""

    passed: bool
    analytic: float
    report: SimReport
    sigma: float

    @property
    def deviation(self) -> float:
        """Distance between the two values in units of the standard
        error.
        """
        difference = abs(self.analytic - self.report.estimate)
        if difference == 0 or math.isnan(difference):
            return 0.0 if difference == 0 else math.inf
        if self.report.std_error == 0:
            return math.inf
        return difference / self.report.std_error

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{verdict}: analytic {self.analytic:.6g}, simulated {self.report}, "
            f"deviation {self.deviation:.2f} sigma (limit {self.sigma:g})"
        )


def compare(analytic: float, report: SimReport, sigma: float = 3.0) -> Comparison:
    """Checks whether an analytic value lies within `sigma` standard errors
    of a simulation estimate.

    Raises:
        InvalidArgumentError: if `sigma` is not positive
    """
    if not sigma > 0:
        raise InvalidArgumentError("sigma must be positive")

    if math.isinf(analytic) or math.isinf(report.estimate):
        passed = analytic == report.estimate
    else:
        passed = abs(analytic - report.estimate) <= sigma * report.std_error
    return Comparison(passed, float(analytic), report, float(sigma))
