"""Linear equation solvers for fixed-point systems ``x = A x + b`` with a
substochastic matrix `A`.
"""

import numpy as np

from dataclasses import dataclass
from logging import getLogger
from scipy.sparse import csc_matrix, csr_matrix, identity, tril, triu
from scipy.sparse.linalg import MatrixRankWarning, splu, spsolve
from typing import Any, Mapping, Optional
from warnings import catch_warnings, simplefilter

from rfidcheck.errors import InvalidArgumentError, NumericalError

__all__ = ("SolverOptions", "solve_fixed_point", "solve_stationary")

log = getLogger(__name__)

METHODS = ("gauss-seidel", "jacobi", "direct")


@dataclass(frozen=True)
class SolverOptions:
    """Options of the linear equation solvers."""

    method: str = "gauss-seidel"
    tolerance: float = 1e-8
    """Convergence threshold on the max-norm of successive differences."""

    max_iterations: int = 1_000_000

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown solver method: {self.method!r}")
        if self.tolerance <= 0:
            raise InvalidArgumentError("solver tolerance must be positive")
        if self.max_iterations <= 0:
            raise InvalidArgumentError("iteration cap must be positive")

    @classmethod
    def from_config(cls, config: Optional[Mapping[str, Any]]) -> "SolverOptions":
        """Creates solver options from the ``SOLVER`` section of the app
        configuration.
        """
        config = config or {}
        return cls(
            method=str(config.get("method", cls.method)),
            tolerance=float(config.get("tolerance", cls.tolerance)),
            max_iterations=int(config.get("max_iterations", cls.max_iterations)),
        )


def _direct(matrix: csr_matrix, rhs: np.ndarray) -> np.ndarray:
    with catch_warnings():
        simplefilter("error", MatrixRankWarning)
        try:
            result = spsolve(csc_matrix(matrix), rhs)
        except (MatrixRankWarning, RuntimeError) as ex:
            raise NumericalError(f"singular linear system: {ex}") from None
    result = np.atleast_1d(np.asarray(result, dtype=float))
    if not np.all(np.isfinite(result)):
        raise NumericalError("singular linear system")
    return result


def _jacobi(
    A: csr_matrix, b: np.ndarray, options: SolverOptions
) -> np.ndarray:
    x = np.zeros_like(b)
    for iteration in range(1, options.max_iterations + 1):
        x_next = A @ x + b
        diff = np.max(np.abs(x_next - x), initial=0.0)
        x = x_next
        if diff < options.tolerance:
            log.debug(f"Jacobi converged after {iteration} iterations")
            return x
    raise NumericalError(
        f"Jacobi iteration did not converge in {options.max_iterations} iterations"
    )


def _gauss_seidel(
    A: csr_matrix, b: np.ndarray, options: SolverOptions
) -> np.ndarray:
    # (I - A) = (D + L) + U; each sweep solves (D + L) x' = b - U x
    system = identity(A.shape[0], format="csr") - A
    lower = csc_matrix(tril(system, k=0))
    upper = csr_matrix(triu(system, k=1))
    try:
        factor = splu(lower, permc_spec="NATURAL", diag_pivot_thresh=0.0)
    except RuntimeError as ex:
        raise NumericalError(f"singular linear system: {ex}") from None

    x = np.zeros_like(b)
    for iteration in range(1, options.max_iterations + 1):
        x_next = factor.solve(b - upper @ x)
        diff = np.max(np.abs(x_next - x), initial=0.0)
        x = x_next
        if not np.all(np.isfinite(x)):
            raise NumericalError("Gauss-Seidel iteration diverged")
        if diff < options.tolerance:
            log.debug(f"Gauss-Seidel converged after {iteration} sweeps")
            return x
    raise NumericalError(
        f"Gauss-Seidel iteration did not converge in "
        f"{options.max_iterations} sweeps"
    )


def solve_fixed_point(
    A: csr_matrix, b: np.ndarray, options: Optional[SolverOptions] = None
) -> np.ndarray:
    """Solves ``x = A x + b`` for a substochastic matrix `A` whose states
    all leave the system with positive probability.

    Raises:
        NumericalError: if the system is singular or the iteration cap is
            reached
    """
    options = options or SolverOptions()
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        return b.copy()

    A = csr_matrix(A)
    if options.method == "direct":
        return _direct(identity(A.shape[0], format="csr") - A, b)
    elif options.method == "jacobi":
        return _jacobi(A, b, options)
    else:
        return _gauss_seidel(A, b, options)


def solve_stationary(P: csr_matrix) -> np.ndarray:
    """Computes the stationary distribution of an irreducible stochastic
    matrix by replacing one balance equation with the normalisation
    constraint and solving the resulting system directly.

    Raises:
        NumericalError: if the system is singular
    """
    n = P.shape[0]
    if n == 1:
        return np.ones(1)

    # Balance equations (I - P)^T pi = 0, last one replaced by sum(pi) = 1
    system = (identity(n, format="csr") - csr_matrix(P)).T.tolil()
    system[n - 1, :] = np.ones(n)
    rhs = np.zeros(n)
    rhs[n - 1] = 1.0

    pi = _direct(csr_matrix(system), rhs)
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()
