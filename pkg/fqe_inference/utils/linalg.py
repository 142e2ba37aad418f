"""Symmetric positive-definite solves used by the stage solvers and the variance code."""

import logging

import numpy as np
from scipy import linalg

from ..config import numerics
from ..errors import SINGULAR_SIGMA_MSG, InferenceError, SolverError

logger = logging.getLogger(__name__)


def symmetric_rank(gram: np.ndarray) -> int:
    """Numerical rank of a symmetric PSD matrix from its eigenvalues."""
    eig = linalg.eigvalsh(gram)
    top = float(np.max(np.abs(eig))) if eig.size else 0.0
    tol = max(gram.shape) * np.finfo(np.float64).eps * top
    return int(np.sum(eig > tol))


def solve_normal_equations(gram: np.ndarray, rhs: np.ndarray, what: str = "normal equations") -> np.ndarray:
    """Solve ``gram @ x = rhs`` by Cholesky after a rank check.

    Raises:
        SolverError: ``gram`` is rank deficient; carries the rank and dimension.
    """
    gram = 0.5 * (gram + gram.T)
    dim = gram.shape[0]
    rank = symmetric_rank(gram)
    if rank < dim:
        raise SolverError(f"{what} are singular: rank {rank} < dimension {dim}", rank=rank, dim=dim)
    try:
        factor = linalg.cho_factor(gram)
    except linalg.LinAlgError as e:
        raise SolverError(f"{what} are not positive definite: {e}", rank=rank, dim=dim) from e
    return linalg.cho_solve(factor, rhs)


def condition_number(sym: np.ndarray) -> float:
    eig = linalg.eigvalsh(sym)
    if eig.size == 0 or eig[0] <= 0.0:
        return float("inf")
    return float(eig[-1] / eig[0])


class CovarianceSolver:
    """Cholesky-factored Σ̂ with a condition check and optional ridge jitter.

    Every application of Σ̂⁻¹ in the inference code goes through ``solve``;
    no explicit inverse is formed.
    """

    def __init__(
        self,
        sigma: np.ndarray,
        stage: int | str,
        allow_jitter: bool = False,
        condition_limit: float | None = None,
        jitter_scale: float | None = None,
    ):
        """Factor Σ̂.

        Args:
            sigma: Symmetric PSD matrix [d, d].
            stage: Label used in messages (stage number or pair).
            allow_jitter: Add ε·tr(Σ̂)/d·I instead of failing when ill-conditioned.
            condition_limit: Defaults to ``numerics.condition_limit``.
            jitter_scale: ε; defaults to ``numerics.jitter_scale``.
        """
        limit = numerics.condition_limit if condition_limit is None else condition_limit
        scale = numerics.jitter_scale if jitter_scale is None else jitter_scale
        sym = 0.5 * (np.asarray(sigma, dtype=np.float64) + np.asarray(sigma, dtype=np.float64).T)
        self.dim = sym.shape[0]
        self.condition = condition_number(sym)
        self.jitter = 0.0
        if self.condition > limit:
            message = SINGULAR_SIGMA_MSG.format(stage=stage, cond=self.condition, limit=limit)
            trace = float(np.trace(sym))
            if not allow_jitter or trace <= 0.0:
                raise InferenceError(message)
            self.jitter = scale * trace / self.dim
            sym = sym + self.jitter * np.eye(self.dim)
            logger.warning(f"Σ̂_{stage}: condition {self.condition:.3e}, added jitter {self.jitter:.3e}·I")
        self.matrix = sym
        self._factor = linalg.cho_factor(sym)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self._factor, rhs)

    def quad(self, x: np.ndarray, y: np.ndarray | None = None) -> float:
        """xᵀ Σ̂⁻¹ y (y defaults to x)."""
        return float(x @ self.solve(x if y is None else y))

    def inv_sqrt(self) -> np.ndarray:
        """Symmetric Σ̂^{-1/2} from the eigendecomposition."""
        eig, vecs = linalg.eigh(self.matrix)
        return (vecs / np.sqrt(eig)) @ vecs.T
