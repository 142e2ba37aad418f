"""Solvers for one FQE stage: a weighted, regularized least-squares problem.

The objective is

    L(θ) = (1/2N) Σ_n w_n (f(θ, φ_n) − y_n)² + (λ/2)‖θ‖²

with N the number of transitions. Weights are per transition (episode weights
repeated over the episode's steps) and sum to N.
"""

import logging

import numpy as np
from scipy import linalg

from ..approximators.families import Approximator
from ..errors import ConfigurationError
from ..models.requests import SolverConfig
from ..models.responses import SolverReport
from ..utils.linalg import solve_normal_equations

logger = logging.getLogger(__name__)

# Sufficient-decrease constant of the backtracking line searches.
ARMIJO_C = 1e-4
MIN_DAMPING = 1e-12


class StageObjective:
    """L(θ) and its derivatives for one stage."""

    def __init__(self, approx: Approximator, phis: np.ndarray, targets: np.ndarray, weights: np.ndarray, lam: float):
        self.approx = approx
        self.phis = phis
        self.targets = targets
        self.weights = weights
        self.lam = lam
        self.n = targets.shape[0]

    def residuals(self, theta: np.ndarray) -> np.ndarray:
        return self.approx.eval_batch(theta, self.phis) - self.targets

    def loss(self, theta: np.ndarray) -> float:
        e = self.residuals(theta)
        return float(0.5 * (self.weights * e) @ e / self.n + 0.5 * self.lam * theta @ theta)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        e = self.residuals(theta)
        jac = self.approx.grad_batch(theta, self.phis)
        return jac.T @ (self.weights * e) / self.n + self.lam * theta

    def gauss_newton_system(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        """(JᵀWJ/N + λI, ∇L, L) at θ."""
        e = self.residuals(theta)
        jac = self.approx.grad_batch(theta, self.phis)
        weighted = jac * self.weights[:, None]
        hessian = weighted.T @ jac / self.n + self.lam * np.eye(theta.size)
        grad = weighted.T @ e / self.n + self.lam * theta
        loss = float(0.5 * (self.weights * e) @ e / self.n + 0.5 * self.lam * theta @ theta)
        return hessian, grad, loss


def _report(
    objective: StageObjective,
    theta: np.ndarray,
    stage: int,
    method: str,
    iters: int,
    converged: bool,
    theta_max: float,
) -> SolverReport:
    touches = bool(np.any(np.abs(theta) >= theta_max))
    if touches:
        logger.warning(f"Stage {stage}: parameters reached the box bound θ_max={theta_max:g}")
    return SolverReport(
        stage=stage,
        method=method,
        iters=iters,
        final_grad_norm=float(np.linalg.norm(objective.gradient(theta))),
        loss=objective.loss(theta),
        converged=converged,
        touches_boundary=touches,
    )


def solve_normal(objective: StageObjective, stage: int, theta_max: float) -> tuple[np.ndarray, SolverReport]:
    """Exact minimizer for families linear in θ: (ΦᵀWΦ + NλI) θ = ΦᵀWy."""
    phis, w = objective.phis, objective.weights
    gram = (phis * w[:, None]).T @ phis
    if objective.lam > 0.0:
        gram = gram + objective.n * objective.lam * np.eye(phis.shape[1])
    rhs = phis.T @ (w * objective.targets)
    theta = solve_normal_equations(gram, rhs, what=f"stage {stage} normal equations")
    return theta, _report(objective, theta, stage, "normal_equations", 0, True, theta_max)


def _clip(theta: np.ndarray, theta_max: float, project: bool) -> np.ndarray:
    return np.clip(theta, -theta_max, theta_max) if project else theta


def _accept(
    objective: StageObjective, candidate: np.ndarray, loss: float, step: float, slope: float, grad_norm: float
) -> bool:
    """Armijo test; below loss resolution, a smaller gradient norm decides instead."""
    if objective.loss(candidate) <= loss + ARMIJO_C * step * slope:
        return True
    resolution = 64.0 * np.finfo(np.float64).eps * max(1.0, abs(loss))
    if abs(step * slope) <= resolution:
        return bool(np.linalg.norm(objective.gradient(candidate)) < grad_norm)
    return False


def _gradient_step(
    objective: StageObjective, theta: np.ndarray, loss: float, grad: np.ndarray, step: float, config: SolverConfig
) -> tuple[np.ndarray, float] | None:
    """Backtracking step along −∇L; None when no decrease is found."""
    slope = -float(grad @ grad)
    grad_norm = float(np.sqrt(-slope))
    for _ in range(config.max_halvings):
        candidate = theta - step * grad
        if _accept(objective, candidate, loss, step, slope, grad_norm):
            return candidate, step
        step *= 0.5
    return None


def solve_gradient_descent(
    objective: StageObjective,
    theta0: np.ndarray,
    config: SolverConfig,
    stage: int,
    theta_max: float,
    project: bool = False,
) -> tuple[np.ndarray, SolverReport]:
    """Gradient descent with a fixed step or backtracking from 1."""
    theta = theta0.copy()
    converged = False
    iters = 0
    for iters in range(1, config.max_iters + 1):
        grad = objective.gradient(theta)
        if np.linalg.norm(grad) <= config.grad_tol:
            converged = True
            iters -= 1
            break
        if config.step_size is not None:
            theta = _clip(theta - config.step_size * grad, theta_max, project)
            continue
        stepped = _gradient_step(objective, theta, objective.loss(theta), grad, 1.0, config)
        if stepped is None:
            break
        theta = _clip(stepped[0], theta_max, project)
    else:
        converged = bool(np.linalg.norm(objective.gradient(theta)) <= config.grad_tol)
    return theta, _report(objective, theta, stage, "gradient_descent", iters, converged, theta_max)


def solve_gauss_newton(
    objective: StageObjective,
    theta0: np.ndarray,
    config: SolverConfig,
    stage: int,
    theta_max: float,
    project: bool = False,
) -> tuple[np.ndarray, SolverReport]:
    """Levenberg-damped Gauss-Newton with a halving line search.

    The damping μ shrinks after full steps and grows after shortened or
    failed ones. Past ``damping_max`` the iteration takes a backtracking
    gradient step instead; if that also fails to decrease L the fit stops
    and is reported as not converged.
    """
    theta = theta0.copy()
    damping = config.damping_init
    converged = False
    iters = 0
    for iters in range(1, config.max_iters + 1):
        hessian, grad, loss = objective.gauss_newton_system(theta)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= config.grad_tol:
            converged = True
            iters -= 1
            break

        accepted = False
        while damping <= config.damping_max:
            try:
                factor = linalg.cho_factor(hessian + damping * np.eye(theta.size))
            except linalg.LinAlgError:
                damping *= 10.0
                continue
            direction = -linalg.cho_solve(factor, grad)
            slope = float(grad @ direction)
            step = 1.0
            for _ in range(config.max_halvings):
                candidate = _clip(theta + step * direction, theta_max, project)
                if _accept(objective, candidate, loss, step, slope, grad_norm):
                    accepted = True
                    break
                step *= 0.5
            if accepted:
                theta = candidate
                damping = max(damping / 10.0, MIN_DAMPING) if step == 1.0 else damping * 10.0
                break
            damping *= 10.0

        if not accepted:
            stepped = _gradient_step(objective, theta, loss, grad, 1.0, config)
            if stepped is None:
                logger.debug(f"Stage {stage}: no descent direction found at iteration {iters}")
                break
            theta = _clip(stepped[0], theta_max, project)
            damping = config.damping_init
    else:
        converged = bool(np.linalg.norm(objective.gradient(theta)) <= config.grad_tol)
    return theta, _report(objective, theta, stage, "gauss_newton", iters, converged, theta_max)


def solve_stage(
    objective: StageObjective,
    theta0: np.ndarray,
    config: SolverConfig,
    stage: int,
    theta_max: float,
    project: bool = False,
) -> tuple[np.ndarray, SolverReport]:
    """Dispatch to the configured solver ('auto' picks normal equations when f is linear in θ)."""
    method = config.method
    if method == "auto":
        method = "normal_equations" if objective.approx.linear_in_theta else "gauss_newton"
    match method:
        case "normal_equations":
            if not objective.approx.linear_in_theta:
                raise ConfigurationError(f"normal equations need a family linear in θ, not {objective.approx.family}")
            return solve_normal(objective, stage, theta_max)
        case "gauss_newton":
            return solve_gauss_newton(objective, theta0, config, stage, theta_max, project)
        case "gradient_descent":
            return solve_gradient_descent(objective, theta0, config, stage, theta_max, project)
        case _:
            raise ConfigurationError(f"unknown solver method {method!r}")
