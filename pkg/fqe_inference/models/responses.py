"""Result records produced by estimation, inference, bootstrap and study runs."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from .arrays import ArrayModel, FloatArray
from .features import ParamVector


class SolverReport(BaseModel):
    """Outcome of one stage fit."""

    stage: int = Field(..., ge=1, description="Stage h (1-based)")

    method: str = Field(..., description="Solver that produced the stage")

    iters: int = Field(..., ge=0, description="Iterations taken (0 for a direct solve)")

    final_grad_norm: float = Field(..., ge=0.0, description="‖∇ objective‖ at the returned parameters")

    loss: float = Field(..., description="Objective value at the returned parameters")

    converged: bool = Field(..., description="Whether final_grad_norm <= grad_tol (always true for direct solves)")

    touches_boundary: bool = Field(False, description="Whether any |θ_i| reached θ_max")


class FqeEstimate(ArrayModel):
    """Per-stage parameters θ̂_1..θ̂_H, the value estimate and solver diagnostics."""

    schema_version: int = Field(default=1, description="Record schema version")

    family: str = Field(..., description="Approximator family")

    horizon: int = Field(..., ge=1, description="H")

    d: int = Field(..., ge=1, description="Parameter dimension")

    thetas: list[ParamVector] = Field(..., description="θ̂_1..θ̂_H")

    value: float = Field(..., description="v̂_π")

    per_stage: list[SolverReport] = Field(..., description="Solver reports for stages 1..H")

    @property
    def converged(self) -> bool:
        return all(report.converged for report in self.per_stage)

    @property
    def theta_matrix(self) -> np.ndarray:
        """Parameters stacked as an [H, d] array."""
        return np.stack([p.theta for p in self.thetas])


class ZResidual(ArrayModel):
    """Norms of the stacked estimating equations Z_K(θ) + λR(θ)."""

    per_stage_norms: FloatArray = Field(..., description="‖·‖ for each stage block")

    total_norm: float = Field(..., ge=0.0, description="Norm of the stacked vector")

    scaled_norm: float = Field(..., ge=0.0, description="total_norm / H, the stacked per-stage loss-gradient norm")


class GradCheckReport(BaseModel):
    """Finite-difference verification of an approximator gradient."""

    family: str = Field(..., description="Approximator family")

    n_trials: int = Field(..., ge=1, description="Random (θ, φ) trial points")

    step: float = Field(..., gt=0.0, description="Central-difference step")

    max_rel_error: float = Field(..., ge=0.0, description="Worst relative error over the trial points")


class VarianceComponents(ArrayModel):
    """Plug-in Σ̂_h, ν̂_h, Ω̂_{i,j} and the scalar σ̂²."""

    sigma_h: FloatArray = Field(..., description="Σ̂_h stacked [H, d, d]")

    nu_h: FloatArray = Field(..., description="ν̂_h stacked [H, d]")

    omega: FloatArray = Field(..., description="Ω̂_{i,j} blocks [H, H, d, d]")

    sigma2: float = Field(..., description="σ̂²")

    theta_ref: FloatArray = Field(..., description="Parameters the components were evaluated at [H, d]")

    jitter: FloatArray = Field(..., description="Ridge jitter added to each Σ̂_h before solves (0 if none)")

    nu_mode: str = Field(..., description="exact_mdp, rollout or population")

    @property
    def horizon(self) -> int:
        return int(self.sigma_h.shape[0])

    @property
    def d(self) -> int:
        return int(self.sigma_h.shape[1])


class DivergenceEntry(BaseModel):
    """Restricted χ² divergence for one stage."""

    stage: int = Field(..., ge=1, description="Stage h")

    quad: float = Field(..., ge=0.0, description="ν̂_hᵀ Σ̂_h⁻¹ ν̂_h = 1 + χ²_{G_h}")

    chi2: float = Field(..., description="quad - 1")


class DivergenceReport(BaseModel):
    """Per-stage restricted χ² divergences and the optional standard tabular χ²(μ̃, μ̄)."""

    per_h: list[DivergenceEntry] = Field(..., description="Entries for stages 1..H")

    tabular_chi2: float | None = Field(None, description="Standard χ²(μ̃, μ̄) when computed")


class BoundInputs(BaseModel):
    """Inputs echoed with a bound evaluation."""

    K: int = Field(..., ge=1)

    H: int = Field(..., ge=1)

    d: int = Field(..., ge=1)

    delta: float = Field(..., gt=0.0, lt=1.0)

    C2_hat: float | None = Field(None)


class BoundReport(BaseModel):
    """Leading-order evaluation of a finite-sample error bound."""

    kind: Literal["variance_aware", "reward_free", "positivity"] = Field(..., description="Which bound")

    leading_term: float = Field(..., ge=0.0, description="O(K^-1/2) term")

    secondary_term: float = Field(..., ge=0.0, description="Explicit O(1/K) term (0 when none is displayed)")

    omitted_constant_note: str = Field(..., description="What the evaluation leaves out")

    inputs: BoundInputs = Field(..., description="Echo of the inputs")

    b0: float | None = Field(None, description="Diagnostic max_h √(ν̂_hᵀ Σ̂_h⁻² ν̂_h); enters no arithmetic")


class PositivityReport(BaseModel):
    """Minimum of the whitened cross quadratic form over the checked pairs."""

    min_value: float = Field(..., description="Smallest ∇f Σ̂⁻¹ ∇f'ᵀ seen")

    holds: bool = Field(..., description="min_value >= -tolerance")

    n_pairs_checked: int = Field(..., ge=1, description="Number of (s,a),(s',a') pairs checked per stage")


class CrossCovariance(ArrayModel):
    """Empirical Σ̂_{h1,h2} and the spectral norm of its whitened form."""

    h1: int = Field(..., ge=1)

    h2: int = Field(..., ge=1)

    sigma_h1h2: FloatArray = Field(..., description="Σ̂_{h1,h2} [d, d]")

    sigma_norm: float = Field(..., ge=0.0, description="‖Σ̂_{h1}^{-1/2} Σ̂_{h1,h2} Σ̂_{h2}^{-1/2}‖₂")


class ConfidenceInterval(BaseModel):
    """Bootstrap confidence interval CI(δ)."""

    lo: float

    hi: float

    delta: float = Field(..., gt=0.0, lt=1.0)

    k0: float = Field(..., gt=0.0)


class BootstrapResult(ArrayModel):
    """Replicate values and errors of a bootstrap run."""

    scheme: str = Field(..., description="Weighting scheme label")

    base_value: float = Field(..., description="v̂_π on the unweighted data")

    replicate_values: FloatArray = Field(..., description="v̂°_π for each kept replicate")

    errors: FloatArray = Field(..., description="replicate_values - base_value")

    k0: float = Field(..., gt=0.0, description="Limit-variance multiplier of the scheme")

    n_failed: int = Field(0, ge=0, description="Replicates excluded for solver failure")

    ci: ConfidenceInterval | None = Field(None, description="Interval, once computed")


class StudyRow(BaseModel):
    """One row of a study table."""

    K: int

    scheme: str | None = None

    delta: float | None = None

    mean_error: float

    mc_variance_scaled: float

    sigma2_oracle: float | None = None

    sigma2_plugin: float | None = None

    ks_statistic: float | None = None

    coverage: float | None = Field(None, ge=0.0, le=1.0)

    coverage_monotone: bool | None = Field(None, description="Coverage nonincreasing in δ for this K and scheme")

    variance_ratio: float | None = None

    bound_rate_variance_aware: float | None = Field(None, ge=0.0, le=1.0)

    bound_rate_reward_free: float | None = Field(None, ge=0.0, le=1.0)

    n_failed: int = 0

    runtime: float = 0.0


class StudyResult(BaseModel):
    """Rows of a study with the provenance needed to reproduce it."""

    schema_version: int = Field(default=1, description="Record schema version")

    study: str

    rows: list[StudyRow]

    provenance: dict[str, str]


class CommandOutput(BaseModel):
    """Summary of a finished subcommand: printed values and the files written."""

    subcommand: str

    summary: dict[str, float | int | str | None] = Field(default_factory=dict)

    files: list[str] = Field(default_factory=list)

    table: str | None = Field(None, description="Table text, when no output file was requested")
