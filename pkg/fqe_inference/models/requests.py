"""Option models for estimation, bootstrap and study runs."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import numerics
from .mdp import Policy, TabularMdp


class SolverConfig(BaseModel):
    """Settings for the per-stage least-squares solver."""

    model_config = ConfigDict(frozen=True)

    method: Literal["auto", "normal_equations", "gauss_newton", "gradient_descent"] = Field(
        "auto",
        description="'auto' picks normal equations for linear/tabular families and Gauss-Newton otherwise",
    )

    max_iters: int = Field(default_factory=lambda: numerics.max_iters, ge=1, description="Iteration cap")

    grad_tol: float = Field(
        default_factory=lambda: numerics.grad_tol, gt=0.0, description="Stop when ‖∇ objective‖ falls below this"
    )

    damping_init: float = Field(1e-3, gt=0.0, description="Initial Levenberg damping")

    damping_max: float = Field(1e10, gt=0.0, description="Damping cap before falling back to gradient descent")

    max_halvings: int = Field(40, ge=1, description="Step halvings allowed per line search")

    step_size: float | None = Field(
        None,
        gt=0.0,
        description="Gradient-descent step; None starts from 1 and backtracks",
    )


class FqeConfig(BaseModel):
    """Options for one FQE run."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(0.0, ge=0.0, alias="lambda", description="Regularization weight λ")

    regularizer: Literal["none", "half_squared_norm"] = Field(
        "half_squared_norm", description="ρ(θ); 'none' ignores lambda"
    )

    solver: SolverConfig = Field(default_factory=SolverConfig, description="Stage solver settings")

    init: Literal["zeros", "warm_start"] = Field(
        "warm_start", description="Stage start point: zeros or the already fitted θ̂_{h+1}"
    )

    init_scale: float = Field(
        0.1,
        gt=0.0,
        description="Scale of the seeded perturbation used when a nonlinear fit would start at a stationary point",
    )

    init_seed: int = Field(0, ge=0, description="Seed of that perturbation")

    theta_max: float = Field(default_factory=lambda: numerics.theta_max, gt=0.0, description="Θ box half-width")

    project_to_box: bool = Field(False, description="Clip iterative-solver iterates to the Θ box")

    @property
    def effective_lambda(self) -> float:
        return 0.0 if self.regularizer == "none" else self.lambda_


class WeightScheme(BaseModel):
    """Episode-level bootstrap weighting: vanilla (multinomial) or multiplier (self-normalized U)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["vanilla", "multiplier"] = Field("vanilla", description="Weighting scheme")

    distribution: Literal["exponential", "gamma", "uniform"] | None = Field(
        None, description="Law of the multiplier U (multiplier scheme only)"
    )

    rate: float = Field(1.0, gt=0.0, description="Exponential rate")

    shape: float = Field(1.0, gt=0.0, description="Gamma shape")

    scale: float = Field(1.0, gt=0.0, description="Gamma scale")

    low: float = Field(0.5, gt=0.0, description="Uniform lower end (must be > 0)")

    high: float = Field(1.5, gt=0.0, description="Uniform upper end")

    @model_validator(mode="after")
    def _validate(self) -> "WeightScheme":
        if self.kind == "multiplier" and self.distribution is None:
            raise ValueError("multiplier scheme needs a distribution")
        if self.distribution == "uniform" and not self.low < self.high:
            raise ValueError("uniform multiplier needs 0 < low < high")
        return self

    @property
    def mean(self) -> float:
        """Analytic mean m of U (1 for the vanilla scheme)."""
        match self.distribution if self.kind == "multiplier" else None:
            case "exponential":
                return 1.0 / self.rate
            case "gamma":
                return self.shape * self.scale
            case "uniform":
                return 0.5 * (self.low + self.high)
            case _:
                return 1.0

    @property
    def variance(self) -> float:
        """Analytic variance η² of U (1 for the vanilla scheme)."""
        match self.distribution if self.kind == "multiplier" else None:
            case "exponential":
                return 1.0 / self.rate**2
            case "gamma":
                return self.shape * self.scale**2
            case "uniform":
                return (self.high - self.low) ** 2 / 12.0
            case _:
                return 1.0

    @property
    def label(self) -> str:
        match self.distribution if self.kind == "multiplier" else None:
            case "exponential":
                return f"multiplier-exponential({self.rate:g})"
            case "gamma":
                return f"multiplier-gamma({self.shape:g},{self.scale:g})"
            case "uniform":
                return f"multiplier-uniform({self.low:g},{self.high:g})"
            case _:
                return "vanilla"


class StudyConfig(BaseModel):
    """Monte-Carlo study definition."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    instance: Literal["two_state", "four_state"] | None = Field(
        "two_state", description="Canonical instance; None uses mdp/behavior/target"
    )

    mdp: TabularMdp | None = Field(None, description="Explicit MDP")

    behavior: Policy | None = Field(None, description="Explicit behavior policy")

    target: Policy | None = Field(None, description="Explicit target policy")

    family: Literal["tabular", "linear"] = Field("tabular", description="Approximator family")

    fqe: FqeConfig = Field(default_factory=FqeConfig, description="FQE options")

    k_grid: list[int] = Field(default_factory=lambda: [200, 800], min_length=1, description="Episode counts K")

    replications: int = Field(1000, ge=100, description="Independent datasets M per K")

    bootstrap_reps: int = Field(200, ge=2, description="Bootstrap replicates B per dataset")

    deltas: list[float] = Field(default_factory=lambda: [0.1], min_length=1, description="CI / bound levels δ")

    schemes: list[WeightScheme] = Field(
        default_factory=lambda: [WeightScheme()], min_length=1, description="Bootstrap schemes (coverage study)"
    )

    seed: int = Field(..., ge=0, description="Master seed")

    nu_mode: Literal["exact_mdp", "rollout"] = Field("exact_mdp", description="How ν_h is computed")

    rollout_episodes: int = Field(10_000, ge=1, description="Target-policy episodes for rollout ν_h")

    sigma_mode: Literal["oracle", "plugin"] = Field(
        "oracle", description="Standardize by σ at θ* (oracle) or by the per-dataset plug-in σ̂"
    )

    @model_validator(mode="after")
    def _validate(self) -> "StudyConfig":
        if any(k < 1 for k in self.k_grid):
            raise ValueError("every K must be positive")
        if any(b <= a for a, b in zip(self.k_grid, self.k_grid[1:], strict=False)):
            raise ValueError("k_grid must be strictly increasing")
        if any(not 0.0 < d < 1.0 for d in self.deltas):
            raise ValueError("deltas must lie in (0, 1)")
        if self.instance is None and (self.mdp is None or self.behavior is None or self.target is None):
            raise ValueError("without a canonical instance, mdp, behavior and target are required")
        return self


STOCHASTIC_SUBCOMMANDS = frozenset(
    {"gen-data", "bootstrap-ci", "study-normality", "study-coverage", "study-cr", "study-bounds", "grad-check"}
)


class RunConfig(BaseModel):
    """Resolved command-line options for one subcommand."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    subcommand: str = Field(..., description="Subcommand name")

    # Inputs
    instance: Literal["two_state", "four_state"] | None = Field(None, description="Canonical instance")

    mdp_path: str | None = Field(None, description="MDP file")

    behavior_path: str | None = Field(None, description="Behavior policy file")

    target_path: str | None = Field(None, description="Target policy file")

    features_path: str | None = Field(None, description="Feature map file (one-hot features when omitted)")

    dataset_path: str | None = Field(None, description="Dataset file")

    estimate_path: str | None = Field(None, description="FqeEstimate file to reuse instead of refitting")

    study_config_path: str | None = Field(None, description="StudyConfig JSON file")

    # Outputs
    output: str | None = Field(None, description="Output file or directory")

    values_out: str | None = Field(None, description="Values file for bootstrap errors")

    # Data generation
    episodes: int | None = Field(None, ge=1, description="Episodes K to generate")

    # Estimator
    family: Literal["tabular", "linear", "smooth_net"] = Field("tabular", description="Approximator family")

    hidden_width: int = Field(4, ge=1, description="smooth_net hidden width")

    feature_dim: int = Field(4, ge=1, description="Feature dimension for grad-check trial points")

    lambda_: float = Field(0.0, ge=0.0, alias="lambda", description="Regularization weight λ")

    regularizer: Literal["none", "half_squared_norm"] = Field("half_squared_norm", description="ρ(θ)")

    solver: Literal["auto", "normal_equations", "gauss_newton", "gradient_descent"] = Field(
        "auto", description="Stage solver"
    )

    max_iters: int = Field(default_factory=lambda: numerics.max_iters, ge=1, description="Iteration cap")

    grad_tol: float = Field(default_factory=lambda: numerics.grad_tol, gt=0.0, description="Gradient tolerance")

    init: Literal["zeros", "warm_start"] = Field("warm_start", description="Stage start point")

    # Inference
    nu_mode: Literal["exact_mdp", "rollout"] = Field("exact_mdp", description="How ν_h is computed")

    rollout_episodes: int = Field(10_000, ge=1, description="Target-policy episodes for rollout ν_h")

    jitter: bool = Field(False, description="Allow ridge jitter on ill-conditioned Σ̂_h")

    n_pairs: int | None = Field(None, ge=1, description="Pairs sampled by the positivity check (all when omitted)")

    deltas: list[float] = Field(default_factory=lambda: [0.1], min_length=1, description="Levels δ")

    # Bootstrap
    bootstrap_reps: int = Field(200, ge=1, description="Bootstrap replicates B")

    schemes: list[WeightScheme] = Field(default_factory=lambda: [WeightScheme()], min_length=1, description="Schemes")

    # Studies
    k_grid: list[int] = Field(default_factory=lambda: [200, 800], min_length=1, description="Episode counts K")

    replications: int = Field(1000, ge=100, description="Datasets M per K")

    sigma_mode: Literal["oracle", "plugin"] = Field("oracle", description="Standardization of study errors")

    # Diagnostics
    trials: int = Field(100, ge=1, description="grad-check trial points")

    seed: int | None = Field(None, ge=0, description="Seed for stochastic subcommands")

    @model_validator(mode="after")
    def _validate(self) -> "RunConfig":
        if any(not 0.0 < d < 1.0 for d in self.deltas):
            raise ValueError("deltas must lie in (0, 1)")
        needs_seed = self.subcommand in STOCHASTIC_SUBCOMMANDS or self.nu_mode == "rollout"
        if needs_seed and self.seed is None and self.study_config_path is None:
            raise ValueError(f"{self.subcommand} needs --seed")
        return self

    def fqe_config(self) -> FqeConfig:
        return FqeConfig(
            lambda_=self.lambda_,
            regularizer=self.regularizer,
            solver=SolverConfig(method=self.solver, max_iters=self.max_iters, grad_tol=self.grad_tol),
            init=self.init,
        )
