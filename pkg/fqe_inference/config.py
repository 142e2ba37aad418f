"""Configuration management for fqe-inference."""

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    # Runtime Configuration
    threads: int = Field(default=1, ge=1, le=256, description="Worker threads for replicates and studies")

    # Output Configuration
    output_dir: str = Field(default="./runs", description="Default directory for study tables")

    # Logging Configuration
    log_level: str = Field(default="INFO", description="Logging level")

    model_config = {"env_prefix": "FQE_", "case_sensitive": False}


class NumericDefaults(BaseModel):
    """Fixed numerical tolerances; per-run overrides go through the option models and CLI flags."""

    model_config = ConfigDict(frozen=True)

    # Solver
    theta_max: float = Field(default=1e6, gt=0.0, description="Half-width of the parameter box Θ = [-θ_max, θ_max]^d")

    grad_tol: float = Field(default=1e-9, gt=0.0, description="Objective gradient norm at which a stage fit stops")

    max_iters: int = Field(default=5000, ge=1, description="Iteration cap for the iterative stage solvers")

    # Inference
    condition_limit: float = Field(
        default=1e12,
        gt=1.0,
        description="Condition number above which a Σ̂_h is treated as numerically singular",
    )

    jitter_scale: float = Field(default=1e-8, gt=0.0, description="ε in the ridge jitter ε·tr(Σ̂)/d·I")

    positivity_tol: float = Field(default=1e-10, ge=0.0, description="Slack allowed when checking positivity")

    # Bootstrap / Studies
    max_failure_fraction: float = Field(
        default=0.10,
        ge=0.0,
        le=1.0,
        description="Largest fraction of failed replicates tolerated before a run is aborted",
    )


# Global settings instance
settings = Settings()

numerics = NumericDefaults()
