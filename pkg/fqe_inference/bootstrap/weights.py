"""Episode-level bootstrap weights."""

import numpy as np

from ..errors import ConfigurationError, NumericError
from ..models.requests import WeightScheme


def _multipliers(scheme: WeightScheme, k: int, rng: np.random.Generator) -> np.ndarray:
    match scheme.distribution:
        case "exponential":
            return rng.exponential(1.0 / scheme.rate, size=k)
        case "gamma":
            return rng.gamma(scheme.shape, scheme.scale, size=k)
        case "uniform":
            return rng.uniform(scheme.low, scheme.high, size=k)
        case _:
            raise ConfigurationError(f"unknown multiplier distribution {scheme.distribution!r}")


def sample_weights(scheme: WeightScheme, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw W_1..W_K with Σ W_k = K.

    Vanilla draws multinomial(K; 1/K, ..., 1/K) counts. Multiplier draws
    u_k ~ U and returns K·u_k / Σ_j u_j; an all-zero draw is retried once.
    """
    if k < 1:
        raise ConfigurationError(f"K must be >= 1, got {k}")
    if scheme.kind == "vanilla":
        return rng.multinomial(k, np.full(k, 1.0 / k)).astype(np.float64)
    for _ in range(2):
        u = _multipliers(scheme, k, rng)
        total = u.sum()
        if total > 0.0:
            return k * u / total
    raise NumericError(f"{scheme.label}: multiplier draws summed to zero twice")


def k0(scheme: WeightScheme) -> float:
    """Limit-variance multiplier: 1 for vanilla, η²/m² for a multiplier U."""
    if scheme.kind == "vanilla":
        return 1.0
    return scheme.variance / scheme.mean**2
