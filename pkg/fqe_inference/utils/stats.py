"""Summary statistics for bootstrap and Monte-Carlo output."""

import math

import numpy as np
from scipy import stats

from ..errors import ConfigurationError

# Guards ceil(p·B) against products like 0.95 * 20 = 19.000000000000004.
_QUANTILE_EPS = 1e-9


def ks_statistic(samples: np.ndarray, reference: str = "standard_normal") -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``samples`` and the reference CDF.

    Args:
        samples: At least two finite values.
        reference: Only ``standard_normal`` is supported.

    Returns:
        sup_t |F_n(t) − Φ(t)|.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 2:
        raise ConfigurationError(f"ks_statistic needs at least 2 samples, got {samples.size}")
    if reference != "standard_normal":
        raise ConfigurationError(f"unsupported reference distribution {reference!r}")
    return float(stats.kstest(samples, "norm").statistic)


def lower_quantile(values: np.ndarray, p: float) -> float:
    """inf{t : fraction of values ≤ t is at least p} (left-continuous, no interpolation)."""
    if not 0.0 < p <= 1.0:
        raise ConfigurationError(f"quantile level must lie in (0, 1], got {p}")
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    if ordered.size == 0:
        raise ConfigurationError("quantile of an empty sample")
    index = math.ceil(p * ordered.size - _QUANTILE_EPS) - 1
    return float(ordered[min(max(index, 0), ordered.size - 1)])


def sample_variance(values: np.ndarray) -> float:
    """Unbiased sample variance (0 for fewer than two values)."""
    values = np.asarray(values, dtype=np.float64)
    return float(np.var(values, ddof=1)) if values.size > 1 else 0.0
