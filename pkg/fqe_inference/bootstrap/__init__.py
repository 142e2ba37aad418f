"""Bootstrap weighting schemes, replicates and confidence intervals."""

from .replicates import bootstrap_distribution, bootstrap_variance, confidence_interval
from .weights import k0, sample_weights

__all__ = ["sample_weights", "k0", "bootstrap_distribution", "confidence_interval", "bootstrap_variance"]
