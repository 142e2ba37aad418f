"""Monte-Carlo validation studies."""

from .studies import coverage_is_monotone, prepare, study_bounds, study_coverage, study_cramer_rao, study_normality

__all__ = ["coverage_is_monotone", "prepare", "study_normality", "study_coverage", "study_cramer_rao", "study_bounds"]
