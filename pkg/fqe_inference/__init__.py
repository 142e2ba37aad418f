"""fqe-inference - Fitted Q-Evaluation with bootstrap and plug-in variance inference."""

__version__ = "0.1.0"

from .main import main, parse_and_dispatch

__all__ = ["main", "parse_and_dispatch"]
