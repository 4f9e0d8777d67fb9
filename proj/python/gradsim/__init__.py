"""Gradient-space similarity for bias-free ReLU networks."""

from ._core import *  # noqa: F401,F403
from ._core import NumericalError, UsageError  # noqa: F401

__version__ = "0.1.0"
