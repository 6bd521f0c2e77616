"""Capacity lower bounds for the noncentral chi channel and soliton-link validation."""

__version__ = "0.1.0"

from .channel import ChannelSpec  # noqa: E402
from .errors import (  # noqa: E402
    ConvergenceError,
    DomainError,
    InteractionBudgetError,
    NoEigenvalueError,
    StabilityWarning,
)
from .fiberlink import FiberSystem  # noqa: E402
from .inputs import InputSpec  # noqa: E402

__all__ = [
    "ChannelSpec",
    "ConvergenceError",
    "DomainError",
    "FiberSystem",
    "InputSpec",
    "InteractionBudgetError",
    "NoEigenvalueError",
    "StabilityWarning",
    "__version__",
]
