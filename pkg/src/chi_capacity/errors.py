"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(RuntimeError):
    """A numerical scheme failed to reach the requested tolerance."""


class InteractionBudgetError(ValueError):
    """Pulse separation too small for the requested amplitudes."""


class NoEigenvalueError(RuntimeError):
    """No discrete eigenvalue was found in a waveform window."""


class StabilityWarning(RuntimeWarning):
    """Split-step nonlinear phase per step exceeds the accuracy budget."""
