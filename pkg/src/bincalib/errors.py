"""Exception and warning types shared across the package."""


class BincalibError(Exception):
    """Base class for package errors."""


class InputError(BincalibError):
    """Invalid user input: bad shapes, domain violations, degenerate data."""


class NumericalError(BincalibError):
    """Numerical failure (e.g. Cholesky breakdown after jitter escalation)."""

    def __init__(self, message, jitter=None):
        super().__init__(message)
        self.jitter = jitter


class OptimizationError(BincalibError):
    """All optimizer starts failed; carries the per-start traces."""

    def __init__(self, message, traces=None):
        super().__init__(message)
        self.traces = traces or []


class ConvergenceWarning(UserWarning):
    """Solver hit its iteration cap before meeting the tolerance."""


class ExtrapolationWarning(UserWarning):
    """Prediction requested outside the training domain."""


class DegenerateFoldWarning(UserWarning):
    """A cross-validation fold was skipped (single-class training split)."""


class BoundaryWarning(UserWarning):
    """Estimate sits on the parameter-box boundary; asymptotics assume an interior optimum."""


class SampleSizeWarning(UserWarning):
    """Computer-experiment sample is not larger than the physical sample."""
