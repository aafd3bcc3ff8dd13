"""Exception hierarchy shared by every layer."""


class ValidationError(ValueError):
    """Input data or configuration failed validation."""


class AlignmentError(ValidationError):
    """Series could not be placed on a common calendar."""


class ComputationError(RuntimeError):
    """A numerical step could not be carried out on otherwise valid data."""


class BacktestError(ComputationError):
    """The value recursion broke down (e.g. a non-positive step factor)."""
