"""Custom exception classes for the CAPFI toolkit."""

from typing import Optional


class CapfiError(Exception):
    """Base exception for the CAPFI toolkit."""

    pass


class ConfigError(CapfiError):
    """Exception raised for configuration-related errors."""

    pass


class ManifestError(CapfiError):
    """Exception raised when a manifest file cannot be read or parsed."""

    pass


class ValidationError(CapfiError):
    """Exception raised when a sample or manifest breaks an invariant."""

    def __init__(self, message: str, sample_id: Optional[str] = None, field: Optional[str] = None):
        self.sample_id = sample_id
        self.field = field
        prefix = ""
        if sample_id is not None:
            prefix = f"sample '{sample_id}'"
            if field is not None:
                prefix += f" field '{field}'"
            prefix += ": "
        super().__init__(f"{prefix}{message}")


class UnknownNotationError(CapfiError):
    """Exception raised for a context notation that is not defined."""

    def __init__(self, notation: str):
        self.notation = notation
        super().__init__(f"Unknown context notation: {notation}")


class GenerationError(CapfiError):
    """Exception raised for an infeasible synthetic generator spec."""

    pass


class EmptyBatchError(CapfiError):
    """Exception raised when a metric is requested on an empty batch."""

    pass


class MetricUndefinedError(CapfiError):
    """Exception raised when a metric has no value for the batch (e.g. single-class AUC)."""

    pass


class LayoutMismatchError(CapfiError):
    """Exception raised when an oracle expects a different feature layout."""

    pass


class OracleProtocolError(CapfiError):
    """Exception raised for external oracle transport or protocol failures."""

    pass


class TrainingError(CapfiError):
    """Exception raised when the builtin surrogate cannot be trained."""

    pass


class PermutationError(CapfiError):
    """Exception raised for invalid permutation plans or views."""

    pass


class EmptyContextError(CapfiError):
    """Exception raised when an analysis targets a context with no samples."""

    pass
