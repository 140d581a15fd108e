"""
Error types for rydberg_rbm

Argument and range problems raise the built-in ValueError; the types below
cover failures the CLI maps to dedicated exit codes.
"""


class RydbergRbmError(Exception):
    """Base class for all package-specific errors"""


class ResourceLimitError(RydbergRbmError, MemoryError):
    """A dense object would exceed the configured site cap or memory budget"""


class SingularityError(RydbergRbmError, ArithmeticError):
    """A closed-form expression diverges for the given arguments"""


class IntegrationError(RydbergRbmError, RuntimeError):
    """Time integration drifted beyond tolerance"""


class TrainingDivergedError(RydbergRbmError, RuntimeError):
    """
    Non-finite parameters appeared during training

    Attributes:
        epoch: Epoch in which the divergence was detected
        snapshot: Last finite parameter dict (weights, visible_bias, hidden_bias)
    """

    def __init__(self, message: str, epoch: int = -1, snapshot=None):
        super().__init__(message)
        self.epoch = epoch
        self.snapshot = snapshot


class EstimatorError(RydbergRbmError, RuntimeError):
    """A Monte Carlo estimate left its analytically allowed range"""


class ConfigError(RydbergRbmError, ValueError):
    """Invalid experiment configuration; message names the offending key"""


class ProvenanceError(RydbergRbmError):
    """Artifacts from different configurations were combined"""


class DegenerateGroundStateWarning(UserWarning):
    """The lowest eigenvalue is degenerate; a tie-break picked the returned vector"""
