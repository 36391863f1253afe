"""Exception hierarchy shared across the package."""


class AskpaintError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(AskpaintError, ValueError):
    """Bad runtime input: shapes, ranges, non-finite values, missing fields."""


class ConfigurationError(AskpaintError, ValueError):
    """Inconsistent or unsupported configuration (channel counts, sizes, ...)."""


class StateError(AskpaintError, RuntimeError):
    """Operation not legal in the current episode/session state."""


class GenerationError(AskpaintError, RuntimeError):
    """Synthetic scene generation could not satisfy its constraints."""


class CheckpointError(AskpaintError, RuntimeError):
    """Base class for checkpoint load failures."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint declares a format version this code does not support."""


class CheckpointCorruptError(CheckpointError):
    """Checkpoint file is truncated, unparseable, or fails integrity checks."""


class CheckpointShapeError(CheckpointError):
    """A stored array's shape disagrees with the model configuration."""
