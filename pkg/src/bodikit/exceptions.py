"""Exception types shared across the toolkit."""


class BodikitError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(BodikitError, ValueError):
    """A shape, length, or index does not match the declared space."""


class UnsupportedSpaceError(BodikitError, ValueError):
    """An operation was applied to a space kind it is not defined for."""


class EnumerationTooLargeError(BodikitError, ValueError):
    """An exact enumeration was requested beyond the guarded size."""


class CoherenceUndefinedError(BodikitError, ValueError):
    """Dictionary coherence needs at least two rows."""


class IllConditionedKernelError(BodikitError, RuntimeError):
    """Kernel matrix stayed non-positive-definite after jitter escalation."""


class FitFailedError(BodikitError, RuntimeError):
    """Every hyperparameter optimization restart failed."""


class WcnfParseError(BodikitError, ValueError):
    """Malformed weighted-CNF text.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(BodikitError, ValueError):
    """Invalid experiment configuration.

    ``path`` is a dotted JSON path to the offending field, e.g.
    ``"local_search.max_iters"`` or ``""`` for document-level problems.
    """

    def __init__(self, message: str, path: str = ""):
        prefix = f"{path}: " if path else ""
        super().__init__(prefix + message)
        self.path = path


class ProblemFileNotFoundError(BodikitError, FileNotFoundError):
    """A problem definition referenced a file that does not exist."""
