"""Exception types shared across the package."""


class DesignPipelineError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDesignError(DesignPipelineError):
    """A design tree violates the grammar (arity, ordering, ranges, references)."""

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = tuple(violations or ())


class CatalogError(DesignPipelineError):
    """Catalog file is malformed, has duplicate ids, or a lookup failed."""


class SequenceParseError(DesignPipelineError):
    """A token sequence is not in the grammar's language.

    ``position`` is the 1-based index of the offending token; a sequence
    that ends prematurely reports the position one past its final token.
    """

    def __init__(self, message: str, position: int = 1):
        super().__init__(message)
        self.position = position


class ConfigError(DesignPipelineError):
    """A configuration file or value is invalid."""


class CheckpointError(DesignPipelineError):
    """A model checkpoint failed to load (magic, version, hash, truncation)."""


class DatasetError(DesignPipelineError):
    """A dataset is unusable, e.g. a split is missing one of the classes."""


class CalibrationError(DesignPipelineError):
    """No classification threshold attains the requested recall."""


class TrainingDivergedError(DesignPipelineError):
    """Training produced a non-finite loss."""
