"""Exception hierarchy shared by every module."""


class DisentError(Exception):
    """Base class for all errors raised by disentbench."""


class ArgumentError(DisentError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(ArgumentError):
    """A point lies at or outside the open support of a transform."""


class DataError(DisentError, ValueError):
    """Input data is malformed (non-finite values, mismatched rows, ...)."""


class DegenerateError(DisentError, ValueError):
    """A quantity is undefined for the given input (zero normalizer, ...)."""


class DegenerateLabelError(DegenerateError):
    """A classifier was asked to learn from a single class."""


class ConfigError(DisentError, ValueError):
    """A run configuration failed validation."""
