"""Exception types raised by the sensing pipeline."""


class SoftJigError(Exception):
    """Base class for all package errors."""


class DomainError(SoftJigError, ValueError):
    """An argument lies outside the domain of an operation."""


class ProjectionError(SoftJigError):
    """A point cannot be projected (at or behind the camera)."""


class TriangulationError(SoftJigError):
    """A stereo pair has non-positive disparity."""


class DegenerateConfigurationError(SoftJigError):
    """Input geometry is rank deficient (collinear, duplicated, flat sweep)."""


class InsufficientDataError(SoftJigError):
    """Too few points survive to produce an estimate."""


class FrameMismatchError(SoftJigError):
    """A point cloud is expressed in a different frame than expected."""


class ConfigError(SoftJigError):
    """Configuration failed to parse or validate."""
