"""Exception types raised across the package."""


class LiequantError(Exception):
    """Base class for library errors."""


class SpecMismatchError(LiequantError):
    """Objects built for different groups or cutoffs were combined."""


class DomainError(LiequantError):
    """A map was evaluated outside its domain (e.g. log beyond the injectivity radius)."""


class ResourceError(LiequantError):
    """A requested discretization exceeds the memory budget."""


class AccuracyError(LiequantError):
    """A quadrature is too coarse for the requested exact computation."""


class ResolutionError(LiequantError):
    """A grid does not resolve the support of a mollifier."""


class InsufficientDataError(LiequantError):
    """Too few levels or cutoffs for a fit or stabilization diagnostic."""


class InvalidFamilyError(LiequantError):
    """A difference family or symbol family request is invalid."""


class ConfigError(LiequantError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class StageError(LiequantError):
    """A pipeline stage failed; the message names the stage."""
