"""Exception types shared across the package."""


class IsenBgkError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(IsenBgkError):
    """Invalid or unknown configuration entry."""


class GridResolutionError(IsenBgkError):
    """Velocity grid too coarse to represent the projection basis."""


class DensityFloorError(IsenBgkError):
    """Cell density fell below the vacuum floor."""


class EnvelopeError(IsenBgkError):
    """Solution left the perturbative envelope around global equilibrium."""


class CflError(IsenBgkError):
    """Time step violates the transport stability bound."""


class CorrectionError(IsenBgkError):
    """Moment-matching correction of the discrete equilibrium failed."""
