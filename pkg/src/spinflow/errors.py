"""Exception types raised across the package."""


class SpinflowError(Exception):
    """Base class for all package errors."""


class GridTooSmall(SpinflowError, ValueError):
    pass


class GridMismatch(SpinflowError, ValueError):
    pass


class DimensionError(SpinflowError, ValueError):
    pass


class AntipodalPoints(SpinflowError, ValueError):
    """No unique minimizing geodesic between the two points."""


class ZeroVector(SpinflowError, ValueError):
    pass


class NotDivergenceFree(SpinflowError, ValueError):
    pass


class BoundaryFluxNonzero(SpinflowError, ValueError):
    pass


class BlowUp(SpinflowError, RuntimeError):
    """The discrete solution left the sphere or became non-finite."""


class TooManyModes(SpinflowError, ValueError):
    pass


class TooFewSnapshots(SpinflowError, ValueError):
    pass


class DistanceTooLarge(SpinflowError, ValueError):
    """Two fields are too far apart for the uniqueness functional."""


class ConfigError(SpinflowError, ValueError):
    pass


class CFLViolation(ConfigError):
    pass
