"""Exception types shared across the package."""


class FbmLabError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(FbmLabError, ValueError):
    """A parameter lies outside its admissible window."""


class GridDomainError(FbmLabError, ValueError):
    """Times or intervals outside the supported domain."""


class ResolutionError(FbmLabError):
    """A grid or convolution window is too coarse (or underflows) for the request."""


class PSDRepairError(FbmLabError):
    """Eigenvalue clipping would exceed the configured tolerance.

    Signals catastrophic cancellation in a covariance assembly; the caller
    should coarsen the grid or reduce the level count.
    """


class NonconvergenceError(FbmLabError):
    """Quadrature refinement failed to stabilize within the configured depth."""


class AdmissibilityError(FbmLabError):
    """The weighted L1 norm of a fractional derivative diverges under refinement."""


class RegularityError(FbmLabError):
    """A Holder-log regularity certificate fails on sampled pairs."""


class DivergenceError(FbmLabError):
    """Partial integrals grow without stabilizing."""
