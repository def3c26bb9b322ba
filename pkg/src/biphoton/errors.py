"""Exception hierarchy shared by all modules."""


class BiphotonError(Exception):
    """Base class for library errors."""


class ConfigError(BiphotonError, ValueError):
    """Invalid configuration value; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class SamplingViolation(BiphotonError):
    """Fresnel kernel would be aliased on the requested grids.

    ``max_spacing`` is the largest input spacing that passes the check and
    ``min_samples`` the matching sample count for the same physical extent.
    """

    def __init__(self, message: str, max_spacing: float | None = None,
                 min_samples: int | None = None):
        self.max_spacing = max_spacing
        self.min_samples = min_samples
        super().__init__(message)


class InvalidDistance(BiphotonError, ValueError):
    pass


class GridMismatch(BiphotonError, ValueError):
    pass


class DimensionMismatch(BiphotonError, ValueError):
    pass


class QuadratureFailure(BiphotonError):
    pass


class GeometryError(BiphotonError, ValueError):
    pass


class AllZeroSpectrum(BiphotonError, ValueError):
    pass


class InvalidModel(BiphotonError, ValueError):
    pass


class InsufficientSamples(BiphotonError, ValueError):
    pass
