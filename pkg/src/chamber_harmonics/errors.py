"""Exception hierarchy shared by all chamber_harmonics modules."""


class ChamberError(Exception):
    """Base class for every error raised by the package."""


class GeometryError(ChamberError):
    pass


class DimensionError(ChamberError):
    pass


class TruncationError(ChamberError):
    """Retained modes do not reach far enough to certify a count."""


class AmbiguousThreshold(ChamberError):
    pass


class RangeError(ChamberError):
    """An exponential factor would overflow double precision."""


class DegenerateSlice(ChamberError):
    pass


class InfiniteEnergy(ChamberError):
    """An energy integral requested toward an end where it diverges."""


class ConvergenceError(ChamberError):
    def __init__(self, message, observed=None):
        super().__init__(message)
        self.observed = observed


class ContractionFailure(ChamberError):
    def __init__(self, message, norm=None):
        super().__init__(message)
        self.norm = norm


class DependenceError(ChamberError):
    pass


class SolverError(ChamberError):
    pass


class ResourceError(ChamberError):
    pass


class ValidationError(ChamberError):
    """Invalid run configuration; ``line`` points into the config file when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ThresholdError(ChamberError):
    """A frequency threshold that is not an eigenvalue of its section."""
