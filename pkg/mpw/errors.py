class MPWError(Exception):
    """Base class for every error raised by mpw."""


class ParameterError(MPWError, ValueError):
    pass


class NormalizationError(ParameterError):
    pass


class UsageError(MPWError, ValueError):
    pass


class IntegrityError(MPWError, RuntimeError):
    """A physical invariant failed; this signals an upstream bug, not bad input."""


class ResourceError(MPWError, MemoryError):
    pass


class SweepIOError(MPWError, OSError):
    def __init__(self, message: str, rows=None):
        super().__init__(message)
        self.rows = rows or []
