"""Exception hierarchy shared by all subpackages."""


class FracSolveError(Exception):
    """Base class for every error raised by this package."""


class ConvergenceError(FracSolveError):
    """The Remez exchange did not level the error within the iteration cap."""

    def __init__(self, message, spread=None):
        super().__init__(message)
        self.spread = spread


class PrecisionExhaustedError(FracSolveError):
    """Working precision is too low; retry with ``suggested_precision`` bits."""

    def __init__(self, message, suggested_precision=None):
        super().__init__(message)
        self.suggested_precision = suggested_precision


class CertificationError(FracSolveError):
    """An approximant or derived form failed one of its structural checks."""


class CacheMissError(FracSolveError, LookupError):
    pass


class CacheCorruptError(FracSolveError):
    pass


class ShiftedSolveError(FracSolveError):
    """An inner shifted solve stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, shift_index=None):
        super().__init__(message)
        self.residual = residual
        self.shift_index = shift_index
