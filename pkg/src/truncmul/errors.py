"""Exception types raised across the package."""


class TruncMulError(Exception):
    pass


class PlanMismatch(TruncMulError, ValueError):
    """Convolution operands do not match the plan (length, precision, exponent)."""


class PrecisionUnsupported(TruncMulError, ValueError):
    """The float backend cannot represent the requested precision."""


class UnsupportedLength(TruncMulError, ValueError):
    """Transform length is not smooth over {2, 3, 5, 7} or otherwise out of range."""


class ContextMismatch(TruncMulError, ValueError):
    """A polynomial was handed to a map built for different (b, N, p)."""


class NoValidParams(TruncMulError, ValueError):
    pass


class InputOutOfRange(TruncMulError, ValueError):
    pass


class DegreeTooLarge(TruncMulError, ValueError):
    pass


class ConvolutionPrecisionFailure(TruncMulError, ArithmeticError):
    """A value that must be an integer came back too far from one.

    Raised when the rounding tripwire trips; it signals that the chosen
    chunk size is too aggressive for the convolution's accuracy.
    """

    def __init__(self, distance: float, threshold: float):
        super().__init__(
            f"coefficient lies {distance:.4f} from the nearest integer "
            f"(tripwire {threshold})"
        )
        self.distance = distance
        self.threshold = threshold
