"""Truncated integer multiplication: low, high and full products via real cyclic convolution."""

from .convolution import Backend
from .errors import (ConvolutionPrecisionFailure, InputOutOfRange, NoValidParams,
                     TruncMulError)
from .products import (Mode, Params, full_product, high_product, low_product, make_params,
                       product, select_params)

__version__ = "0.1.0"


def mul(u: int, v: int, n: int | None = None, backend: Backend | str = Backend.FFT) -> int:
    """``u * v`` for operands of at most ``n`` bits (default: the longer operand)."""
    n = n or max(u.bit_length(), v.bit_length(), 1)
    return full_product(u, v, select_params(n, Mode.FULL, backend))


def mullo(u: int, v: int, n: int, backend: Backend | str = Backend.FFT) -> int:
    """``u * v mod 2^n``."""
    return low_product(u, v, select_params(n, Mode.LOW, backend))


def mulhi(u: int, v: int, n: int, backend: Backend | str = Backend.FFT) -> int:
    """A ``w`` with ``|u v - 2^n w| < 2^n``."""
    return high_product(u, v, select_params(n, Mode.HIGH, backend))


__all__ = [
    "Backend", "Mode", "Params", "TruncMulError", "NoValidParams", "InputOutOfRange",
    "ConvolutionPrecisionFailure", "make_params", "select_params", "product",
    "full_product", "low_product", "high_product", "mul", "mullo", "mulhi",
]
