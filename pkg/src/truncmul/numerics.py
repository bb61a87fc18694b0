"""Exact dyadic fixed-point arithmetic.

A fixed-point real of precision ``p`` and exponent ``e`` is the number
``2**e * a / 2**p`` where ``a`` is an integer with ``|a| <= 2**p``; the
mantissa ``a`` is all that the algorithms manipulate, but the exponent is
carried along so that scale mistakes fail loudly instead of silently.

All rounding in the package goes through :func:`round_shift`, which rounds
to nearest with ties to even.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

# Extra working bits used by map evaluations and series tables on the
# exact backend.
GUARD_BITS = 16


def lg(x: int) -> int:
    """Return ``ceil(log2(x))`` for a positive integer ``x``."""
    if x < 1:
        raise ValueError("lg is defined for x >= 1")
    return (x - 1).bit_length()


def round_shift(a: int, s: int) -> int:
    """Round ``a / 2**s`` to the nearest integer, ties to even.

    A negative ``s`` multiplies exactly.
    """
    if s <= 0:
        return a << -s
    q = a >> s
    r = a - (q << s)
    half = 1 << (s - 1)
    if r > half or (r == half and q & 1):
        q += 1
    return q


def round_div(a: int, d: int) -> int:
    """Round ``a / d`` to the nearest integer, ties to even (``d != 0``)."""
    if d < 0:
        a, d = -a, -d
    q, r = divmod(a, d)
    twice = 2 * r
    if twice > d or (twice == d and q & 1):
        q += 1
    return q


@dataclass(frozen=True)
class DyadicRational:
    """The exact value ``numerator / 2**shift``, kept in canonical form."""

    numerator: int
    shift: int = 0

    def __post_init__(self):
        num, sh = self.numerator, self.shift
        if sh < 0:
            num, sh = num << -sh, 0
        if num == 0:
            sh = 0
        elif sh > 0:
            tz = (num & -num).bit_length() - 1
            drop = min(tz, sh)
            num >>= drop
            sh -= drop
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "shift", sh)

    @classmethod
    def coerce(cls, x) -> "DyadicRational":
        if isinstance(x, DyadicRational):
            return x
        if isinstance(x, FixedReal):
            return x.to_dyadic()
        if isinstance(x, int):
            return cls(x)
        if isinstance(x, float):
            return cls.coerce(Fraction(x))
        if isinstance(x, Rational):
            den = x.denominator
            if den & (den - 1):
                raise ValueError(f"{x} is not dyadic")
            return cls(x.numerator, den.bit_length() - 1)
        raise TypeError(f"cannot interpret {type(x).__name__} as dyadic")

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.shift)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def _align(self, other) -> tuple[int, int, int]:
        other = DyadicRational.coerce(other)
        s = max(self.shift, other.shift)
        return (self.numerator << (s - self.shift),
                other.numerator << (s - other.shift), s)

    def __add__(self, other):
        a, b, s = self._align(other)
        return DyadicRational(a + b, s)

    __radd__ = __add__

    def __sub__(self, other):
        a, b, s = self._align(other)
        return DyadicRational(a - b, s)

    def __rsub__(self, other):
        a, b, s = self._align(other)
        return DyadicRational(b - a, s)

    def __mul__(self, other):
        other = DyadicRational.coerce(other)
        return DyadicRational(self.numerator * other.numerator,
                              self.shift + other.shift)

    __rmul__ = __mul__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.shift)

    def __abs__(self):
        return DyadicRational(abs(self.numerator), self.shift)

    def scale2(self, k: int) -> "DyadicRational":
        """Multiply by ``2**k``."""
        return DyadicRational(self.numerator, self.shift - k)

    def __eq__(self, other):
        try:
            a, b, _ = self._align(other)
        except (TypeError, ValueError):
            return NotImplemented
        return a == b

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        a, b, _ = self._align(other)
        return a < b

    def __le__(self, other):
        a, b, _ = self._align(other)
        return a <= b

    def __gt__(self, other):
        a, b, _ = self._align(other)
        return a > b

    def __ge__(self, other):
        a, b, _ = self._align(other)
        return a >= b


@dataclass(frozen=True)
class FixedReal:
    """An element of ``2**exponent * R_precision``."""

    mantissa: int
    precision: int
    exponent: int = 0

    def __post_init__(self):
        if self.precision < 1:
            raise ValueError("precision must be >= 1")
        if abs(self.mantissa) > (1 << self.precision):
            raise OverflowError(
                f"mantissa {self.mantissa} exceeds 2**{self.precision}")

    @property
    def ulp(self) -> DyadicRational:
        return DyadicRational(1, self.precision - self.exponent)

    def to_dyadic(self) -> DyadicRational:
        return DyadicRational(self.mantissa, self.precision - self.exponent)

    def to_fraction(self) -> Fraction:
        return self.to_dyadic().to_fraction()

    def __float__(self) -> float:
        return float(self.to_fraction())


def round_to_fixed(x, p: int, e: int = 0) -> FixedReal:
    """Round ``x`` to the nearest element of ``2**e * R_p`` (ties to even).

    ``x`` may be a :class:`DyadicRational`, an int, a dyadic
    :class:`~fractions.Fraction` or a :class:`FixedReal`.
    """
    d = DyadicRational.coerce(x)
    # mantissa = x * 2**(p - e)
    m = round_shift(d.numerator, d.shift - (p - e))
    if abs(m) > (1 << p):
        raise OverflowError(f"{d.to_fraction()} does not fit 2**{e} * R_{p}")
    return FixedReal(m, p, e)


def round_nearest_int(x) -> int:
    """Nearest integer to ``x``, ties to even."""
    if isinstance(x, int):
        return x
    if isinstance(x, Rational) and not isinstance(x, int):
        return round(Fraction(x))
    d = DyadicRational.coerce(x)
    return round_shift(d.numerator, d.shift)
