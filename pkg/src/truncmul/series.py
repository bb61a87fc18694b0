"""Coefficients of the four substitution series.

``beta(z) = z (1 - 2^-b z)^(-1/N)`` and ``delta(z) = z (1 - 2^-b z)^(1/N)``
come from the binomial theorem; ``alpha`` and ``gamma`` are their formal
compositional inverses, with coefficients given by Lagrange inversion.  For
each family the ``k``-th power expands as ``z^k * sum_r c[r, k] z^r`` with

* alpha: ``c[r,k] = k/(rN) * C((k+r)/N - 1, r-1) * (-2^-b)^r``
* beta:  ``c[r,k] = C(-k/N, r) * (-2^-b)^r``
* gamma: ``c[r,k] = -k/(rN) * C(-(k+r)/N - 1, r-1) * (-2^-b)^r``
* delta: ``c[r,k] = C(k/N, r) * (-2^-b)^r``

Clearing denominators turns every coefficient into ``num / (r! N^r)``
times ``2^(-rb)`` with an integer ``num``; that form is used everywhere so the
exact tables are rounded exactly once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .numerics import round_div


class Family(str, enum.Enum):
    ALPHA = "alpha"
    BETA = "beta"
    GAMMA = "gamma"
    DELTA = "delta"


@dataclass(frozen=True)
class SeriesFamily:
    tag: Family
    b: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "tag", Family(self.tag))
        if self.b < 1 or self.N < 1:
            raise ValueError("b and N must be positive")

    @property
    def in_running_hypothesis(self) -> bool:
        """True when ``b >= 4`` and ``N >= 3`` (the regime the bounds cover)."""
        return self.b >= 4 and self.N >= 3


def _numerator(tag: Family, N: int, r: int, k: int) -> int:
    """Integer ``num`` with ``c[r,k] = num / (r! N^r) * 2^(-rb)``."""
    if r == 0:
        return 1
    num = 1
    if tag is Family.ALPHA:
        num = k
        for j in range(1, r):
            num *= k + r - j * N
        return -num if r & 1 else num
    if tag is Family.BETA:
        for j in range(r):
            num *= k + j * N
        return num
    if tag is Family.GAMMA:
        num = k
        for j in range(1, r):
            num *= k + r + j * N
        return num
    for j in range(r):
        num *= k - j * N
    return -num if r & 1 else num


def series_coeff(family: SeriesFamily, r: int, k: int) -> Fraction:
    """Exact coefficient ``c[r, k]`` of ``family``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    num = _numerator(family.tag, family.N, r, k)
    return Fraction(num, factorial(r) * family.N ** r * (1 << (r * family.b)))


def series_coeff_fixed(family: SeriesFamily, r: int, k: int, precision: int) -> int:
    """``c[r, k] * 2**precision`` rounded to the nearest integer."""
    num = _numerator(family.tag, family.N, r, k)
    den = factorial(r) * family.N ** r
    shift = precision - r * family.b
    if shift >= 0:
        return round_div(num << shift, den)
    return round_div(num, den << -shift)


def coeff_table(family: SeriesFamily, lam: int, precision: int | None = None):
    """Coefficients ``c[r, k]`` for ``0 <= r < lam`` and ``0 <= k < N``.

    With ``precision=None`` a ``(lam, N)`` float64 array is returned;
    otherwise a tuple of rows of integers scaled by ``2**precision``.
    """
    if lam < 1:
        raise ValueError("lam must be >= 1")
    if precision is None:
        return _float_table(family, lam).copy()
    return _fixed_table(family, lam, precision)


@lru_cache(maxsize=64)
def _fixed_table(family: SeriesFamily, lam: int, precision: int):
    N = family.N
    return tuple(
        tuple(series_coeff_fixed(family, r, k, precision) for k in range(N))
        for r in range(lam)
    )


@lru_cache(maxsize=64)
def _float_table(family: SeriesFamily, lam: int) -> np.ndarray:
    N, b, tag = family.N, family.b, family.tag
    k = np.arange(N, dtype=np.float64)
    out = np.empty((lam, N))
    out[0] = 1.0
    for r in range(1, lam):
        if tag is Family.ALPHA:
            v = k / N
            for j in range(1, r):
                v = v * ((k + r - j * N) / N)
            sign = -1.0 if r & 1 else 1.0
        elif tag is Family.BETA:
            v = np.ones(N)
            for j in range(r):
                v = v * ((k + j * N) / N)
            sign = 1.0
        elif tag is Family.GAMMA:
            v = k / N
            for j in range(1, r):
                v = v * ((k + r + j * N) / N)
            sign = 1.0
        else:
            v = np.ones(N)
            for j in range(r):
                v = v * ((k - j * N) / N)
            sign = -1.0 if r & 1 else 1.0
        out[r] = sign * v / factorial(r) * 2.0 ** (-r * b)
    out.flags.writeable = False
    return out


def power_series(family: SeriesFamily, lam: int, k: int = 1) -> list[Fraction]:
    """The truncated series ``family(z)**k`` as a coefficient list indexed by power."""
    coeffs = [Fraction(0)] * (k + lam)
    for r in range(lam):
        coeffs[k + r] = series_coeff(family, r, k)
    return coeffs


def compose(outer: list, inner: list, order: int) -> list:
    """Coefficients of ``outer(inner(z))`` modulo ``z**order``.

    Both arguments are coefficient lists indexed by power; ``inner`` must have
    no constant term.
    """
    if inner and inner[0] != 0:
        raise ValueError("inner series must vanish at 0")
    result = [Fraction(0)] * order
    power = [Fraction(0)] * order
    power[0] = Fraction(1)
    for a in outer[:order]:
        for i in range(order):
            result[i] += a * power[i]
        nxt = [Fraction(0)] * order
        for i, pi in enumerate(power):
            if pi:
                for j, qj in enumerate(inner[: order - i]):
                    if qj:
                        nxt[i + j] += pi * qj
        power = nxt
    return result


def evaluate(family: SeriesFamily, lam: int, z: complex, k: int = 1) -> complex:
    """``family(z)**k`` truncated after ``lam`` terms, in complex doubles."""
    acc = 0j
    zk = z ** k
    zr = 1 + 0j
    for r in range(lam):
        acc += float(series_coeff(family, r, k)) * zr
        zr *= z
    return zk * acc
