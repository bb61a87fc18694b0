"""Real cyclic convolution of length N with a p-bit accuracy contract.

Two backends share the :func:`cyclic_convolve` entry point:

* ``EXACT`` sums the O(N^2) products of integer mantissas exactly and rounds
  once, so ``||H~ - H|| < 2**(2e + lg N - p)`` holds by construction.
* ``FFT`` goes through a real-to-complex transform in double precision
  (scipy's pocketfft, mixed radix). Its error is small in practice but not
  bounded; :class:`~truncmul.errors.PrecisionUnsupported` is raised when the
  mantissas would not even fit a double.

The float helpers :func:`convolve_float` and :func:`convolve_rows` are the
hot path used by the product pipelines on the FFT backend.
"""

from __future__ import annotations

import enum
import json
import operator
import os
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.fft

from .errors import PlanMismatch, PrecisionUnsupported, UnsupportedLength
from .numerics import FixedReal, lg, round_shift, round_to_fixed

# Policy cap on the quadratic exact backend.
EXACT_MAX_LENGTH = 4096
# Mantissa bits a double holds exactly.
FLOAT_MANTISSA_BITS = 53
SMOOTH_PRIMES = (2, 3, 5, 7)

PLAN_CACHE_ENV = "TRUNCMUL_PLAN_CACHE"


class Backend(str, enum.Enum):
    EXACT = "exact"
    FFT = "fft"


class ModulusKind(str, enum.Enum):
    CYCLIC = "cyclic"   # X^N - 1
    A = "A"             # X^N + 2^-b X - 1
    B = "B"             # X^(N+1) - 2^b X^N + 2^b
    C = "C"             # B(X) / (X - rho)


@dataclass(frozen=True)
class Modulus:
    kind: ModulusKind
    N: int
    b: int | None = None

    @classmethod
    def cyclic(cls, N: int) -> "Modulus":
        return cls(ModulusKind.CYCLIC, N)

    @classmethod
    def A(cls, b: int, N: int) -> "Modulus":
        return cls(ModulusKind.A, N, b)

    @classmethod
    def B(cls, b: int, N: int) -> "Modulus":
        return cls(ModulusKind.B, N, b)

    @classmethod
    def C(cls, b: int, N: int) -> "Modulus":
        return cls(ModulusKind.C, N, b)

    @property
    def degree(self) -> int:
        """Number of coefficients of a reduced element."""
        return self.N + 1 if self.kind is ModulusKind.B else self.N


@dataclass(frozen=True)
class FixedPolynomial:
    """Coefficient vector in ``2**exponent * R_precision`` modulo ``modulus``.

    Coefficient ``i`` has value ``mantissas[i] * 2**(exponent - precision)``.
    """

    mantissas: tuple[int, ...]
    precision: int
    exponent: int
    modulus: Modulus

    def __post_init__(self):
        if not isinstance(self.mantissas, tuple):
            object.__setattr__(self, "mantissas", tuple(int(m) for m in self.mantissas))
        if len(self.mantissas) != self.modulus.degree:
            raise ValueError(
                f"expected {self.modulus.degree} coefficients, got {len(self.mantissas)}")
        bound = 1 << self.precision
        if any(m > bound or m < -bound for m in self.mantissas):
            raise OverflowError("coefficient outside 2**e * R_p")

    @classmethod
    def from_integers(cls, values: Iterable[int], precision: int, exponent: int,
                      modulus: Modulus) -> "FixedPolynomial":
        """Exact embedding of integer coefficients (requires ``precision >= exponent``)."""
        s = precision - exponent
        if s < 0:
            raise ValueError("integers are not exactly representable at this scale")
        return cls(tuple(int(v) << s for v in values), precision, exponent, modulus)

    @classmethod
    def from_values(cls, values: Iterable, precision: int, exponent: int,
                    modulus: Modulus) -> "FixedPolynomial":
        ms = tuple(round_to_fixed(v, precision, exponent).mantissa for v in values)
        return cls(ms, precision, exponent, modulus)

    @property
    def N(self) -> int:
        return self.modulus.N

    @property
    def unit_shift(self) -> int:
        """``precision - exponent``: value = mantissa / 2**unit_shift."""
        return self.precision - self.exponent

    def coefficient(self, i: int) -> FixedReal:
        return FixedReal(self.mantissas[i], self.precision, self.exponent)

    def values(self) -> list[Fraction]:
        den = 1 << self.unit_shift if self.unit_shift >= 0 else None
        if den is None:
            return [Fraction(m << -self.unit_shift) for m in self.mantissas]
        return [Fraction(m, den) for m in self.mantissas]

    def to_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values()])

    def norm(self) -> Fraction:
        return Fraction(max(abs(m) for m in self.mantissas)) / Fraction(2) ** self.unit_shift


def is_smooth(n: int, primes: Sequence[int] = SMOOTH_PRIMES) -> bool:
    if n < 1:
        return False
    for q in primes:
        while n % q == 0:
            n //= q
    return n == 1


def factorize_smooth(n: int) -> dict[int, int]:
    out = {}
    for q in SMOOTH_PRIMES:
        e = 0
        while n % q == 0:
            n //= q
            e += 1
        out[q] = e
    if n != 1:
        raise UnsupportedLength(f"length has a prime factor outside {SMOOTH_PRIMES}")
    return out


@dataclass(frozen=True)
class ConvolutionPlan:
    length: int
    backend: Backend
    factors: tuple[tuple[int, int], ...] = ()


@lru_cache(maxsize=None)
def make_plan(N: int, backend: Backend = Backend.EXACT) -> ConvolutionPlan:
    backend = Backend(backend)
    if N < 2:
        raise UnsupportedLength("convolution length must be >= 2")
    if backend is Backend.EXACT:
        if N > EXACT_MAX_LENGTH:
            raise UnsupportedLength(f"exact backend is limited to N <= {EXACT_MAX_LENGTH}")
        return ConvolutionPlan(N, backend)
    factors = tuple(sorted(factorize_smooth(N).items()))
    return ConvolutionPlan(N, backend, factors)


def _check_operands(plan: ConvolutionPlan, F: FixedPolynomial, G: FixedPolynomial):
    for P in (F, G):
        if P.modulus.kind is not ModulusKind.CYCLIC:
            raise PlanMismatch("convolution operands must live modulo X^N - 1")
        if P.N != plan.length:
            raise PlanMismatch(f"operand length {P.N} != plan length {plan.length}")
    if (F.precision, F.exponent) != (G.precision, G.exponent):
        raise PlanMismatch("operands must share precision and exponent")


def cyclic_convolve(plan: ConvolutionPlan, F: FixedPolynomial,
                    G: FixedPolynomial) -> FixedPolynomial:
    """``p``-bit approximation of ``F * G mod X^N - 1``.

    The result has exponent ``2e + lg N`` and the operands' precision.
    """
    _check_operands(plan, F, G)
    N, p, e = plan.length, F.precision, F.exponent
    out_exp = 2 * e + lg(N)
    shift = p + lg(N)
    if plan.backend is Backend.EXACT:
        sums = _exact_cyclic_sums(F.mantissas, G.mantissas)
        ms = [round_shift(s, shift) for s in sums]
    else:
        if p > FLOAT_MANTISSA_BITS:
            raise PrecisionUnsupported(f"p = {p} exceeds the double mantissa")
        x = np.array(F.mantissas, dtype=np.float64) * 2.0 ** -p
        y = np.array(G.mantissas, dtype=np.float64) * 2.0 ** -p
        h = convolve_float(plan, x, y) * 2.0 ** (p - lg(N))
        bound = 1 << p
        ms = [max(-bound, min(bound, int(v))) for v in np.rint(h)]
    return FixedPolynomial(tuple(ms), p, out_exp, Modulus.cyclic(N))


def _exact_cyclic_sums(f: Sequence[int], g: Sequence[int]) -> list[int]:
    g = list(g)
    N = len(g)
    mul = operator.mul
    return [sum(map(mul, f, g[k::-1] + g[:k:-1])) for k in range(N)]


def _check_fft_length(plan: ConvolutionPlan, n: int):
    if n != plan.length:
        raise UnsupportedLength(f"vector length {n} != plan length {plan.length}")
    if not is_smooth(n):
        raise UnsupportedLength(f"{n} is not smooth over {SMOOTH_PRIMES}")


def real_dft_forward(plan: ConvolutionPlan, x) -> np.ndarray:
    """Half spectrum ``X_k = sum_j x_j exp(-2 pi i jk/N)``, ``0 <= k <= N//2``."""
    x = np.asarray(x, dtype=np.float64)
    _check_fft_length(plan, x.shape[-1])
    return scipy.fft.rfft(x)


def real_dft_inverse(plan: ConvolutionPlan, X) -> np.ndarray:
    """Inverse of :func:`real_dft_forward`, including the ``1/N`` factor."""
    X = np.asarray(X, dtype=np.complex128)
    if X.shape[-1] != plan.length // 2 + 1:
        raise UnsupportedLength("half spectrum has the wrong length for this plan")
    _check_fft_length(plan, plan.length)
    return scipy.fft.irfft(X, n=plan.length)


def convolve_float(plan: ConvolutionPlan, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    N = plan.length
    X = scipy.fft.rfft(x, n=N)
    X *= scipy.fft.rfft(y, n=N)
    return scipy.fft.irfft(X, n=N)


def convolve_rows(plan: ConvolutionPlan, xy: np.ndarray) -> np.ndarray:
    """Cyclic convolution of the two rows of a ``(2, N)`` array."""
    N = plan.length
    X = scipy.fft.rfft(xy, n=N, axis=-1)
    P = X[0]
    P *= X[1]
    return scipy.fft.irfft(P, n=N)


def square_float(plan: ConvolutionPlan, x: np.ndarray) -> np.ndarray:
    N = plan.length
    X = scipy.fft.rfft(x, n=N)
    X *= X
    return scipy.fft.irfft(X, n=N)


# ---------------------------------------------------------------------------
# Measured transform costs ("wisdom"), used to pick the fastest smooth length.

_wisdom: dict[int, float] = {}
_wisdom_loaded: str | None = None


def _wisdom_file() -> Path | None:
    d = os.environ.get(PLAN_CACHE_ENV)
    if not d:
        return None
    return Path(d) / "fft_wisdom.json"


def _load_wisdom():
    global _wisdom_loaded
    path = _wisdom_file()
    key = str(path)
    if _wisdom_loaded == key:
        return
    _wisdom_loaded = key
    if path is not None and path.exists():
        try:
            data = json.loads(path.read_text())
            _wisdom.update({int(k): float(v) for k, v in data.get("seconds", {}).items()})
        except (OSError, ValueError):
            pass


def _save_wisdom():
    path = _wisdom_file()
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "seconds": {str(k): v for k, v in sorted(_wisdom.items())},
        "factors": {str(k): factorize_smooth(k) for k in sorted(_wisdom)},
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, indent=1))
    tmp.replace(path)


def measure_fft_costs(lengths, min_time: float = 0.01, rounds: int = 5) -> dict[int, float]:
    """Seconds for one real forward + inverse transform pair, for each length.

    Unknown lengths are timed round-robin, ``rounds`` times each, keeping the
    best; interleaving keeps a burst of machine noise from penalising just one
    candidate.  Results are memoised in-process and, when
    ``TRUNCMUL_PLAN_CACHE`` names a directory, persisted there so later runs
    reuse the same numbers.
    """
    _load_wisdom()
    lengths = list(dict.fromkeys(lengths))
    todo = [L for L in lengths if L not in _wisdom]
    if todo:
        xs = {L: np.random.default_rng(L).standard_normal(L) for L in todo}
        for L in todo:
            scipy.fft.irfft(scipy.fft.rfft(xs[L]), n=L)
        best = dict.fromkeys(todo, float("inf"))
        for _ in range(rounds):
            for L in todo:
                reps, elapsed = 0, 0.0
                t0 = time.perf_counter()
                while elapsed < min_time or reps < 2:
                    scipy.fft.irfft(scipy.fft.rfft(xs[L]), n=L)
                    reps += 1
                    elapsed = time.perf_counter() - t0
                best[L] = min(best[L], elapsed / reps)
        _wisdom.update(best)
        _save_wisdom()
    return {L: _wisdom[L] for L in lengths}


def measure_fft_cost(L: int) -> float:
    return measure_fft_costs([L])[L]
