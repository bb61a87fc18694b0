"""Full, low and high products of n-bit integers through one real cyclic convolution.

* full: split into ``N`` chunks of ``b`` bits, convolve with zero padding at
  length ``2N`` and round every coefficient.
* low (``uv mod 2^n``): work modulo ``A(X) = X^N + 2^-b X - 1`` instead of
  ``X^(2N) - 1``; ``A(2^b) = 2^(Nb)`` so the reduction does not disturb the
  low bits.  ``alpha*``/``beta*`` move between ``R[X]/A(X)`` and a length-N
  cyclic convolution.
* high (``w`` with ``|uv - 2^n w| < 2^n``): same idea modulo
  ``B(X) = X^(N+1) - 2^b X^N + 2^b`` with the extra ``rho`` channel.

Each product runs on the ``EXACT`` backend (integer mantissas, provable) or
the ``FFT`` backend (double precision numpy/scipy, empirical).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import oracle
from ._kernels import round_recombine, split_into
from .convolution import (EXACT_MAX_LENGTH, Backend, FixedPolynomial, Modulus,
                          convolve_rows, cyclic_convolve, factorize_smooth, is_smooth,
                          make_plan, measure_fft_cost, measure_fft_costs)
from .errors import ConvolutionPrecisionFailure, InputOutOfRange, NoValidParams
from .maps import (apply_alpha_star, apply_beta_star, apply_delta_dagger,
                   apply_gamma_dagger, beta_star_round, delta_dagger_round, get_context,
                   provable_lambda, split_alpha_star, split_gamma_dagger)
from .numerics import FixedReal, lg, round_shift


class Mode(str, enum.Enum):
    FULL = "full"
    LOW = "low"
    HIGH = "high"
    ORACLE_FALLBACK = "oracle_fallback"


# Below this many bits the FFT backend hands the work to the oracle.
FALLBACK_CUTOFF = 1 << 12

# Largest value of 2b + lg(2N)/2 (full) or 3b + lg(N)/2 (truncated) for which
# double-precision convolutions round correctly in practice.  Calibrated so
# the chosen b matches published timings tables for n = 10^6 .. 10^9.
FLOAT_BUDGET = {Mode.FULL: 50.95, Mode.LOW: 50.25, Mode.HIGH: 50.25}

# Distance from an integer at which a rounded coefficient is rejected.
TRIPWIRE = {Backend.EXACT: 0.25, Backend.FFT: 0.4}

# Odd parts allowed in a transform length 2^k * m.
_MAX_ODD_PART = 200
_WINDOW = 1.15
_WIDE_WINDOW = 1.2

# Largest chunk size the compiled splitter handles (a 64-bit accumulator).
_MAX_NUMPY_CHUNK = 53


def working_precision(mode: Mode, b: int, N: int) -> int:
    if mode is Mode.FULL:
        return 2 * b + lg(N) + 2
    if mode is Mode.LOW:
        return 3 * b + lg(N) + 6
    return 3 * b + lg(N) + 9


def float_load(mode: Mode, b: int, N: int, signed: bool = True) -> float:
    """Bits of a double consumed by the convolution, compared against :data:`FLOAT_BUDGET`.

    Balanced chunks have mean zero, so coefficient sums grow like ``sqrt(L)``
    for a length-``L`` transform; unsigned chunks grow faster and cost another
    ``0.6 log2(L) - 1`` bits (``- 2`` for the full product), fitted on uniform
    inputs between 2*10^4 and 3*10^6 bits.
    """
    full = mode is Mode.FULL
    L = 2 * N if full else N
    load = (2 if full else 3) * b + 0.5 * math.log2(L)
    return load if signed else load + 0.6 * math.log2(L) - (2 if full else 1)


def fft_lambda(b: int, N: int, signed: bool = True) -> int:
    """Series length for the float backend: enough terms to push the tail below the float noise."""
    return math.ceil((float_load(Mode.LOW, b, N, signed) - 0.3) / b)


def high_min_N(n: int, b: int) -> int:
    """Smallest ``N >= 3`` with ``(N+1) b >= n + lg N + 2``."""
    N = max(3, -(-n // b) - 1)
    while (N + 1) * b < n + lg(N) + 2:
        N += 1
    return N


@dataclass(frozen=True)
class Params:
    n: int
    b: int
    N: int
    lam: int
    p: int
    mode: Mode
    backend: Backend
    signed_split: bool

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "backend", Backend(self.backend))
        if self.n < 1:
            raise NoValidParams("n must be >= 1")
        if self.mode is Mode.ORACLE_FALLBACK:
            return
        b, N, n, mode = self.b, self.N, self.n, self.mode
        if mode is Mode.FULL:
            if b < 1 or N < 2 or N * b < n:
                raise NoValidParams(f"full product needs b >= 1, N >= 2, N*b >= n (b={b}, N={N}, n={n})")
        else:
            if b < 4 or N < 3:
                raise NoValidParams(f"truncated products need b >= 4 and N >= 3 (b={b}, N={N})")
            if mode is Mode.LOW and N * b < n:
                raise NoValidParams(f"low product needs N*b >= n (b={b}, N={N}, n={n})")
            if mode is Mode.HIGH and (N + 1) * b < n + lg(N) + 2:
                raise NoValidParams(f"high product needs (N+1)*b >= n + lg N + 2 (b={b}, N={N}, n={n})")
            if self.lam < 1:
                raise NoValidParams("lambda must be >= 1")
        if self.p != working_precision(mode, b, N):
            raise NoValidParams(f"p must be {working_precision(mode, b, N)}")
        length = 2 * N if mode is Mode.FULL else N
        if self.backend is Backend.EXACT:
            if length > EXACT_MAX_LENGTH:
                raise NoValidParams(f"exact backend limits the convolution length to {EXACT_MAX_LENGTH}")
        else:
            if not is_smooth(N):
                raise NoValidParams(f"N = {N} is not smooth over 2, 3, 5, 7")
            if b > _MAX_NUMPY_CHUNK:
                raise NoValidParams(f"b = {b} too large for the float backend")
            if float_load(mode, b, N, self.signed_split) > FLOAT_BUDGET[mode]:
                raise NoValidParams(f"b = {b}, N = {N} exceed the double-precision budget")

    @property
    def is_fallback(self) -> bool:
        return self.mode is Mode.ORACLE_FALLBACK

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["backend"] = self.backend.value
        return d


def make_params(n: int, mode: Mode, backend: Backend = Backend.FFT, *, b: int, N: int,
                lam: int | None = None, signed_split: bool | None = None) -> Params:
    """Build :class:`Params` from explicit ``b`` and ``N``, filling in ``p`` and defaults."""
    mode, backend = Mode(mode), Backend(backend)
    if signed_split is None:
        signed_split = backend is Backend.FFT
    p = working_precision(mode, b, N) if N >= 1 else 0
    if lam is None:
        if mode is Mode.FULL:
            lam = 0
        elif backend is Backend.FFT:
            lam = fft_lambda(b, N, bool(signed_split))
        else:
            lam = provable_lambda(p, b) if b > 2 else 1
    return Params(n, b, N, lam, p, mode, backend, bool(signed_split))


def fallback_params(n: int, backend: Backend = Backend.FFT) -> Params:
    return Params(n, 0, 0, 0, 0, Mode.ORACLE_FALLBACK, Backend(backend), False)


def smooth_candidates(lo: float, hi: float) -> list[int]:
    """Lengths ``2^k m`` in ``[lo, hi]`` with ``m`` a product of 3, 5, 7 below 200."""
    odd = sorted(m for m in range(1, _MAX_ODD_PART, 2) if is_smooth(m, (3, 5, 7)))
    out = set()
    for m in odd:
        x = m
        while x <= hi:
            if x >= lo:
                out.add(x)
            x *= 2
    return sorted(out)


def _fft_chunk_bits(n: int, mode: Mode, signed: bool = True) -> int:
    bmin = 1 if mode is Mode.FULL else 4
    cap = max(bmin, -(-n // (2 if mode is Mode.FULL else 3)))
    for b in range(min(cap, _MAX_NUMPY_CHUNK), bmin - 1, -1):
        N0 = high_min_N(n, b) if mode is Mode.HIGH else max(n / b, 2 if mode is Mode.FULL else 3)
        if float_load(mode, b, N0, signed) <= FLOAT_BUDGET[mode]:
            return b
    raise NoValidParams(f"no chunk size fits the double-precision budget for n = {n}")


# Relative cost per radix-p pass (radix 2 = 1) in the static transform cost
# model; roughly log2(p) with a small penalty for odd radices.
RADIX_COST = {2: 1.0, 3: 1.7, 5: 2.4, 7: 2.9}

POLICIES = ("model", "smallest", "measured")


def model_cost(L: int) -> float:
    """Static estimate of a length-``L`` transform: ``L * sum_p e_p * RADIX_COST[p]``."""
    return L * sum(RADIX_COST[q] * e for q, e in factorize_smooth(L).items())


def _transform_cost(mode: Mode, N: int, policy: str) -> float:
    L = 2 * N if mode is Mode.FULL else N
    return measure_fft_cost(L) if policy == "measured" else model_cost(L)


def select_params(n: int, mode: Mode | str, backend: Backend | str = Backend.FFT, *,
                  policy: str = "model", fallback_cutoff: int | None = None,
                  signed_split: bool | None = None) -> Params:
    """Choose ``(b, N, lambda, p)`` for an ``n``-bit product.

    FFT: the largest ``b`` within the double-precision budget, then a smooth
    ``N`` in ``[n/b, 1.15 n/b]`` (widened to 1.2 when empty).  ``policy``
    ranks the candidates: ``"model"`` by :func:`model_cost`, ``"smallest"``
    by length, ``"measured"`` by timing the transforms on this machine.
    Below ``fallback_cutoff`` bits (default ``2^12``) the FFT backend returns
    ``ORACLE_FALLBACK`` params; pass ``0`` to disable.

    EXACT: ``b`` near ``sqrt(n)`` subject to the length cap, with the
    provable series length.
    """
    mode, backend = Mode(mode), Backend(backend)
    if mode is Mode.ORACLE_FALLBACK:
        raise ValueError("select a FULL, LOW or HIGH product")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if n < 1:
        raise NoValidParams("n must be >= 1")
    if backend is Backend.FFT:
        cutoff = FALLBACK_CUTOFF if fallback_cutoff is None else fallback_cutoff
        if n < cutoff:
            return fallback_params(n, backend)
        return _select_fft(n, mode, policy, signed_split)
    return _select_exact(n, mode, signed_split)


def fft_candidates(n: int, mode: Mode | str, signed_split: bool | None = None) -> list[Params]:
    """Every FFT parameter set :func:`select_params` chooses among for ``n`` bits."""
    mode = Mode(mode)
    signed = True if signed_split is None else bool(signed_split)
    b = _fft_chunk_bits(n, mode, signed)
    Nmin = high_min_N(n, b) if mode is Mode.HIGH else max(-(-n // b), 2 if mode is Mode.FULL else 3)
    cands = smooth_candidates(Nmin, max(Nmin, _WINDOW * n / b))
    if not cands:
        cands = smooth_candidates(Nmin, max(Nmin, _WIDE_WINDOW * n / b))
    if not cands:
        N = Nmin
        while not is_smooth(N):
            N += 1
        cands = [N]
    cands = [N for N in cands if float_load(mode, b, N, signed) <= FLOAT_BUDGET[mode]] or cands[:1]
    return [make_params(n, mode, Backend.FFT, b=b, N=N, signed_split=signed_split) for N in cands]


def _select_fft(n: int, mode: Mode, policy: str, signed_split) -> Params:
    cands = fft_candidates(n, mode, signed_split)
    if policy == "smallest" or len(cands) == 1:
        return cands[0]
    if policy == "measured":
        measure_fft_costs([2 * p.N if mode is Mode.FULL else p.N for p in cands])
    return min(cands, key=lambda p: (_transform_cost(mode, p.N, policy), p.N))


def _select_exact(n: int, mode: Mode, signed_split) -> Params:
    bmin, Nmin = (1, 2) if mode is Mode.FULL else (4, 3)
    maxN = EXACT_MAX_LENGTH // 2 if mode is Mode.FULL else EXACT_MAX_LENGTH
    b = max(bmin, math.isqrt(n - 1) + 1, -(-n // maxN))
    while True:
        N = high_min_N(n, b) if mode is Mode.HIGH else max(Nmin, -(-n // b))
        if N <= maxN:
            return make_params(n, mode, Backend.EXACT, b=b, N=N, signed_split=signed_split)
        b += 1


# ---------------------------------------------------------------------------
# splitting and recombination


def _check_input(x: int, n: int):
    if not 0 <= x < (1 << n):
        raise InputOutOfRange(f"operand must lie in [0, 2^{n})")


def _chunks_py(u: int, b: int, count: int) -> list[int]:
    mask = (1 << b) - 1
    return [(u >> (i * b)) & mask for i in range(count)]


def _balance_py(chunks: list[int], b: int, keep_top: bool) -> list[int]:
    # carry out of every chunk whose top bit is set; no carry chains
    carries = [c >> (b - 1) for c in chunks]
    out = [c - (k << b) for c, k in zip(chunks, carries)]
    for i in range(1, len(out)):
        out[i] += carries[i - 1]
    if keep_top and out:
        out[-1] += carries[-1] << b
    return out


def split_chunks(u: int, b: int, count: int, signed: bool = False,
                 keep_top: bool = True) -> list[int]:
    """``count`` chunks of ``b`` bits with ``sum u_i 2^(ib) = u``.

    With ``signed`` the chunks are balanced into ``[-2^(b-1), 2^(b-1)]`` by
    carrying into the next chunk; ``keep_top=False`` discards the final carry
    (correct modulo ``2^(count*b)``), otherwise the top chunk absorbs it.
    """
    if u < 0 or u >> (count * b):
        raise InputOutOfRange(f"value needs more than {count} chunks of {b} bits")
    chunks = _chunks_py(u, b, count)
    return _balance_py(chunks, b, keep_top) if signed else chunks


def split_low(u: int, params: Params) -> list[int]:
    """Chunks ``u_0 .. u_(N-1)`` of ``u`` (balanced when ``params.signed_split``)."""
    _check_input(u, params.n)
    keep_top = params.mode is Mode.FULL
    return split_chunks(u, params.b, params.N, params.signed_split, keep_top)


def split_high(u: int, params: Params) -> list[int]:
    """``N + 1`` chunks of ``u * 2^((N+1)b - n)``, so ``u_N`` holds the top bits of ``u``."""
    _check_input(u, params.n)
    shift = (params.N + 1) * params.b - params.n
    return split_chunks(u << shift, params.b, params.N + 1, params.signed_split, True)


def _recombine_py(cs, b: int) -> int:
    T = 0
    for c in reversed(cs):
        T = (T << b) + c
    return T


def _round_float(x: np.ndarray, b: int, threshold: float) -> int:
    """``sum round(x_i) 2^(ib)``, enforcing the tripwire on ``max |x_i - round(x_i)|``."""
    return _tripwire(*round_recombine(x, b), threshold)


def _tripwire(T: int, dist: float, threshold: float) -> int:
    if dist > threshold:
        raise ConvolutionPrecisionFailure(dist, threshold)
    return T


def _round_exact(ms, shift: int, threshold: float) -> list[int]:
    """Round ``m / 2^shift`` for each mantissa, enforcing the tripwire."""
    if shift <= 0:
        return [m << -shift for m in ms]
    out, worst = [], 0
    for m in ms:
        c = round_shift(m, shift)
        worst = max(worst, abs(m - (c << shift)))
        out.append(c)
    dist = worst / (1 << shift)
    if dist > threshold:
        raise ConvolutionPrecisionFailure(dist, threshold)
    return out


def _threshold(params: Params, tripwire: float | None) -> float:
    return TRIPWIRE[params.backend] if tripwire is None else tripwire


def _expect(params: Params, mode: Mode):
    if params.mode not in (mode, Mode.ORACLE_FALLBACK):
        raise ValueError(f"{mode.value} product called with {params.mode.value} params")


# ---------------------------------------------------------------------------
# full product


def full_product(u: int, v: int, params: Params, *, tripwire: float | None = None) -> int:
    """``u * v`` through a length-``2N`` cyclic convolution."""
    _expect(params, Mode.FULL)
    _check_input(u, params.n)
    _check_input(v, params.n)
    if params.is_fallback:
        return oracle.oracle_full(u, v)
    thr = _threshold(params, tripwire)
    b, N = params.b, params.N
    if params.backend is Backend.FFT:
        X = np.zeros((2, 2 * N))
        split_into(u, b, X[0, :N], params.signed_split, True)
        split_into(v, b, X[1, :N], params.signed_split, True)
        W = convolve_rows(make_plan(2 * N, Backend.FFT), X)
        return _round_float(W, b, thr)
    p, mod = params.p, Modulus.cyclic(2 * N)
    U, V = (FixedPolynomial.from_integers(split_low(x, params) + [0] * N, p, b, mod)
            for x in (u, v))
    W = cyclic_convolve(make_plan(2 * N, Backend.EXACT), U, V)
    return _recombine_py(_round_exact(W.mantissas, p - W.exponent, thr), b)


# ---------------------------------------------------------------------------
# low product


def low_stages(u: int, v: int, params: Params) -> dict:
    """Intermediate values of the exact low product: ``U``, ``V``, ``U~``, ``V~``, ``W~``, ``W_bar``.

    All are :class:`FixedPolynomial` values in the integer-chunk scaling
    (``U`` holds the chunks themselves, exponent ``b``).
    """
    b, N, p = params.b, params.N, params.p
    ctx = get_context(b, N, p, params.lam)
    mod = Modulus.A(b, N)
    U = FixedPolynomial.from_integers(split_low(u, params), p, b, mod)
    V = FixedPolynomial.from_integers(split_low(v, params), p, b, mod)
    Ut, Vt = apply_alpha_star(ctx, U), apply_alpha_star(ctx, V)
    Wt = cyclic_convolve(make_plan(N, Backend.EXACT), Ut, Vt)
    return {"U": U, "V": V, "U~": Ut, "V~": Vt, "W~": Wt, "W_bar": apply_beta_star(ctx, Wt)}


def low_product(u: int, v: int, params: Params, *, tripwire: float | None = None) -> int:
    """``u * v mod 2^n``."""
    _expect(params, Mode.LOW)
    _check_input(u, params.n)
    _check_input(v, params.n)
    n = params.n
    if params.is_fallback:
        return oracle.oracle_low(u, v, n)
    thr = _threshold(params, tripwire)
    b, N = params.b, params.N
    if params.backend is Backend.FFT:
        ctx = get_context(b, N, params.p, params.lam)
        X = split_alpha_star(ctx, u, v, params.signed_split)
        W = convolve_rows(make_plan(N, Backend.FFT), X)
        T = _tripwire(*beta_star_round(ctx, W, 2.0 ** b, n + b), thr)
    else:
        Wb = low_stages(u, v, params)["W_bar"]
        # round 2^b * W_bar; 2^b L has integer coefficients
        T = _recombine_py(_round_exact(Wb.mantissas, params.p - b - Wb.exponent, thr), b)
        T &= (1 << (n + b)) - 1
    if T & ((1 << b) - 1):
        raise ConvolutionPrecisionFailure(0.5, thr)
    return T >> b


# ---------------------------------------------------------------------------
# high product


def high_stages(u: int, v: int, params: Params) -> dict:
    """Intermediate values of the exact high product (chunk scaling, as :func:`low_stages`)."""
    b, N, p = params.b, params.N, params.p
    ctx = get_context(b, N, p, params.lam)
    mod = Modulus.B(b, N)
    U = FixedPolynomial.from_integers(split_high(u, params), p, b, mod)
    V = FixedPolynomial.from_integers(split_high(v, params), p, b, mod)
    (Ut, cu), (Vt, cv) = apply_gamma_dagger(ctx, U), apply_gamma_dagger(ctx, V)
    Wt = cyclic_convolve(make_plan(N, Backend.EXACT), Ut, Vt)
    theta = FixedReal(round_shift(cu.theta.mantissa * cv.theta.mantissa, p + lg(N)),
                      p, Wt.exponent)
    Wb = apply_delta_dagger(ctx, Wt, theta)
    return {"U": U, "V": V, "U~": Ut, "V~": Vt, "theta_U": cu.theta, "theta_V": cv.theta,
            "W~": Wt, "theta_W": theta, "W_bar": Wb}


def high_product(u: int, v: int, params: Params, *, tripwire: float | None = None) -> int:
    """Some ``w`` in ``[0, 2^n]`` with ``|uv - 2^n w| < 2^n``."""
    _expect(params, Mode.HIGH)
    _check_input(u, params.n)
    _check_input(v, params.n)
    n = params.n
    if params.is_fallback:
        return (u * v + (1 << (n - 1))) >> n
    thr = _threshold(params, tripwire)
    b, N = params.b, params.N
    if params.backend is Backend.FFT:
        ctx = get_context(b, N, params.p, params.lam)
        shift = (N + 1) * b - n
        G, theta = split_gamma_dagger(ctx, u, v, params.signed_split, shift)
        W = convolve_rows(make_plan(N, Backend.FFT), G)
        # t = T * 2^(n - (N+3) b); return round(t)
        return _tripwire(*delta_dagger_round(ctx, W, float(theta[0] * theta[1]), 2.0 ** b,
                                             (N + 3) * b - n), thr)
    Wb = high_stages(u, v, params)["W_bar"]
    T = _recombine_py(_round_exact(Wb.mantissas, params.p - b - Wb.exponent, thr), b)
    return round_shift(T, (N + 3) * b - n)


PRODUCTS = {Mode.FULL: full_product, Mode.LOW: low_product, Mode.HIGH: high_product}


def product(u: int, v: int, params: Params, mode: Mode | None = None, **kw) -> int:
    """Dispatch on ``mode`` (defaults to ``params.mode``; required for fallback params)."""
    mode = Mode(mode) if mode is not None else params.mode
    return PRODUCTS[mode](u, v, params, **kw)

