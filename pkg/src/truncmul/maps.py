"""Truncated evaluation of the ring isomorphisms used by the truncated products.

Low product: ``alpha*`` carries ``R[X]/A(X)`` to ``R[X]/(X^N - 1)`` and
``beta*`` carries it back, where ``A(X) = X^N + 2^-b X - 1``.  Each is the
series ``sum_r`` of the term maps ``F_k X^k -> c[r,k] F_k X^(k+r)``, cut off
after ``lam`` terms.

High product: ``B(X) = X^(N+1) - 2^b X^N + 2^b`` factors as
``(X - rho) C(X)``.  ``gamma_dagger`` sends ``F mod B`` to the pair
``(gamma*(F mod C), rho^-N F(rho))`` and ``delta_dagger`` undoes it up to the
factor ``1 - 2^-b X``, via ``(1 - 2^-b X) H(X) + psi C(X)``.

Every map exists in two flavours.  The exact flavour works on
:class:`~truncmul.convolution.FixedPolynomial` values with integer
arithmetic at ``W = p + guard`` fractional bits and rounds once at the end;
it meets the ``2^(e+1-p)`` / ``2^(e+2-p)`` error bounds.  The float flavour
(``*_float``) works on numpy arrays, accepts stacked rows along the first
axis and is what the FFT pipelines call.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial

import numpy as np

from . import _kernels as _k

from .convolution import FixedPolynomial, Modulus, ModulusKind
from .errors import ContextMismatch
from .numerics import GUARD_BITS, FixedReal, lg, round_div, round_shift
from .series import Family, SeriesFamily, coeff_table

# Float-side series of rho powers stop once terms fall below this.
_FLOAT_TAIL = 2.0 ** -64


def provable_lambda(p: int, b: int) -> int:
    """Series length for which the truncation tail is below ``2^-(p+2)``."""
    return -(-(p + 2) // (b - 2))


@dataclass(frozen=True)
class RhoChannel:
    """The scalar component of ``R[X]/(X^N - 1) (+) R`` with the root it refers to."""

    theta: FixedReal
    rho: FixedReal

    def __post_init__(self):
        b = self.rho.exponent
        if not self.rho.mantissa <= (1 << self.rho.precision):
            raise ValueError("rho must not exceed 2^b")
        if self.rho.mantissa <= 0:
            raise ValueError(f"rho must lie just below 2^{b}")


def compute_rho(b: int, N: int, precision: int) -> FixedReal:
    """Real root of ``B(X)`` just below ``2^b``, as an element of ``2^b R_precision``.

    When ``precision < N*b - 4`` the root agrees with ``2^b`` to more bits than
    requested, and ``2^b`` itself is returned.  Otherwise Newton's method is
    run from ``2^b`` in exact integer arithmetic; since ``B`` is increasing and
    convex there, the iterates decrease monotonically onto the root and the
    final one is certified by a sign change of ``B``.
    """
    if b < 1 or N < 1 or precision < 1:
        raise ValueError("b, N and precision must be positive")
    if precision < N * b - 4:
        return FixedReal(1 << precision, precision, b)
    s = precision - b
    scale_b = 1 << (b + s)
    const = 1 << (b + s * (N + 1))

    def B_scaled(M: int) -> int:
        MN = M ** N
        return MN * M - scale_b * MN + const

    def dB_scaled(M: int) -> int:
        MN1 = M ** (N - 1)
        return (N + 1) * MN1 * M - N * scale_b * MN1

    M = scale_b
    while True:
        step = B_scaled(M) // dB_scaled(M)
        if step <= 0:
            break
        M -= step
    if not (B_scaled(M) >= 0 > B_scaled(M - 1)):
        raise ArithmeticError("Newton iteration for rho failed to bracket the root")
    return FixedReal(M, precision, b)


class MapContext:
    """Parameters and precomputed tables shared by every map for one ``(b, N, p, lam)``.

    ``work`` is the number of fractional bits used for the exact tables; the
    float tables are built on first use.
    """

    def __init__(self, b: int, N: int, p: int, lam: int | None = None,
                 guard: int = GUARD_BITS):
        if b < 4 or N < 3:
            raise ValueError("maps need b >= 4 and N >= 3")
        if p < 1:
            raise ValueError("p must be >= 1")
        self.b, self.N, self.p = b, N, p
        self.provable_lam = provable_lambda(p, b)
        self.lam = self.provable_lam if lam is None else int(lam)
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        self.guard = guard
        self.work = p + guard + lg(self.lam + 1) + 2

    def __repr__(self):
        return f"MapContext(b={self.b}, N={self.N}, p={self.p}, lam={self.lam})"

    @property
    def is_provable(self) -> bool:
        return self.lam >= self.provable_lam

    def family(self, tag: Family) -> SeriesFamily:
        return SeriesFamily(tag, self.b, self.N)

    # -- exact tables ------------------------------------------------------

    def table(self, tag: Family):
        return coeff_table(self.family(tag), self.lam, self.work)

    @cached_property
    def rho(self) -> FixedReal:
        return compute_rho(self.b, self.N, self.work + 8)

    @cached_property
    def rho_inv(self) -> tuple[int, ...]:
        """``round(rho^-j * 2^work)`` for ``j = 0, 1, ...`` until it vanishes (at most ``N+1`` entries)."""
        M, s = self.rho.mantissa, self.rho.precision - self.b
        W = self.work
        out = [1 << W]
        Mj = 1
        for j in range(1, self.N + 1):
            Mj *= M
            v = round_div(1 << (W + s * j), Mj)
            if v == 0:
                break
            out.append(v)
        return tuple(out)

    @cached_property
    def c_coeffs(self) -> tuple[int, ...]:
        """``round(2^b / rho^(j+1) * 2^work)``: ``X^N = sum_j c_j X^j (mod C)``."""
        M, s = self.rho.mantissa, self.rho.precision - self.b
        W = self.work
        out = []
        Mj = M
        for j in range(self.N):
            v = round_div(1 << (W + self.b + s * (j + 1)), Mj)
            if v == 0:
                break
            out.append(v)
            Mj *= M
        return tuple(out)

    def rho_inv_at(self, j: int) -> int:
        return self.rho_inv[j] if j < len(self.rho_inv) else 0

    # -- float tables ------------------------------------------------------

    def float_form(self, tag: Family) -> np.ndarray:
        """``tag``'s coefficients as polynomials in ``k/N``, for the compiled float kernels."""
        return _poly_form(tag, self.b, self.N, self.lam)

    @cached_property
    def rho_float(self) -> float:
        r = compute_rho(self.b, self.N, 64)
        return r.mantissa * 2.0 ** (self.b - r.precision)

    @cached_property
    def rho_inv_float(self) -> np.ndarray:
        out = [1.0]
        inv = 1.0 / self.rho_float
        while len(out) <= self.N and out[-1] * inv > _FLOAT_TAIL:
            out.append(out[-1] * inv)
        return np.array(out)

    @cached_property
    def a_float(self) -> np.ndarray:
        # X^N = 1 - 2^-b X  (mod A)
        return np.array([1.0, -(2.0 ** -self.b)])

    @cached_property
    def c_float(self) -> np.ndarray:
        return (2.0 ** self.b / self.rho_float) * self.rho_inv_float[: self.N]


@lru_cache(maxsize=32)
def get_context(b: int, N: int, p: int, lam: int | None = None) -> MapContext:
    return MapContext(b, N, p, lam)


def _check(ctx: MapContext, F: FixedPolynomial, kind: ModulusKind):
    m = F.modulus
    if m.kind is not kind or m.N != ctx.N:
        raise ContextMismatch(f"expected a polynomial modulo {kind.value} with N={ctx.N}")
    if kind is not ModulusKind.CYCLIC and m.b != ctx.b:
        raise ContextMismatch(f"polynomial has b={m.b}, context has b={ctx.b}")
    if F.precision != ctx.p:
        raise ContextMismatch(f"polynomial precision {F.precision} != context p={ctx.p}")


# ---------------------------------------------------------------------------
# exact helpers: integer vectors with an implicit scale


def _cyclic_series(table, ms, N: int) -> list[int]:
    """``sum_r X^r * (row_r . ms) mod X^N - 1``; the scale gains ``2^-work``."""
    S = [0] * N
    for r, row in enumerate(table):
        prods = [a * m for a, m in zip(row, ms)]
        sh = r % N
        if sh:
            prods = prods[-sh:] + prods[:-sh]
        S = [x + y for x, y in zip(S, prods)]
    return S


def _shifted_series(table, ms, N: int) -> list[int]:
    """Unreduced ``sum_r X^r * (row_r . ms)``, length ``N + lam - 1``."""
    lam = len(table)
    S = [0] * (N + lam - 1)
    for r, row in enumerate(table):
        for k, (a, m) in enumerate(zip(row, ms)):
            S[k + r] += a * m
    return S


def _reduce(S: list[int], N: int, R, W: int) -> list[int]:
    """Reduce modulo ``X^N - sum_j R_j X^j`` where ``R`` is scaled by ``2^W``."""
    for d in range(len(S) - 1, N - 1, -1):
        t = S[d]
        if t:
            base = d - N
            for j, rj in enumerate(R):
                S[base + j] += round_shift(t * rj, W)
    return S[:N]


def _a_reduction(ctx: MapContext) -> tuple[int, int]:
    # X^N = 1 - 2^-b X  (mod A)
    return (1 << ctx.work, -(1 << (ctx.work - ctx.b)))


# ---------------------------------------------------------------------------
# low product maps


def apply_alpha_star(ctx: MapContext, F: FixedPolynomial) -> FixedPolynomial:
    """Approximate ``alpha* F`` for ``F`` in ``2^e R_p[X]/A(X)``; result in ``2^(e+1) R_p[X]/(X^N-1)``."""
    _check(ctx, F, ModulusKind.A)
    S = _cyclic_series(ctx.table(Family.ALPHA), F.mantissas, ctx.N)
    out = [round_shift(s, ctx.work + 1) for s in S]
    return FixedPolynomial(tuple(out), ctx.p, F.exponent + 1, Modulus.cyclic(ctx.N))


def apply_beta_star(ctx: MapContext, F: FixedPolynomial) -> FixedPolynomial:
    """Approximate ``beta* F`` for ``F`` in ``2^e R_p[X]/(X^N-1)``; result in ``2^(e+1) R_p[X]/A(X)``."""
    _check(ctx, F, ModulusKind.CYCLIC)
    S = _shifted_series(ctx.table(Family.BETA), F.mantissas, ctx.N)
    S = _reduce(S, ctx.N, _a_reduction(ctx), ctx.work)
    out = [round_shift(s, ctx.work + 1) for s in S]
    return FixedPolynomial(tuple(out), ctx.p, F.exponent + 1, Modulus.A(ctx.b, ctx.N))


# ---------------------------------------------------------------------------
# high product maps


def _mod_c_scaled(ctx: MapContext, ms) -> list[int]:
    """``F mod C`` at scale ``2^-work`` relative to the mantissas of ``F``."""
    N, W = ctx.N, ctx.work
    top = ms[N]
    out = [m << W for m in ms[:N]]
    if top:
        for j, cj in enumerate(ctx.c_coeffs):
            out[j] += cj * top
    return out


def reduce_mod_C(ctx: MapContext, F: FixedPolynomial) -> FixedPolynomial:
    """``F mod C(X)`` for ``F`` in ``2^e R_p[X]/B(X)``.

    Coefficient ``i`` is ``F_i + (2^b / rho^(i+1)) F_N``.  The norm can grow
    by a factor up to 2.003, so the result is returned in
    ``2^(e+2) R_(p+guard)``.
    """
    _check(ctx, F, ModulusKind.B)
    S = _mod_c_scaled(ctx, F.mantissas)
    prec = ctx.p + ctx.guard
    # value = S * 2^(e-p-W); target unit 2^(e+2-prec)
    shift = ctx.work + 2 - ctx.guard
    out = [round_shift(s, shift) for s in S]
    return FixedPolynomial(tuple(out), prec, F.exponent + 2, Modulus.C(ctx.b, ctx.N))


def _theta_scaled(ctx: MapContext, ms) -> int:
    """``rho^-N F(rho) = F_N + F_(N-1)/rho + ...`` at scale ``2^-work``."""
    N = ctx.N
    return sum(ms[N - j] * r for j, r in enumerate(ctx.rho_inv) if j <= N)


def apply_gamma_dagger(ctx: MapContext, F: FixedPolynomial):
    """Approximate ``gamma_dagger F = (gamma*(F mod C), rho^-N F(rho))``.

    Returns ``(G, channel)`` with ``G`` in ``2^(e+2) R_p[X]/(X^N-1)`` and
    ``channel.theta`` in ``2^(e+2) R_p``.
    """
    _check(ctx, F, ModulusKind.B)
    W, e = ctx.work, F.exponent
    Fc = _mod_c_scaled(ctx, F.mantissas)
    S = _cyclic_series(ctx.table(Family.GAMMA), Fc, ctx.N)
    G = [round_shift(s, 2 * W + 2) for s in S]
    theta = round_shift(_theta_scaled(ctx, F.mantissas), W + 2)
    return (FixedPolynomial(tuple(G), ctx.p, e + 2, Modulus.cyclic(ctx.N)),
            RhoChannel(FixedReal(theta, ctx.p, e + 2), ctx.rho))


def apply_delta_dagger(ctx: MapContext, F: FixedPolynomial, theta) -> FixedPolynomial:
    """Approximate ``delta_dagger(F, theta)``; the result lies in ``2^(e+2) R_p[X]/B(X)``.

    ``H = delta* F`` is lifted with a zero ``X^N`` coefficient, then
    ``G = (1 - 2^-b X) H + psi C`` with
    ``psi = (rho theta - rho^(1-N) rho^-N H(rho)) / (rho - N 2^b rho^-N)``.
    """
    _check(ctx, F, ModulusKind.CYCLIC)
    if isinstance(theta, RhoChannel):
        theta = theta.theta
    if (theta.precision, theta.exponent) != (F.precision, F.exponent):
        raise ContextMismatch("theta must share the polynomial's precision and exponent")
    N, W, b = ctx.N, ctx.work, ctx.b
    S = _shifted_series(ctx.table(Family.DELTA), F.mantissas, N)
    H = _reduce(S, N, ctx.c_coeffs, W)                     # scale 2^-W
    sH = sum(H[N - j] * ctx.rho_inv[j]
             for j in range(1, min(N, len(ctx.rho_inv) - 1) + 1))   # scale 2^-2W
    M, s = ctx.rho.mantissa, ctx.rho.precision - b
    num = theta.mantissa * M << (3 * W)
    num -= ctx.rho_inv_at(N - 1) * sH << s
    den = (M << W) - ((N * ctx.rho_inv_at(N)) << (b + s))
    psi = round_div(num, den << W)                         # scale 2^-W
    c = ctx.c_coeffs
    G = [0] * (N + 1)
    for j in range(N):
        g = H[j] << W
        if j:
            g -= H[j - 1] << (W - b)
        if j < len(c):
            g -= psi * c[j]
        G[j] = g
    G[N] = (psi << W) - (H[N - 1] << (W - b))
    out = [round_shift(g, 2 * W + 2) for g in G]
    return FixedPolynomial(tuple(out), ctx.p, F.exponent + 2, Modulus.B(b, N))


# ---------------------------------------------------------------------------
# float flavour (numpy arrays, optionally stacked along the first axis)


# On the float path each c[r, k] is a degree-r polynomial in t = k/N, so the
# kernels evaluate it inline instead of streaming lam x N tables through memory.
# Per family: (lead factor t?, first j, shift, sign, alternating), giving
# c[r,k] = (+-1)^r 2^(-rb)/r! * (t if lead) * prod_{j>=j0}^{r-1} (t + shift*r/N + sign*j).
_FLOAT_FORMS = {
    Family.ALPHA: (True, 1, 1, -1, True),
    Family.BETA: (False, 0, 0, 1, False),
    Family.GAMMA: (True, 1, 1, 1, False),
    Family.DELTA: (False, 0, 0, -1, True),
}


@lru_cache(maxsize=64)
def _poly_form(tag: Family, b: int, N: int, lam: int) -> np.ndarray:
    """``P[r, d]``: coefficient of ``t^d`` in ``c[r, tN]`` (row 0 unused)."""
    lead, j0, shift, sign, alternating = _FLOAT_FORMS[tag]
    P = np.zeros((lam, lam))
    for r in range(1, lam):
        poly = [Fraction(1)]
        factors = [Fraction(0)] if lead else []
        factors += [Fraction(shift * r, N) + sign * j for j in range(j0, r)]
        for c in factors:
            # multiply by (t + c)
            poly = [(poly[d - 1] if d else 0) + (c * poly[d] if d < len(poly) else 0)
                    for d in range(len(poly) + 1)]
        C = Fraction(-1 if alternating and r & 1 else 1, factorial(r) << (r * b))
        for d, q in enumerate(poly):
            P[r, d] = float(C * q)
    return P


def _rows(kernel, F: np.ndarray, *args, width: int | None = None,
          paired: bool = False) -> np.ndarray:
    # apply a row kernel along the last axis; paired kernels take two rows at
    # once, and an odd last row is paired with itself
    F = np.asarray(F, dtype=np.float64)
    F2 = np.ascontiguousarray(F.reshape(-1, F.shape[-1]))
    width = F.shape[-1] if width is None else width
    out = np.empty((F2.shape[0], width))
    m = F2.shape[0]
    for i in range(0, m, 2 if paired else 1):
        if paired:
            j = min(i + 1, m - 1)
            kernel(F2[i], F2[j], out[i], out[j], *args)
        else:
            kernel(F2[i], out[i], *args)
    return out.reshape(F.shape[:-1] + (width,))


_NO_FOLD = np.zeros(0)


def alpha_star_float(ctx: MapContext, F: np.ndarray, scale: float = 1.0) -> np.ndarray:
    return _rows(_k.cyclic_kernel(ctx.lam), F, ctx.float_form(Family.ALPHA), scale, _NO_FOLD,
                 paired=True)


def beta_star_float(ctx: MapContext, F: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Float ``beta*``; ``scale`` (a power of two on the hot path) multiplies the result."""
    return _rows(_k.shifted_kernel(ctx.lam), F, ctx.float_form(Family.BETA), ctx.a_float, scale)


def gamma_dagger_float(ctx: MapContext, F: np.ndarray):
    """Float ``gamma_dagger``: ``F`` has ``N+1`` entries on its last axis; returns ``(G, theta)``."""
    N = ctx.N
    F = np.asarray(F, dtype=np.float64)
    G = _rows(_k.cyclic_kernel(ctx.lam), F, ctx.float_form(Family.GAMMA), 1.0, ctx.c_float,
              width=N, paired=True)
    ri = ctx.rho_inv_float
    J = min(len(ri), N + 1)
    theta = F[..., N - J + 1:][..., ::-1] @ ri[:J]
    return G, theta


def _psi_terms(ctx: MapContext) -> np.ndarray:
    N, ri = ctx.N, ctx.rho_inv_float
    r_1n = ri[N - 1] if N - 1 < len(ri) else 0.0
    r_n = ri[N] if N < len(ri) else 0.0
    return np.array([ctx.rho_float, r_1n, ctx.rho_float - N * 2.0 ** ctx.b * r_n])


def delta_dagger_float(ctx: MapContext, F: np.ndarray, theta: float,
                       scale: float = 1.0) -> np.ndarray:
    N, b = ctx.N, ctx.b
    c = ctx.c_float
    H = _rows(_k.shifted_kernel(ctx.lam), F, ctx.float_form(Family.DELTA), c, 1.0)
    ri = ctx.rho_inv_float
    J = min(len(ri) - 1, N)
    sH = float(H[N - J:][::-1] @ ri[1:J + 1]) if J > 0 else 0.0
    rho, r_1n, den = _psi_terms(ctx)
    psi = (rho * theta - r_1n * sH) / den
    G = np.empty(N + 1)
    G[:N] = H
    G[N] = psi
    G[1:] -= 2.0 ** -b * H
    G[:len(c)] -= psi * c
    G *= scale
    return G


# Entry points for the FFT pipelines: splitting followed by the first map, and
# the last map fused with the final rounding.


def _split_cyclic(ctx: MapContext, tag: Family, u: int, v: int, signed: bool, count: int,
                  fold: np.ndarray, offset: int) -> tuple[np.ndarray, list[np.ndarray]]:
    # fused split + cyclic series map of the first N of ``count`` chunks; also
    # returns the top chunks (entries N-J+1 .. N, J = len(rho_inv_float)) when
    # count = N + 1
    N, b, lam = ctx.N, ctx.b, ctx.lam
    keep_top = count == N + 1
    J = min(len(ctx.rho_inv_float), N + 1) if keep_top else 0
    tail_ks = range(N - lam + 1, N)
    extras, tails, tops = [], [], []
    for x in (u, v):
        top_vals = _k.chunk_values(x, b, range(N - J + 1, N + 1), count, signed, True, offset)
        top = top_vals[-1] if keep_top else 0.0
        tail = _k.chunk_values(x, b, tail_ks, count, signed, keep_top, offset)
        tail += [fold[k] * top if k < len(fold) else 0.0 for k in tail_ks]
        extras.append(top_vals)
        tails.append(tail)
        tops.append(top)
    bits = count * b - offset
    out = np.empty((2, N))
    _k.split_cyclic_kernel(lam)(_k._words(u, bits), _k._words(v, bits), b, offset, signed,
                                ctx.float_form(tag), 1.0, fold, tops[0], tops[1], tails[0],
                                tails[1], out[0], out[1])
    return out, extras


def split_alpha_star(ctx: MapContext, u: int, v: int, signed: bool) -> np.ndarray:
    """``alpha*`` of the ``N`` chunks of ``u`` and of ``v``, as a ``(2, N)`` array."""
    N, b = ctx.N, ctx.b
    if _k.fused_ok(N, ctx.lam, 0):
        return _split_cyclic(ctx, Family.ALPHA, u, v, signed, N, _NO_FOLD, 0)[0]
    X = np.empty((2, N))
    _k.split_into(u, b, X[0], signed, False)
    _k.split_into(v, b, X[1], signed, False)
    return alpha_star_float(ctx, X)


def split_gamma_dagger(ctx: MapContext, u: int, v: int, signed: bool, offset: int = 0):
    """``gamma_dagger`` of the ``N + 1`` chunks of ``u << offset`` and of
    ``v << offset`` (top chunks kept whole).

    Returns ``(G, theta)`` with ``G`` of shape ``(2, N)``.
    """
    N, b = ctx.N, ctx.b
    fold = ctx.c_float
    if _k.fused_ok(N, ctx.lam, len(fold)):
        G, tops = _split_cyclic(ctx, Family.GAMMA, u, v, signed, N + 1, fold, offset)
        ri = ctx.rho_inv_float
        theta = np.array([t[::-1] @ ri[:len(t)] for t in tops])
        return G, theta
    X = np.empty((2, N + 1))
    _k.split_into(u, b, X[0], signed, True, offset)
    _k.split_into(v, b, X[1], signed, True, offset)
    return gamma_dagger_float(ctx, X)


def beta_star_round(ctx: MapContext, W: np.ndarray, scale: float,
                    bits: int | None = None) -> tuple[int, float]:
    """Round ``scale * beta*(W)`` and recombine in base ``2^b``; see :func:`round_recombine`.

    With ``bits`` only the recombined value modulo ``2^bits`` is returned.
    """
    N, b, lam = ctx.N, ctx.b, ctx.lam
    if not _k.fused_ok(N, lam, 0):
        T, dist = _k.round_recombine(beta_star_float(ctx, W, scale), b)
        return (T if bits is None else T & ((1 << bits) - 1)), dist
    out = _k._pack_buffer(N, b)
    carry, dist = _k.shifted_round_kernel(lam)(np.ascontiguousarray(W), ctx.float_form(Family.BETA),
                                               ctx.a_float, scale, b, out)
    return _k._unpack(out, carry, N, b, bits), float(dist)


def delta_dagger_round(ctx: MapContext, W: np.ndarray, theta: float,
                       scale: float, shift: int = 0) -> tuple[int, float]:
    """Round ``scale * delta_dagger(W, theta)`` and recombine its ``N + 1`` entries in base ``2^b``.

    With ``shift > 0`` the recombined value ``T`` comes back as
    ``round_shift(T, shift)``.
    """
    N, b, lam = ctx.N, ctx.b, ctx.lam
    c = ctx.c_float
    if not _k.fused_ok(N, lam, len(c)) or not 0 <= shift < (N + 1) * b:
        T, dist = _k.round_recombine(delta_dagger_float(ctx, W, theta, scale), b)
        return round_shift(T, shift), dist
    out = _k._pack_buffer(N + 1, b)
    carry, dist = _k.delta_round_kernel(lam)(
        np.ascontiguousarray(W), ctx.float_form(Family.DELTA), c, 2.0 ** -b,
        ctx.rho_inv_float, _psi_terms(ctx), theta, scale, b, out)
    if shift:
        return _k._unpack_round_shift(out, carry, N + 1, b, shift), float(dist)
    return _k._unpack(out, carry, N + 1, b), float(dist)
