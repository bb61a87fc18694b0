"""Ground truth for tests and acceptance runs.

Nothing here touches the convolution path: integer products use Python's
built-in multiplication and polynomial remainders are computed by plain long
division over :class:`~fractions.Fraction`.
"""

from __future__ import annotations

import enum
import random
from fractions import Fraction
from typing import Sequence

from .errors import DegreeTooLarge


class InputKind(str, enum.Enum):
    UNIFORM = "uniform"
    ADVERSARIAL = "adversarial"
    STRUCTURED = "structured"


def oracle_full(u: int, v: int) -> int:
    return u * v


def oracle_low(u: int, v: int, n: int) -> int:
    return (u * v) & ((1 << n) - 1)


def oracle_high_set(u: int, v: int, n: int) -> set[int]:
    """All ``w`` in ``[0, 2^n]`` with ``|uv - 2^n w| < 2^n`` (one or two values)."""
    prod = u * v
    q = prod >> n
    one = 1 << n
    return {w for w in (q - 1, q, q + 1)
            if 0 <= w <= one and abs(prod - (w << n)) < one}


def _poly_rem(P: Sequence[Fraction], M: Sequence[Fraction]) -> list[Fraction]:
    """Remainder of ``P`` modulo the monic ``M`` (coefficient lists, low degree first)."""
    d = len(M) - 1
    if M[d] != 1:
        raise ValueError("modulus must be monic")
    R = [Fraction(c) for c in P]
    for top in range(len(R) - 1, d - 1, -1):
        t = R[top]
        if t:
            for j in range(d + 1):
                R[top - d + j] -= t * M[j]
    R = R[:d] + [Fraction(0)] * max(0, d - len(R))
    return R


def modulus_A(b: int, N: int) -> list[Fraction]:
    """``X^N + 2^-b X - 1``."""
    M = [Fraction(0)] * (N + 1)
    M[0] = Fraction(-1)
    M[1] += Fraction(1, 1 << b)
    M[N] += 1
    return M


def modulus_B(b: int, N: int) -> list[Fraction]:
    """``X^(N+1) - 2^b X^N + 2^b``."""
    M = [Fraction(0)] * (N + 2)
    M[0] = Fraction(1 << b)
    M[N] = Fraction(-(1 << b))
    M[N + 1] = Fraction(1)
    return M


def reduce_mod_A_exact(W: Sequence[int], b: int, N: int) -> list[Fraction]:
    """Exact remainder of ``W`` modulo ``A(X)``; needs ``deg W <= 2N - 2``."""
    if len(W) > 2 * N - 1:
        raise DegreeTooLarge(f"degree {len(W) - 1} exceeds 2N - 2 = {2 * N - 2}")
    return _poly_rem(W, modulus_A(b, N))


def reduce_mod_B_exact(W: Sequence[int], b: int, N: int) -> list[Fraction]:
    """Exact remainder of ``(1 - 2^-b X) W`` modulo ``B(X)``; needs ``deg W <= 2N``.

    The result has ``N + 1`` coefficients.
    """
    if len(W) > 2 * N + 1:
        raise DegreeTooLarge(f"degree {len(W) - 1} exceeds 2N = {2 * N}")
    eps = Fraction(1, 1 << b)
    P = [Fraction(w) for w in W] + [Fraction(0)]
    for i in range(len(W)):
        P[i + 1] -= eps * W[i]
    return _poly_rem(P, modulus_B(b, N))


def poly_eval(P: Sequence, x):
    acc = 0
    for c in reversed(P):
        acc = acc * x + c
    return acc


def cyclic_convolution_exact(f: Sequence, g: Sequence) -> list:
    """Naive ``f * g mod X^N - 1`` with whatever exact number type the inputs use."""
    N = len(f)
    out = [0] * N
    for i, fi in enumerate(f):
        if fi:
            for j, gj in enumerate(g):
                out[(i + j) % N] += fi * gj
    return out


def _structured(n: int) -> list[tuple[int, int]]:
    top = (1 << n) - 1
    half = 1 << (n - 1)
    alt = int("10" * ((n + 1) // 2), 2) & top
    pairs = [(0, 0), (0, top), (1, 1), (1, top), (top, top), (half, 2),
             (half, half), (top, half), (alt, alt), (alt, top ^ alt), (top, 1),
             (half + 1, top), (2, 2)]
    for k in sorted({1, n // 3, n // 2, n - 1}):
        pairs.append((1 << k, top))
        pairs.append(((1 << k) - 1, (1 << k) + 1 & top))
    seen, out = set(), []
    for p in pairs:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def gen_inputs(n: int, count: int | None, kind: InputKind | str = InputKind.UNIFORM,
               seed: int = 0, b: int | None = None,
               signed: bool = False) -> list[tuple[int, int]]:
    """Deterministic operand pairs in ``[0, 2^n)``.

    ``ADVERSARIAL`` needs the chunk size ``b``: the first pair has every chunk
    equal to ``2^b - 1`` (``2^(b-1)`` with ``signed``), the rest perturb those
    chunks slightly.  ``STRUCTURED`` returns a fixed list of edge cases (all of
    them when ``count`` is ``None``).
    """
    kind = InputKind(kind)
    if n < 1:
        raise ValueError("n must be >= 1")
    mask = (1 << n) - 1
    if kind is InputKind.STRUCTURED:
        pairs = _structured(n)
        return pairs if count is None else pairs[:count]
    rng = random.Random(f"{kind.value}:{n}:{seed}")
    if count is None:
        raise ValueError("count is required for random kinds")
    if kind is InputKind.UNIFORM:
        return [(rng.getrandbits(n), rng.getrandbits(n)) for _ in range(count)]
    if b is None or b < 1:
        raise ValueError("ADVERSARIAL inputs need the chunk size b")
    nchunks = -(-n // b)
    base = (1 << (b - 1)) if signed else (1 << b) - 1

    def make(jitter: int) -> int:
        x = 0
        for i in range(nchunks):
            d = base - rng.randint(0, jitter) if not signed else base + rng.randint(-jitter, jitter)
            x |= max(0, min(d, (1 << b) - 1)) << (i * b)
        return x & mask

    out = []
    for i in range(count):
        jitter = 0 if i == 0 else min(3, (1 << b) - 1)
        out.append((make(jitter), make(jitter)))
    return out
