"""Compiled loops for the float backend.

Chunk extraction, rounding with recombination, and the series maps of
:mod:`truncmul.maps`.  The series kernels take each family's coefficients as
polynomials ``P[r]`` in ``t = k/N`` and evaluate them inline; they are
specialised per series length ``lam`` so the inner loops unroll, which is worth
about 3x over a generic loop at ``N ~ 10^6``.  The last maps of the low and
high pipelines also come fused with the final rounding, and the first maps
with chunk extraction.
"""

from __future__ import annotations

from functools import lru_cache

import numba
import numpy as np

# ---------------------------------------------------------------------------
# chunk extraction

# Both directions work on 64-bit little-endian words rather than bytes, which
# halves the cost of splitting and of packing.


@numba.njit(cache=True)
def _split_into(words, b, out, signed, keep_top, offset):
    # offset: zero bits below the first bit of words
    count = out.shape[0]
    mask = (np.uint64(1) << np.uint64(b)) - np.uint64(1)
    half = np.int64(1) << np.int64(b - 1)
    full = np.int64(1) << np.int64(b)
    start = min(offset // b, count)
    out[:start] = 0.0
    acc = np.uint64(0)
    nacc = offset % b
    pos = 0
    carry = np.int64(0)
    for i in range(start, count):
        if nacc >= b:
            d = np.int64(acc & mask)
            acc >>= np.uint64(b)
            nacc -= b
        else:
            x = words[pos]
            pos += 1
            d = np.int64((acc | (x << np.uint64(nacc))) & mask)
            acc = x >> np.uint64(b - nacc)
            nacc += 64 - b
        if signed:
            # balanced chunks carry out of every chunk whose top bit is set,
            # so no carry chains form
            t = d + carry
            if d >= half and not (keep_top and i == count - 1):
                t -= full
                carry = np.int64(1)
            else:
                carry = np.int64(0)
            d = t
        out[i] = d


def _words(u: int, bits: int) -> np.ndarray:
    return np.frombuffer(u.to_bytes(8 * (max(bits, 0) // 64 + 2), "little"), dtype=np.uint64)


def split_into(u: int, b: int, out: np.ndarray, signed: bool, keep_top: bool,
               offset: int = 0) -> None:
    """Write the ``len(out)`` chunks of ``u << offset`` into ``out``.

    Chunks have ``b <= 53`` bits, so each is an exact double.

    Balanced chunks carry out of every chunk whose top bit is set, so no
    carry chains form; ``keep_top`` lets the last chunk absorb its carry.
    """
    _split_into(_words(u, out.shape[0] * b - offset), b, out, signed, keep_top, offset)


# ---------------------------------------------------------------------------
# rounding and recombination


@numba.njit(inline="always")
def _push(x, acc, nacc, carry, dist, b):
    # round x and add it to the carry-normalised word stream; returns the
    # word to store when one fills up.  Helpers never take the output array:
    # passing arrays into them costs a reference count per element.
    c = np.rint(x)
    e = abs(x - c)
    if e > dist:
        dist = e
    t = np.int64(c) + carry
    carry = t >> np.int64(b)
    d = np.uint64(t & ((np.int64(1) << np.int64(b)) - 1))
    word = acc | (d << np.uint64(nacc))
    nacc += b
    done = nacc >= 64
    if done:
        nacc -= 64
        acc = d >> np.uint64(b - nacc) if nacc > 0 else np.uint64(0)
    else:
        acc = word
    return word, done, acc, nacc, carry, dist


@numba.njit(cache=True)
def _round_pack(x, b, out):
    """Round ``x``, carry-normalise ``sum c_i 2^(ib)`` into words; return (final carry, max distance)."""
    carry = np.int64(0)
    acc = np.uint64(0)
    nacc = 0
    pos = 0
    dist = 0.0
    for i in range(x.shape[0]):
        word, done, acc, nacc, carry, dist = _push(x[i], acc, nacc, carry, dist, b)
        if done:
            out[pos] = word
            pos += 1
    if nacc > 0:
        out[pos] = acc
    return carry, dist


def _pack_buffer(count: int, b: int) -> np.ndarray:
    return np.zeros((count * b + 63) // 64 + 1, dtype=np.uint64)


def _unpack(out: np.ndarray, carry, count: int, b: int, bits: int | None = None) -> int:
    # the packed integer, or just its low ``bits`` bits (cheaper than masking)
    if bits is None or bits >= count * b:
        T = int.from_bytes(out.tobytes(), "little") + (int(carry) << (count * b))
        return T if bits is None else T & ((1 << bits) - 1)
    head = out.view(np.uint8)[: (bits + 7) // 8].copy()
    if bits % 8:
        head[-1] &= (1 << (bits % 8)) - 1
    return int.from_bytes(head.tobytes(), "little")


def _unpack_round_shift(out: np.ndarray, carry, count: int, b: int, s: int) -> int:
    # round_shift(packed integer, s) for 0 < s < count * b, reading only the
    # words at or above bit s (plus a zero test below it)
    w, r = divmod(s - 1, 64)
    below = bool(out[:w].any()) or bool(int(out[w]) & ((1 << r) - 1))
    half = (int(out[w]) >> r) & 1
    q = int.from_bytes(out.view(np.uint8)[s // 8:].tobytes(), "little") >> (s % 8)
    q += int(carry) << (count * b - s)
    if half and (below or q & 1):
        q += 1
    return q


def round_recombine(x: np.ndarray, b: int) -> tuple[int, float]:
    """``(sum round(x_i) 2^(ib), max_i |x_i - round(x_i)|)`` for ``|x_i| < 2^62``."""
    K = x.shape[0]
    out = _pack_buffer(K, b)
    carry, dist = _round_pack(np.ascontiguousarray(x, dtype=np.float64), b, out)
    return _unpack(out, carry, K, b), float(dist)


# ---------------------------------------------------------------------------
# series maps


@numba.njit(inline="always")
def _coef(P, r, t):
    c = P[r, r]
    for d in range(r - 1, -1, -1):
        c = c * t + P[r, d]
    return c


@numba.njit(inline="always")
def _folded(f, k, fold, top):
    # entry k of f[:N] + fold * f[N]
    if k < fold.shape[0]:
        return f[k] + fold[k] * top
    return f[k]


@lru_cache(maxsize=None)
def cyclic_kernel(lam: int):
    """``kernel(F0, F1, O0, O1, P, scale, fold)``: for each pair ``(F, O)``,
    ``O_j = scale * (f_j + sum_r c[r, j-r] f_(j-r))`` with indices mod ``N``,
    where ``f = F[:N] + fold * F[N]`` (an empty ``fold`` reads just ``N``
    entries).  Two rows at a time share the coefficient evaluations."""

    @numba.njit(fastmath=True)
    def kernel(F0, F1, O0, O1, P, scale, fold):
        N = O0.shape[0]
        inv = 1.0 / N
        slow = min(max(lam - 1, fold.shape[0] + lam - 1), N)
        for j in range(slow, N):
            s0 = F0[j]
            s1 = F1[j]
            for r in range(1, lam):
                c = _coef(P, r, (j - r) * inv)
                s0 += c * F0[j - r]
                s1 += c * F1[j - r]
            O0[j] = s0 * scale
            O1[j] = s1 * scale
        t0 = F0[N] if fold.shape[0] else 0.0
        t1 = F1[N] if fold.shape[0] else 0.0
        for j in range(slow):
            s0 = _folded(F0, j, fold, t0)
            s1 = _folded(F1, j, fold, t1)
            for r in range(1, lam):
                k = (j - r) % N
                c = _coef(P, r, k * inv)
                s0 += c * _folded(F0, k, fold, t0)
                s1 += c * _folded(F1, k, fold, t1)
            O0[j] = s0 * scale
            O1[j] = s1 * scale

    return kernel


@numba.njit(inline="always")
def _top_fold(f, P, R, lam, low):
    # contributions of X^N .. X^(N+lam-2) in sum_r X^r (c[r] * f), folded down
    # with X^(N+i) = sum_j R_j X^(i+j); adds them into low[:]
    N = f.shape[0]
    inv = 1.0 / N
    top = np.zeros(max(lam - 1, 1))
    for e in range(N, N + lam - 1):
        for r in range(e - N + 1, lam):
            k = e - r
            if k < N:
                top[e - N] += _coef(P, r, k * inv) * f[k]
    for e in range(lam - 2, -1, -1):
        t = top[e]
        for j in range(R.shape[0]):
            idx = e + j
            if idx >= N:
                top[idx - N] += R[j] * t
            else:
                low[idx] += R[j] * t


@numba.njit(inline="always")
def _shifted_at(f, P, lam, j, inv):
    # entry j < N of sum_r X^r (c[r] * f), without wraparound
    s = f[j]
    for r in range(1, min(lam, j + 1)):
        s += _coef(P, r, (j - r) * inv) * f[j - r]
    return s


@lru_cache(maxsize=None)
def shifted_kernel(lam: int):
    """``kernel(f, out, P, R, scale)``: ``out = scale * (sum_r X^r (c[r] * f))``
    reduced by ``X^(N+i) = sum_j R_j X^(i+j)``."""

    @numba.njit(fastmath=True)
    def kernel(f, out, P, R, scale):
        N = f.shape[0]
        inv = 1.0 / N
        head = min(lam - 1, N)
        for j in range(head, N):
            s = f[j]
            for r in range(1, lam):
                s += _coef(P, r, (j - r) * inv) * f[j - r]
            out[j] = s
        for j in range(head):
            out[j] = _shifted_at(f, P, lam, j, inv)
        _top_fold(f, P, R, lam, out)
        for j in range(N):
            out[j] *= scale

    return kernel


# ---------------------------------------------------------------------------
# chunk extraction fused with the cyclic series maps

# Chunks are split a block at a time into a small scratch buffer and consumed
# straight away, instead of going through a full-length array.
SPLIT_BLOCK = 2048


def chunk_values(u: int, b: int, ks, count: int, signed: bool, keep_top: bool,
                 offset: int = 0) -> np.ndarray:
    """Entries ``ks`` of what :func:`split_into` writes for ``count`` chunks.

    A balanced chunk depends only on its own digit and the one below, so any
    entry can be found directly; cheap for chunks near the top of ``u``.
    """
    mask, half = (1 << b) - 1, 1 << (b - 1)

    def digit(k):
        if k < 0:
            return 0
        q = k * b - offset
        return ((u >> q) if q >= 0 else (u << -q)) & mask

    out = []
    for k in ks:
        d = digit(k)
        if signed:
            if d >= half and not (keep_top and k == count - 1):
                d -= 1 << b
            if digit(k - 1) >= half:
                d += 1
        out.append(float(d))
    return np.array(out)


@lru_cache(maxsize=None)
def split_cyclic_kernel(lam: int):
    """``kernel(W0, W1, b, offset, signed, P, scale, fold, top0, top1, tail0, tail1, O0, O1)``.

    As :func:`cyclic_kernel` on the first ``N`` split chunks of two operands
    given as words (see :func:`split_into`; the last of them is never the kept
    top chunk).  ``top`` is entry ``N`` for the fold and ``tail`` holds the
    folded entries ``N - lam + 1 .. N - 1`` that wrap around.
    """

    @numba.njit(fastmath=True)
    def kernel(W0, W1, b, offset, signed, P, scale, fold, top0, top1, tail0, tail1, O0, O1):
        N = O0.shape[0]
        inv = 1.0 / N
        h = lam - 1
        s0 = np.empty(SPLIT_BLOCK + h)
        s1 = np.empty(SPLIT_BLOCK + h)
        s0[:h] = tail0
        s1[:h] = tail1
        mask = (np.uint64(1) << np.uint64(b)) - np.uint64(1)
        half = np.int64(1) << np.int64(b - 1)
        full = np.int64(1) << np.int64(b)
        acc0 = np.uint64(0)
        acc1 = np.uint64(0)
        start = min(offset // b, N)
        nacc = offset % b
        pos = 0
        c0 = np.int64(0)
        c1 = np.int64(0)
        for j0 in range(0, N, SPLIT_BLOCK):
            m = min(SPLIT_BLOCK, N - j0)
            for i in range(m):
                if j0 + i < start:
                    s0[h + i] = 0.0
                    s1[h + i] = 0.0
                    continue
                if nacc >= b:
                    d0 = np.int64(acc0 & mask)
                    d1 = np.int64(acc1 & mask)
                    acc0 >>= np.uint64(b)
                    acc1 >>= np.uint64(b)
                    nacc -= b
                else:
                    x0 = W0[pos]
                    x1 = W1[pos]
                    pos += 1
                    d0 = np.int64((acc0 | (x0 << np.uint64(nacc))) & mask)
                    d1 = np.int64((acc1 | (x1 << np.uint64(nacc))) & mask)
                    acc0 = x0 >> np.uint64(b - nacc)
                    acc1 = x1 >> np.uint64(b - nacc)
                    nacc += 64 - b
                if signed:
                    t0 = d0 + c0
                    c0 = np.int64(0)
                    if d0 >= half:
                        t0 -= full
                        c0 = np.int64(1)
                    t1 = d1 + c1
                    c1 = np.int64(0)
                    if d1 >= half:
                        t1 -= full
                        c1 = np.int64(1)
                    d0, d1 = t0, t1
                s0[h + i] = d0
                s1[h + i] = d1
            for i in range(min(m, fold.shape[0] - j0)):
                s0[h + i] += fold[j0 + i] * top0
                s1[h + i] += fold[j0 + i] * top1
            for i in range(m):
                j = j0 + i
                a0 = s0[h + i]
                a1 = s1[h + i]
                for r in range(1, lam):
                    k = j - r
                    if k < 0:
                        k += N
                    c = _coef(P, r, k * inv)
                    a0 += c * s0[h + i - r]
                    a1 += c * s1[h + i - r]
                O0[j] = a0 * scale
                O1[j] = a1 * scale
            for i in range(h):
                s0[i] = s0[m + i]
                s1[i] = s1[m + i]

    return kernel


# ---------------------------------------------------------------------------
# series maps fused with the final rounding


def fused_ok(N: int, lam: int, fold: int) -> bool:
    """Whether ``N`` is long enough for the streaming kernels below."""
    return N >= 2 * (lam + fold) + 2


@lru_cache(maxsize=None)
def shifted_round_kernel(lam: int):
    """``kernel(f, P, R, scale, b, out) -> (carry, dist)``: the shifted-reduced
    series map of ``f``, scaled, rounded and packed as by :func:`round_recombine`."""

    @numba.njit(fastmath=True)
    def kernel(f, P, R, scale, b, out):
        N = f.shape[0]
        inv = 1.0 / N
        low = np.zeros(lam - 1 + R.shape[0])
        _top_fold(f, P, R, lam, low)
        carry = np.int64(0)
        acc = np.uint64(0)
        nacc = 0
        pos = 0
        dist = 0.0
        for j in range(N):
            if j < lam - 1:
                s = _shifted_at(f, P, lam, j, inv)
            else:
                s = f[j]
                for r in range(1, lam):
                    s += _coef(P, r, (j - r) * inv) * f[j - r]
            if j < low.shape[0]:
                s += low[j]
            word, done, acc, nacc, carry, dist = _push(s * scale, acc, nacc, carry, dist, b)
            if done:
                out[pos] = word
                pos += 1
        if nacc > 0:
            out[pos] = acc
        return carry, dist

    return kernel


@lru_cache(maxsize=None)
def delta_round_kernel(lam: int):
    """``kernel(f, P, c, eps, ri, rho_terms, theta, scale, b, out) -> (carry, dist)``.

    ``H`` is the shifted series of ``f`` reduced with ``c``; the ``N + 1``
    packed values are ``scale * G`` with ``G = (1 - eps X) H + psi C``, where
    ``psi`` comes from ``theta`` and the top of ``H`` through ``ri`` (powers
    of ``1/rho``) and ``rho_terms = (rho, rho^(1-N), rho - N 2^b rho^-N)``.
    """

    @numba.njit(fastmath=True)
    def kernel(f, P, c, eps, ri, rho_terms, theta, scale, b, out):
        N = f.shape[0]
        inv = 1.0 / N
        low = np.zeros(lam - 1 + c.shape[0])
        _top_fold(f, P, c, lam, low)
        # psi needs the top of H first
        J = min(ri.shape[0] - 1, N)
        sH = 0.0
        for j in range(1, J + 1):
            k = N - j
            h = _shifted_at(f, P, lam, k, inv)
            if k < low.shape[0]:
                h += low[k]
            sH += h * ri[j]
        psi = (rho_terms[0] * theta - rho_terms[1] * sH) / rho_terms[2]
        carry = np.int64(0)
        acc = np.uint64(0)
        nacc = 0
        pos = 0
        dist = 0.0
        prev = 0.0
        for j in range(N):
            if j < lam - 1:
                h = _shifted_at(f, P, lam, j, inv)
            else:
                h = f[j]
                for r in range(1, lam):
                    h += _coef(P, r, (j - r) * inv) * f[j - r]
            if j < low.shape[0]:
                h += low[j]
            g = h - eps * prev
            if j < c.shape[0]:
                g -= psi * c[j]
            prev = h
            word, done, acc, nacc, carry, dist = _push(g * scale, acc, nacc, carry, dist, b)
            if done:
                out[pos] = word
                pos += 1
        word, done, acc, nacc, carry, dist = _push((psi - eps * prev) * scale, acc, nacc,
                                                   carry, dist, b)
        if done:
            out[pos] = word
            pos += 1
        if nacc > 0:
            out[pos] = acc
        return carry, dist

    return kernel
