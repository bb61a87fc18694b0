"""Self-test suites: each acceptance criterion as a function returning a verdict.

``level="full"`` runs every suite at the sizes and tolerances of the
acceptance criteria; ``level="quick"`` shrinks the sample counts and the
benchmark so the whole run fits in about a minute.  Every suite is
deterministic given its seed.
"""

from __future__ import annotations

import os
import random
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath

from . import oracle
from .bench import PUBLISHED_RATIOS, BenchReport, format_record
from .convolution import Backend, FixedPolynomial, Modulus, cyclic_convolve, make_plan
from .maps import (apply_alpha_star, apply_beta_star, apply_delta_dagger, apply_gamma_dagger,
                   compute_rho, get_context)
from .numerics import FixedReal, lg, round_shift
from .oracle import InputKind
from .products import Mode, make_params, product, working_precision
from .series import Family, SeriesFamily, power_series, series_coeff


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _quick(level: str) -> bool:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown level {level!r}")
    return level == "quick"


def _pairs(n: int, uniform: int, adversarial: int, b: int, seed: int) -> list[tuple[int, int]]:
    return (oracle.gen_inputs(n, uniform, InputKind.UNIFORM, seed)
            + oracle.gen_inputs(n, adversarial, InputKind.ADVERSARIAL, seed, b=b)
            + oracle.gen_inputs(n, None, InputKind.STRUCTURED))


_TRUNC_GRID = [(b, N) for b in (4, 6, 8) for N in (3, 4, 8, 16, 64)]


def _sweep(mode: Mode, level: str, seed: int) -> tuple[bool, str]:
    quick = _quick(level)
    uniform, adversarial = (20, 5) if quick else (1000, 50)
    total = bad = 0
    first = ""
    for b, N in _TRUNC_GRID:
        n = N * b if mode is Mode.LOW else (N + 1) * b - lg(N) - 2
        params = make_params(n, mode, Backend.EXACT, b=b, N=N)
        for u, v in _pairs(n, uniform, adversarial, b, seed):
            w = product(u, v, params)
            ok = (w == oracle.oracle_low(u, v, n) if mode is Mode.LOW
                  else w in oracle.oracle_high_set(u, v, n))
            total += 1
            if not ok:
                bad += 1
                first = first or f"b={b} N={N} u={u:#x} v={v:#x} got {w:#x}"
    detail = f"{total} pairs over {len(_TRUNC_GRID)} cells, {bad} mismatches"
    return bad == 0, detail + (f"; first: {first}" if first else "")


def suite_low_exact(level: str = "full", seed: int = 0):
    """Criterion 1: exact-backend low product against ``oracle_low``."""
    return _sweep(Mode.LOW, level, seed)


def suite_high_exact(level: str = "full", seed: int = 0):
    """Criterion 2: exact-backend high product lands in ``oracle_high_set``."""
    return _sweep(Mode.HIGH, level, seed)


def suite_full_exact(level: str = "full", seed: int = 0):
    """Criterion 3: exact-backend full product against ``oracle_full``."""
    count = 30 if _quick(level) else 1000
    total = bad = 0
    for b in (1, 4, 8):
        for N in (2, 16, 64):
            n = N * b
            params = make_params(n, Mode.FULL, Backend.EXACT, b=b, N=N)
            for u, v in oracle.gen_inputs(n, count, InputKind.UNIFORM, seed):
                total += 1
                bad += product(u, v, params) != oracle.oracle_full(u, v)
    return bad == 0, f"{total} pairs over 9 cells, {bad} mismatches"


def _random_poly(rng: random.Random, N: int, p: int, e: int, kind: Modulus) -> FixedPolynomial:
    bound = 1 << p
    return FixedPolynomial(tuple(rng.randint(-bound, bound) for _ in range(N)), p, e, kind)


def suite_convolution(level: str = "full", seed: int = 0):
    """Criterion 4: exact convolution within ``2^(2e + lg N - p)`` of the naive dyadic sum."""
    count = 25 if _quick(level) else 500
    rng = random.Random(f"convolution:{seed}")
    worst = Fraction(0)
    bad = 0
    for N in (8, 64):
        plan = make_plan(N, Backend.EXACT)
        for p in (32, 96):
            for _ in range(count):
                e = rng.randint(-3, 3)
                F = _random_poly(rng, N, p, e, Modulus.cyclic(N))
                G = _random_poly(rng, N, p, e, Modulus.cyclic(N))
                H = oracle.cyclic_convolution_exact(F.values(), G.values())
                Ht = cyclic_convolve(plan, F, G).values()
                err = max(abs(a - c) for a, c in zip(Ht, H)) / Fraction(2) ** (2 * e + lg(N) - p)
                worst = max(worst, err)
                bad += err >= 1
    return bad == 0, f"{4 * count} instances, worst error {float(worst):.3f} of the bound"


def suite_series_bounds(level: str = "full", seed: int = 0):
    """Criterion 5: coefficient bounds for all four families, ``r <= 8``."""
    checked = bad = 0
    for b in (4, 8, 16):
        for N in (3, 12, 64):
            for tag in Family:
                fam = SeriesFamily(tag, b, N)
                slack = 2 if tag in (Family.ALPHA, Family.GAMMA) else 0
                for r in range(9):
                    bound = Fraction(1, 1 << (r * (b - slack)))
                    for k in range(N):
                        checked += 1
                        bad += abs(series_coeff(fam, r, k)) > bound
    return bad == 0, f"{checked} coefficients, {bad} violations"


RHO_CASES = ((3, 4), (12, 4), (12, 8), (32, 8))
ROOT_LAMBDA = 8
ROOT_TOL = Fraction(1, 1 << 40)


def alpha_root_residual(N: int, b: int, lam: int = ROOT_LAMBDA, dps: int = 60) -> mpmath.mpf:
    """``max_z |A(alpha_lam(z))|`` over the ``N``-th roots of unity, where
    ``alpha_lam`` is the series ``alpha`` cut after ``lam`` terms."""
    coeffs = power_series(SeriesFamily(Family.ALPHA, b, N), lam)
    worst = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for j in range(N):
            z = mpmath.expjpi(mpmath.mpf(2 * j) / N)
            w = sum(mpmath.mpf(c.numerator) / c.denominator * z ** i
                    for i, c in enumerate(coeffs) if c)
            worst = max(worst, abs(w ** N + w / mpmath.mpf(2) ** b - 1))
    return worst


def suite_rho(level: str = "full", seed: int = 0):
    """Criterion 6: the root of ``B`` and the alpha images of the roots of unity."""
    problems = []
    residuals = []
    for N, b in RHO_CASES:
        rho = compute_rho(b, N, N * b + 64).to_fraction()
        lo = Fraction(1 << b) * (1 - Fraction(1, 1 << (N * b - 1)))
        if not lo < rho < (1 << b):
            problems.append(f"rho outside the interval at (N, b) = ({N}, {b})")
        ratio = rho ** N / Fraction(2) ** (N * b)
        if not Fraction(998, 1000) < ratio < 1:
            problems.append(f"rho^N / 2^(Nb) = {float(ratio)} at ({N}, {b})")
        res = alpha_root_residual(N, b)
        residuals.append(f"({N},{b}) 2^{float(mpmath.log(res, 2)):.1f}" if res else f"({N},{b}) 0")
        if not res < mpmath.mpf(ROOT_TOL.numerator) / ROOT_TOL.denominator:
            problems.append(f"|A(alpha(z))| = 2^{float(mpmath.log(res, 2)):.1f} >= 2^-40 at ({N}, {b})")
    detail = "root residuals " + ", ".join(residuals)
    return not problems, detail + ("; " + "; ".join(problems) if problems else "")


def suite_cancellation(level: str = "full", seed: int = 0):
    """Criterion 7: the low and high cancellation identities on random integer ``W``."""
    count = 20 if _quick(level) else 200
    rng = random.Random(f"cancel:{seed}")
    bad = 0
    for N, b in ((8, 4), (16, 8)):
        bound = 1 << (2 * b + lg(N))
        x = 1 << b
        for _ in range(count):
            W = [rng.randint(-bound + 1, bound - 1) for _ in range(2 * N - 1)]
            L = oracle.reduce_mod_A_exact(W, b, N)
            integral = all((c * x).denominator == 1 for c in L)
            Lx = oracle.poly_eval(L, x)
            Wx = oracle.poly_eval(W, x)
            bad += not (integral and Lx.denominator == 1 and (Lx - Wx) % (1 << (N * b)) == 0)
            W = [rng.randint(-bound + 1, bound - 1) for _ in range(2 * N + 1)]
            H = oracle.reduce_mod_B_exact(W, b, N)
            integral = all((c * x).denominator == 1 for c in H)
            lhs = abs(oracle.poly_eval(W, x) - (1 << (N * b)) * oracle.poly_eval(H, x))
            rhs = (1 << ((N - 1) * b + 1)) * max(abs(w) for w in W[:N])
            bad += not (integral and lhs <= rhs)
    return bad == 0, f"{4 * count} identities, {bad} violations"


def _norm(P) -> Fraction:
    return max(abs(c) for c in P)


def suite_maps(level: str = "full", seed: int = 0):
    """Criterion 8: ``beta* alpha*`` round trip and ``delta_dagger`` multiplicativity (exact)."""
    count = 10 if _quick(level) else 100
    rng = random.Random(f"maps:{seed}")
    worst_rt = worst_mul = 0.0
    bad = 0
    for i in range(count):
        N = rng.choice((3, 4, 8, 12, 16))
        b = rng.choice((4, 6, 8))
        # round trip at exponent 0 with the low product's precision
        p = working_precision(Mode.LOW, b, N)
        ctx = get_context(b, N, p)
        F = _random_poly(rng, N, p, 0, Modulus.A(b, N))
        G = apply_beta_star(ctx, apply_alpha_star(ctx, F))
        err = _norm([g - f for g, f in zip(G.values(), F.values())]) * Fraction(2) ** (p - 3)
        worst_rt = max(worst_rt, float(err))
        bad += err >= 1
        # multiplicativity with the high product's precision, chunk scaling
        p = working_precision(Mode.HIGH, b, N)
        ctx = get_context(b, N, p)
        mod = Modulus.B(b, N)
        u = [rng.randrange(1 << b) for _ in range(N + 1)]
        v = [rng.randrange(1 << b) for _ in range(N + 1)]
        U = FixedPolynomial.from_integers(u, p, b, mod)
        V = FixedPolynomial.from_integers(v, p, b, mod)
        (Ut, cu), (Vt, cv) = apply_gamma_dagger(ctx, U), apply_gamma_dagger(ctx, V)
        Wt = cyclic_convolve(make_plan(N, Backend.EXACT), Ut, Vt)
        theta = FixedReal(round_shift(cu.theta.mantissa * cv.theta.mantissa, p + lg(N)),
                          p, Wt.exponent)
        Wb = apply_delta_dagger(ctx, Wt, theta)
        UV = [0] * (2 * N + 1)
        for a, ua in enumerate(u):
            for c, vc in enumerate(v):
                UV[a + c] += ua * vc
        exact = oracle.reduce_mod_B_exact(UV, b, N)
        # budget 208 * 2^(2b + lg N - p) for unit-scaled U, V; chunk scaling adds 2^(2b)
        budget = 208 * Fraction(2) ** (4 * b + lg(N) - p)
        err = _norm([w - x for w, x in zip(Wb.values(), exact)]) / budget
        worst_mul = max(worst_mul, float(err))
        bad += err >= 1
    return bad == 0, (f"{count} instances each; worst round trip {worst_rt:.3f} of 2^(e+3-p), "
                      f"worst multiplicativity {worst_mul:.2e} of the budget")


# Table 1 parameters at n = 10^6.
PUBLISHED_N = 10 ** 6
PUBLISHED_TRUNC = dict(b=14, N=2 ** 11 * 35, lam=4)
PUBLISHED_FULL = dict(b=21, N=2 ** 14 * 3)


def suite_fft_published_params(level: str = "full", seed: int = 0):
    """Criterion 9: FFT products at the published ``n = 10^6`` parameters."""
    count = 5 if _quick(level) else 100
    n = PUBLISHED_N
    params = {Mode.LOW: make_params(n, Mode.LOW, Backend.FFT, **PUBLISHED_TRUNC),
              Mode.HIGH: make_params(n, Mode.HIGH, Backend.FFT, **PUBLISHED_TRUNC),
              Mode.FULL: make_params(n, Mode.FULL, Backend.FFT, **PUBLISHED_FULL)}
    bad = {m: 0 for m in params}
    for u, v in oracle.gen_inputs(n, count, InputKind.UNIFORM, seed):
        full = oracle.oracle_full(u, v)
        bad[Mode.FULL] += product(u, v, params[Mode.FULL]) != full
        bad[Mode.LOW] += product(u, v, params[Mode.LOW]) != full & ((1 << n) - 1)
        bad[Mode.HIGH] += product(u, v, params[Mode.HIGH]) not in oracle.oracle_high_set(u, v, n)
    detail = ", ".join(f"{m.value} {count - k}/{count}" for m, k in bad.items())
    return not any(bad.values()), detail


BENCH_SIZES = (10 ** 6, 10 ** 7)


def run_bench_process(sizes, runs: int = 5, seed: int = 0, policy: str = "tuned") -> BenchReport:
    """``truncmul bench`` in a fresh interpreter, as a user would run it.

    Timings then do not depend on what the calling process did before (heap
    layout, allocator thresholds, compiled kernels left around).
    """
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "bench.json")
        cmd = [sys.executable, "-m", "truncmul", "bench", "--sizes", ",".join(map(str, sizes)),
               "--runs", str(runs), "--seed", str(seed), "--policy", policy, "--json", path]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode not in (0, 3) or not os.path.exists(path):
            raise RuntimeError(f"bench exited with {proc.returncode}: {proc.stderr.strip()}")
        with open(path) as fh:
            return BenchReport.from_json(fh.read())


def suite_benchmark(level: str = "full", seed: int = 0, runs: int = 5,
                    policy: str = "tuned"):
    """Criterion 10: median ``ratio_low`` and ``ratio_high`` below 1 at ``n = 10^6, 10^7``."""
    sizes = BENCH_SIZES[:1] if _quick(level) else BENCH_SIZES
    ok = True
    parts = []
    for rec in run_bench_process(sizes, runs, seed, policy).records:
        n = rec.n
        print(format_record(rec))
        ref_ratio = PUBLISHED_RATIOS[n]
        ok &= rec.oracle_verified and rec.ratio_low < 1.0 and rec.ratio_high < 1.0
        parts.append(f"n={n}: low {rec.ratio_low:.3f} (published {ref_ratio[0]}), "
                     f"high {rec.ratio_high:.3f} (published {ref_ratio[1]})")
    return ok, "; ".join(parts)


SUITES: dict[str, Callable] = {
    "1 low product (exact)": suite_low_exact,
    "2 high product (exact)": suite_high_exact,
    "3 full product (exact)": suite_full_exact,
    "4 convolution contract": suite_convolution,
    "5 series bounds": suite_series_bounds,
    "6 root and rho": suite_rho,
    "7 cancellation identities": suite_cancellation,
    "8 map round trips": suite_maps,
    "9 FFT at published parameters": suite_fft_published_params,
    "10 benchmark ratios": suite_benchmark,
}


def run_suite(name: str, level: str = "full", seed: int = 0, **kw) -> SuiteResult:
    t0 = time.perf_counter()
    try:
        passed, detail = SUITES[name](level, seed, **kw)
    except Exception as exc:  # a crash is a failed suite, reported like one
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return SuiteResult(name, bool(passed), detail, time.perf_counter() - t0)


def run_all(level: str = "quick", seed: int = 0, report=print) -> list[SuiteResult]:
    results = []
    for name in SUITES:
        res = run_suite(name, level, seed)
        if report is not None:
            report(res.line())
        results.append(res)
    return results
