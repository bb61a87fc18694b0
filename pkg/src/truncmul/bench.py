"""Timing harness comparing low and high products against the full product."""

from __future__ import annotations

import json
import os
import statistics
import time
from dataclasses import asdict, dataclass, field

from . import oracle
from pathlib import Path

from .convolution import PLAN_CACHE_ENV, Backend
from .products import POLICIES, Mode, Params, fft_candidates, make_params, product, select_params

# Published ratios (low, high) against the full product, keyed by n.
PUBLISHED_RATIOS = {
    1_000_000: (0.88, 0.91),
    2_154_434: (0.91, 0.94),
    4_641_588: (0.91, 0.92),
    10_000_000: (0.85, 0.90),
    21_544_346: (0.89, 0.92),
    46_415_888: (0.88, 0.89),
    100_000_000: (0.83, 0.84),
    215_443_469: (0.87, 0.89),
    464_158_883: (0.86, 0.88),
    1_000_000_000: (0.77, 0.79),
    2_154_434_690: (0.81, 0.84),
}

LADDER = tuple(sorted(PUBLISHED_RATIOS))

# The default ladder stops here: beyond it the quadratic-ish oracle check
# dominates the run time.
DEFAULT_MAX_N = 10_000_000

# Rough peak memory of one benchmark size, in bytes per operand bit.
_BYTES_PER_BIT = 16

MODES = (Mode.LOW, Mode.HIGH, Mode.FULL)

# Each timed run repeats a call until it covers about this long, so that
# millisecond-scale products are not at the mercy of a single scheduler tick.
MIN_RUN_NS = 100_000_000  # per mode

# "tuned" picks each mode's transform length by timing the products themselves
# on every candidate, for about this long in total.
TUNE_NS = 1_000_000_000
BENCH_POLICIES = POLICIES + ("tuned",)


@dataclass
class BenchRecord:
    n: int
    params_low: dict
    params_high: dict
    params_full: dict
    t_low: int | None
    t_high: int | None
    t_full: int | None
    ratio_low: float | None
    ratio_high: float | None
    oracle_verified: bool


@dataclass
class BenchReport:
    records: list[BenchRecord] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"records": [asdict(r) for r in self.records]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "BenchReport":
        data = json.loads(text)
        return cls([BenchRecord(**r) for r in data["records"]])


def available_memory() -> int | None:
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return None


def default_sizes(max_n: int = DEFAULT_MAX_N) -> list[int]:
    """The geometric ladder from 10^6, capped by ``max_n`` and by free memory."""
    mem = available_memory()
    return [n for n in LADDER
            if n <= max_n and (mem is None or n * _BYTES_PER_BIT < mem)]


def _verify(u: int, v: int, n: int, results: dict) -> bool:
    full = oracle.oracle_full(u, v)
    return (results[Mode.FULL] == full
            and results[Mode.LOW] == full & ((1 << n) - 1)
            and results[Mode.HIGH] in oracle.oracle_high_set(u, v, n))


# Tuned transform lengths, keyed by n; persisted next to the FFT wisdom when
# TRUNCMUL_PLAN_CACHE is set, so that repeated runs choose the same parameters.
_tuned: dict[int, dict[str, int]] = {}


def _tuning_file() -> Path | None:
    d = os.environ.get(PLAN_CACHE_ENV)
    return Path(d) / "bench_tuning.json" if d else None


def _load_tuning(n: int) -> dict[str, int] | None:
    if n in _tuned:
        return _tuned[n]
    path = _tuning_file()
    if path is not None and path.exists():
        try:
            entry = json.loads(path.read_text()).get(str(n))
        except (OSError, ValueError):
            entry = None
        if entry:
            _tuned[n] = {k: int(x) for k, x in entry.items()}
            return _tuned[n]
    return None


def _save_tuning(n: int, choice: dict[str, int]):
    _tuned[n] = choice
    path = _tuning_file()
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        data = json.loads(path.read_text()) if path.exists() else {}
    except (OSError, ValueError):
        data = {}
    data[str(n)] = choice
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(data, indent=1, sort_keys=True))
    tmp.replace(path)


def tune_params(u: int, v: int, n: int, backend: Backend | str = Backend.FFT,
                min_rounds: int = 3, max_rounds: int = 25) -> dict[Mode, Params]:
    """Fastest candidate parameters per mode, by timing products on ``(u, v)``.

    All candidates of all three modes are timed round-robin and ranked by
    their median, so machine noise falls on every candidate alike.  The
    choice is remembered per ``n`` (see ``TRUNCMUL_PLAN_CACHE``).
    """
    params = {m: select_params(n, m, backend) for m in MODES}
    if Backend(backend) is not Backend.FFT or params[Mode.FULL].is_fallback:
        return params
    known = _load_tuning(n)
    if known is not None:
        return {m: make_params(n, m, Backend.FFT, b=params[m].b, N=known[m.value])
                for m in MODES}
    cands = [(m, p) for m in MODES for p in fft_candidates(n, m)]
    for m, p in cands:
        product(u, v, p, m)
    times: list[list[int]] = [[] for _ in cands]
    start = time.perf_counter_ns()
    rounds = 0
    while rounds < min_rounds or (rounds < max_rounds
                                  and time.perf_counter_ns() - start < TUNE_NS):
        for ts, (m, p) in zip(times, cands):
            t0 = time.perf_counter_ns()
            product(u, v, p, m)
            ts.append(time.perf_counter_ns() - t0)
        rounds += 1
    for m in MODES:
        ranked = [(statistics.median(ts), p.N, p) for ts, (mm, p) in zip(times, cands) if mm is m]
        params[m] = min(ranked, key=lambda r: r[:2])[2]
    _save_tuning(n, {m.value: params[m].N for m in MODES})
    return params


def bench_size(n: int, runs: int = 5, seed: int = 0, policy: str = "tuned",
               backend: Backend | str = Backend.FFT) -> BenchRecord:
    """Median timings of the three products on one ``UNIFORM`` pair.

    A warm-up call per mode is discarded (its results are the ones checked
    against the oracle); the timed calls are interleaved across the modes so
    drift affects all three alike.  Fast products are repeated within each
    run (still interleaved call by call) and the per-call average is recorded.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if policy not in BENCH_POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    u, v = oracle.gen_inputs(n, 1, oracle.InputKind.UNIFORM, seed)[0]
    if policy == "tuned":
        params = tune_params(u, v, n, backend)
    else:
        params = {m: select_params(n, m, backend, policy=policy) for m in MODES}
    t0 = time.perf_counter_ns()
    results = {m: product(u, v, params[m], m) for m in MODES}
    reps = max(1, MIN_RUN_NS * len(MODES) // max(1, time.perf_counter_ns() - t0))
    times: dict[Mode, list[int]] = {m: [] for m in MODES}
    if not params[Mode.FULL].is_fallback:
        for _ in range(runs):
            total = dict.fromkeys(MODES, 0)
            for _ in range(reps):
                for m in MODES:
                    t0 = time.perf_counter_ns()
                    product(u, v, params[m], m)
                    total[m] += time.perf_counter_ns() - t0
            for m in MODES:
                times[m].append(total[m] // reps)
    med = {m: int(statistics.median(ts)) if ts else None for m, ts in times.items()}
    ratio = {m: (med[m] / med[Mode.FULL] if med[m] is not None else None)
             for m in (Mode.LOW, Mode.HIGH)}
    return BenchRecord(
        n=n,
        params_low=params[Mode.LOW].to_dict(),
        params_high=params[Mode.HIGH].to_dict(),
        params_full=params[Mode.FULL].to_dict(),
        t_low=med[Mode.LOW], t_high=med[Mode.HIGH], t_full=med[Mode.FULL],
        ratio_low=ratio[Mode.LOW], ratio_high=ratio[Mode.HIGH],
        oracle_verified=_verify(u, v, n, results),
    )


def run_bench(sizes=None, runs: int = 5, seed: int = 0, policy: str = "tuned",
              backend: Backend | str = Backend.FFT, progress=None) -> BenchReport:
    report = BenchReport()
    for n in sizes or default_sizes():
        rec = bench_size(n, runs, seed, policy, backend)
        report.records.append(rec)
        if progress is not None:
            progress(rec)
    return report


def _ms(ns: int | None) -> str:
    return "-" if ns is None else f"{ns / 1e6:.2f}ms"


def _ratio(x: float | None) -> str:
    return "-" if x is None else f"{x:.2f}"


def _params(d: dict) -> str:
    if d["mode"] == Mode.ORACLE_FALLBACK.value:
        return "oracle fallback"
    if d["mode"] == Mode.FULL.value:
        return f"N={d['N']} b={d['b']}"
    return f"N={d['N']} b={d['b']} lam={d['lam']}"


def format_record(r: BenchRecord) -> str:
    pub = PUBLISHED_RATIOS.get(r.n)
    ref = f"(published {pub[0]:.2f} / {pub[1]:.2f})" if pub else ""
    return (f"{r.n:>13,}  {_params(r.params_low):<26} {_ms(r.t_low):>10} {_ms(r.t_high):>10}"
            f"  {_params(r.params_full):<16} {_ms(r.t_full):>10}"
            f"  low {_ratio(r.ratio_low)} high {_ratio(r.ratio_high)} {ref}"
            f"  {'verified' if r.oracle_verified else 'ORACLE MISMATCH'}")


def format_header() -> str:
    return (f"{'n':>13}  {'truncated params':<26} {'low':>10} {'high':>10}"
            f"  {'full params':<16} {'full':>10}  ratios")


def format_report(report: BenchReport) -> str:
    return "\n".join([format_header()] + [format_record(r) for r in report.records])
