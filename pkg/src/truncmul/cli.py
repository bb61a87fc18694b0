"""Command-line interface: ``mul``, ``mullo``, ``mulhi``, ``bench`` and ``selftest``."""

from __future__ import annotations

import argparse
import sys

from . import oracle
from .bench import (BENCH_POLICIES, BenchReport, bench_size, default_sizes, format_header,
                    format_record)
from .convolution import Backend, is_smooth
from .errors import ConvolutionPrecisionFailure, InputOutOfRange, NoValidParams
from .products import Mode, Params, high_min_N, make_params, product, select_params
from .verify import run_all

EXIT_INPUT, EXIT_PARAMS, EXIT_VERIFY, EXIT_PRECISION, EXIT_SELFTEST = 1, 2, 3, 4, 5

_MODES = {"mul": Mode.FULL, "mullo": Mode.LOW, "mulhi": Mode.HIGH}


class InvalidInput(ValueError):
    pass


def parse_hex(text: str) -> int:
    s = text.strip().lower()
    if s.startswith("0x"):
        s = s[2:]
    if not s or any(c not in "0123456789abcdef" for c in s):
        raise InvalidInput(f"not a hexadecimal number: {text!r}")
    return int(s, 16)


def format_hex(x: int) -> str:
    return format(x, "x")


def _operands(args) -> tuple[int, int]:
    tokens = list(args.operands)
    if not tokens:
        tokens = sys.stdin.read().split()
    if len(tokens) != 2:
        raise InvalidInput(f"expected two operands, got {len(tokens)}")
    return parse_hex(tokens[0]), parse_hex(tokens[1])


def _min_N(n: int, b: int, mode: Mode) -> int:
    if mode is Mode.HIGH:
        return high_min_N(n, b)
    return max(-(-n // b), 2 if mode is Mode.FULL else 3)


def _min_b(n: int, N: int, mode: Mode) -> int:
    b = 1 if mode is Mode.FULL else 4
    while _min_N(n, b, mode) > N:
        b += 1
    return b


def resolve_params(n: int, mode: Mode, backend: Backend, b: int | None, N: int | None,
                   lam: int | None, signed: bool | None) -> Params:
    """Automatic selection, with any of ``b``, ``N``, ``lambda`` overridden."""
    if b is None and N is None:
        params = select_params(n, mode, backend, signed_split=signed)
        if lam is None or params.is_fallback:
            return params
        b, N = params.b, params.N
    elif N is None:
        N = _min_N(n, b, mode)
        while backend is Backend.FFT and not is_smooth(N):
            N += 1
    elif b is None:
        b = _min_b(n, N, mode)
    return make_params(n, mode, backend, b=b, N=N, lam=lam, signed_split=signed)


def _check(u: int, v: int, n: int, mode: Mode, w: int) -> bool:
    if mode is Mode.FULL:
        return w == oracle.oracle_full(u, v)
    if mode is Mode.LOW:
        return w == oracle.oracle_low(u, v, n)
    return w in oracle.oracle_high_set(u, v, n)


def cmd_product(args) -> int:
    mode = _MODES[args.command]
    try:
        u, v = _operands(args)
        n = args.n if args.n is not None else max(u.bit_length(), v.bit_length(), 1)
        if n < 1:
            raise InvalidInput("--n must be positive")
        if u >> n or v >> n:
            raise InvalidInput(f"operands must fit in {n} bits")
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    signed = None if args.signed_split is None else args.signed_split == "on"
    try:
        params = resolve_params(n, mode, Backend(args.backend), args.b, args.N, args.lam, signed)
        w = product(u, v, params, mode)
    except NoValidParams as exc:
        print(f"error: no valid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except InputOutOfRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvolutionPrecisionFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    print(format_hex(w))
    if args.verify and not _check(u, v, n, mode, w):
        print("error: result disagrees with the oracle", file=sys.stderr)
        return EXIT_VERIFY
    return 0


def _sizes(text: str | None) -> list[int]:
    if text is None:
        return default_sizes()
    try:
        sizes = [int(float(s)) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InvalidInput(f"bad --sizes list: {text!r}") from None
    if not sizes or min(sizes) < 1:
        raise InvalidInput("--sizes needs positive integers")
    return sizes


def cmd_bench(args) -> int:
    try:
        sizes = _sizes(args.sizes)
        if args.runs < 1:
            raise InvalidInput("--runs must be >= 1")
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = BenchReport()
    print(format_header())
    status = 0
    for n in sizes:
        try:
            rec = bench_size(n, runs=args.runs, seed=args.seed, policy=args.policy)
        except NoValidParams as exc:
            print(f"{n:>13,}  no valid parameters: {exc}")
            status = EXIT_PARAMS
            continue
        report.records.append(rec)
        print(format_record(rec), flush=True)
        if not rec.oracle_verified:
            status = status or EXIT_VERIFY
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json() + "\n")
    return status


def cmd_selftest(args) -> int:
    results = run_all(args.level, args.seed, report=lambda line: print(line, flush=True))
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed")
    return EXIT_SELFTEST if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="truncmul", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("mul", "full product"), ("mullo", "low product u*v mod 2^n"),
                            ("mulhi", "high product, floor or ceil of u*v / 2^n")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("operands", nargs="*", help="two hex operands (read from stdin if absent)")
        p.add_argument("--n", type=int, help="operand size in bits (default: the longer operand)")
        p.add_argument("--backend", choices=[b.value for b in Backend], default="fft")
        p.add_argument("--b", type=int, help="chunk size override")
        p.add_argument("--N", type=int, help="transform length override")
        p.add_argument("--lambda", dest="lam", type=int, help="series length override")
        p.add_argument("--signed-split", choices=["on", "off"])
        p.add_argument("--verify", action="store_true", help="cross-check against the oracle")
        p.set_defaults(func=cmd_product)
    p = sub.add_parser("bench", help="time truncated products against the full product")
    p.add_argument("--sizes", help="comma-separated operand sizes in bits")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    p.add_argument("--policy", choices=BENCH_POLICIES, default="tuned",
                   help="how transform lengths are ranked (tuned: time the products)")
    p.set_defaults(func=cmd_bench)
    p = sub.add_parser("selftest", help="run the verification suites")
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
