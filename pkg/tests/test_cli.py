import io
import json
import random

import pytest
from hypothesis import given, strategies as st

from truncmul import bench, cli
from truncmul.bench import BenchReport, bench_size, format_record
from truncmul.products import Mode, fft_candidates, select_params


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_mullo(capsys):
    # 0xabc * 0xdef = 0x959184, whose low 12 bits are 0x184
    assert run(capsys, "mullo", "--n", "12", "abc", "def") == (0, "184\n", "")
    assert run(capsys, "mullo", "--n", "12", "--backend", "exact", "--verify", "abc", "def")[:2] == (0, "184\n")


def test_mul(capsys):
    assert run(capsys, "mul", "3", "3")[:2] == (0, "9\n")
    u, v = "f" * 2000, "1" + "0" * 1999
    code, out, _ = run(capsys, "mul", "--verify", u, v)
    assert code == 0 and int(out, 16) == int(u, 16) * int(v, 16)


def test_mulhi(capsys):
    for backend in ("fft", "exact"):
        code, out, _ = run(capsys, "mulhi", "--n", "12", "--backend", backend, "--verify", "fff", "fff")
        assert code == 0 and out in ("ffe\n", "fff\n")
    outs = {run(capsys, "mulhi", "--n", "12", "fff", "fff")[1] for _ in range(3)}
    assert len(outs) == 1


def test_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("abc\ndef\n"))
    assert run(capsys, "mullo", "--n", "12")[:2] == (0, "184\n")


def test_overrides(capsys):
    args = ["--n", "48", "--backend", "exact", "--verify", "abcdef012345", "fedcba987654"]
    assert run(capsys, "mullo", "--b", "6", *args)[0] == 0
    assert run(capsys, "mullo", "--N", "8", *args)[0] == 0
    assert run(capsys, "mulhi", "--b", "8", "--N", "6", "--lambda", "9", *args)[0] == 0
    assert run(capsys, "mul", "--signed-split", "on", *args)[0] == 0
    u = format(random.Random(1).getrandbits(20000), "x")
    assert run(capsys, "mullo", "--b", "14", "--lambda", "6", "--verify", u, u)[0] == 0
    assert run(capsys, "mulhi", "--signed-split", "off", "--verify", u, u)[0] == 0


def test_invalid_input(capsys):
    assert run(capsys, "mul", "xyz", "3")[0] == 1
    assert run(capsys, "mul", "3")[0] == 1
    assert run(capsys, "mullo", "--n", "4", "fff", "1")[0] == 1


def test_no_valid_params(capsys):
    code, _, err = run(capsys, "mullo", "--n", "12", "--b", "3", "--N", "4", "abc", "def")
    assert code == 2 and "no valid parameters" in err


def test_budget_rejection(capsys):
    u = "f" * 25000
    code, _, err = run(capsys, "mul", "--b", "28", u, u)
    assert code == 2 and "double-precision budget" in err


def test_precision_tripwire(capsys):
    # constant chunks defeat the balanced split, so a hand-picked b that fits
    # the uniform-input budget trips the rounding check instead of misrounding
    u = "9" * 5000
    code, out, err = run(capsys, "mullo", "--b", "14", "--lambda", "6", u, u)
    assert code == 4 and out == "" and "tripwire" in err


def test_verify_mismatch(capsys, monkeypatch):
    monkeypatch.setattr(cli, "product", lambda u, v, params, mode: u * v + 1)
    assert run(capsys, "mul", "--verify", "3", "3")[0] == 3


@given(st.integers(0, 2 ** 4000))
def test_hex_round_trip(x):
    assert cli.parse_hex(cli.format_hex(x)) == x
    assert cli.format_hex(x) == cli.format_hex(x).lower()


def test_parse_hex_rejects():
    for bad in ("", "0x", "12g", "-5", "1 2"):
        with pytest.raises(cli.InvalidInput):
            cli.parse_hex(bad)


# bench


def test_bench_fallback_row(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "bench", "--sizes", "1024", "--runs", "5", "--json", str(path))
    assert code == 0 and "oracle fallback" in out
    rec = BenchReport.from_json(path.read_text()).records[0]
    assert rec.n == 1024 and rec.ratio_low is None and rec.t_full is None
    assert rec.params_low["mode"] == Mode.ORACLE_FALLBACK.value and rec.oracle_verified


def test_bench_json_round_trip():
    rec = bench_size(5000, runs=5, policy="model")
    report = BenchReport([rec, rec])
    assert BenchReport.from_json(report.to_json()) == report
    data = json.loads(report.to_json())
    assert set(data["records"][0]) == {"n", "params_low", "params_high", "params_full", "t_low",
                                       "t_high", "t_full", "ratio_low", "ratio_high",
                                       "oracle_verified"}
    assert isinstance(rec.t_low, int) and rec.oracle_verified
    assert rec.ratio_low == rec.t_low / rec.t_full
    assert "5,000" in format_record(rec)


def test_bench_parameter_determinism():
    a = bench_size(6000, runs=5, seed=3, policy="model")
    b = bench_size(6000, runs=5, seed=3, policy="model")
    for key in ("params_low", "params_high", "params_full"):
        assert getattr(a, key) == getattr(b, key)
    assert a.params_low == select_params(6000, Mode.LOW, policy="model").to_dict()


def test_tuned_choices_persist(tmp_path, monkeypatch):
    # the tuned policy times candidates, so repeat runs must reuse its choice
    monkeypatch.setenv("TRUNCMUL_PLAN_CACHE", str(tmp_path))
    monkeypatch.setattr(bench, "_tuned", {})
    monkeypatch.setattr(bench, "TUNE_NS", 0)
    a = bench.bench_size(20000, runs=5, seed=1)
    assert (tmp_path / "bench_tuning.json").exists()
    monkeypatch.setattr(bench, "_tuned", {})
    b = bench.bench_size(20000, runs=5, seed=1)
    for key in ("params_low", "params_high", "params_full"):
        assert getattr(a, key) == getattr(b, key)
        assert getattr(a, key)["N"] in [p.N for p in fft_candidates(20000, getattr(a, key)["mode"])]


def test_bench_rejects_bad_flags(capsys):
    assert run(capsys, "bench", "--sizes", "abc")[0] == 1
    assert run(capsys, "bench", "--sizes", "1024", "--runs", "0")[0] == 1


def test_selftest_quick(capsys):
    code, out, _ = run(capsys, "selftest", "--level", "quick")
    lines = [l for l in out.splitlines() if l.startswith("[")]
    assert len(lines) == 10
    # criterion 6 is a recorded failure (see the decision log); the timing
    # criterion is asserted by the acceptance suite, not here
    failed = {l.split(":")[0] for l in lines if l.startswith("[FAIL]")}
    assert "[FAIL] 6 root and rho" in failed
    assert failed <= {"[FAIL] 6 root and rho", "[FAIL] 10 benchmark ratios"}
    assert code == 5
