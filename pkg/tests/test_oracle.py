import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from truncmul import oracle
from truncmul.errors import DegreeTooLarge
from truncmul.oracle import InputKind


def test_full_examples():
    assert oracle.oracle_full(3, 3) == 9
    n = 77
    assert oracle.oracle_full((1 << n) - 1, (1 << n) - 1) == (1 << 2 * n) - (1 << n + 1) + 1


def test_full_against_native_width():
    rng = random.Random(3)
    for _ in range(100):
        u, v = rng.getrandbits(64), rng.getrandbits(64)
        # schoolbook on 32-bit halves, independent of Python's big multiply
        lo = lambda x: x & 0xFFFFFFFF
        hi = lambda x: x >> 32
        t = lo(u) * lo(v) + ((lo(u) * hi(v) + hi(u) * lo(v)) << 32) + ((hi(u) * hi(v)) << 64)
        assert oracle.oracle_full(u, v) == t < 1 << 128


def test_low_examples():
    assert oracle.oracle_low(1, 1, 8) == 1
    assert oracle.oracle_low(1 << 15, 2, 16) == 0
    assert oracle.oracle_low(0xABC, 0xDEF, 12) == 0x184


def test_high_set_examples():
    assert oracle.oracle_high_set(0, 0, 12) == {0}
    assert oracle.oracle_high_set(1 << 6, 1 << 6, 12) == {1}
    assert oracle.oracle_high_set(4095, 4095, 12) == {4094, 4095}


@given(st.integers(1, 200).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, 2 ** n - 1), st.integers(0, 2 ** n - 1))))
def test_high_set_definition(args):
    n, u, v = args
    s = oracle.oracle_high_set(u, v, n)
    assert 1 <= len(s) <= 2
    for w in s:
        assert 0 <= w <= 1 << n and abs(u * v - (w << n)) < 1 << n
    ceil = -(-u * v >> n)
    if ceil <= 1 << n:
        assert ceil in s


def test_reduce_mod_A_examples():
    b, N = 4, 5
    XN = [0] * N + [1]
    assert oracle.reduce_mod_A_exact(XN, b, N) == [1, Fraction(-1, 16), 0, 0, 0]
    assert oracle.reduce_mod_A_exact([1], b, N) == [1, 0, 0, 0, 0]
    with pytest.raises(DegreeTooLarge):
        oracle.reduce_mod_A_exact([0] * (2 * N), b, N)


def test_reduce_mod_B_examples():
    b, N = 4, 5
    XN = [0] * N + [1]
    assert oracle.reduce_mod_B_exact(XN, b, N) == [1, 0, 0, 0, 0, 0]
    assert oracle.reduce_mod_B_exact([1], b, N) == [1, Fraction(-1, 16), 0, 0, 0, 0]
    with pytest.raises(DegreeTooLarge):
        oracle.reduce_mod_B_exact([0] * (2 * N + 2), b, N)


@given(st.sampled_from([(3, 4), (8, 4), (5, 6), (16, 8)]), st.data())
def test_low_cancel(bN, data):
    N, b = bN
    bound = 1 << (2 * b + (N - 1).bit_length())
    W = data.draw(st.lists(st.integers(-bound + 1, bound - 1), min_size=1, max_size=2 * N - 1))
    L = oracle.reduce_mod_A_exact(W, b, N)
    assert all((c * (1 << b)).denominator == 1 for c in L)
    diff = oracle.poly_eval(L, 1 << b) - oracle.poly_eval(W, 1 << b)
    assert diff.denominator == 1 and diff % (1 << N * b) == 0


@given(st.sampled_from([(3, 4), (8, 4), (5, 6), (16, 8)]), st.data())
def test_high_cancel(bN, data):
    N, b = bN
    bound = 1 << (2 * b + (N - 1).bit_length())
    W = data.draw(st.lists(st.integers(-bound + 1, bound - 1), min_size=2 * N + 1, max_size=2 * N + 1))
    H = oracle.reduce_mod_B_exact(W, b, N)
    assert all((c * (1 << b)).denominator == 1 for c in H)
    x = 1 << b
    lhs = abs(oracle.poly_eval(W, x) - (1 << N * b) * oracle.poly_eval(H, x))
    assert lhs <= (1 << (N - 1) * b + 1) * max(abs(w) for w in W[:N])


def test_cyclic_convolution_exact():
    assert oracle.cyclic_convolution_exact([1, 0, 0], [5, 6, 7]) == [5, 6, 7]
    assert oracle.cyclic_convolution_exact([1, 1, 1], [1, 1, 1]) == [3, 3, 3]
    assert oracle.cyclic_convolution_exact([0, 1], [Fraction(1, 2), 3]) == [3, Fraction(1, 2)]


def test_gen_inputs_structured():
    n = 40
    pairs = oracle.gen_inputs(n, None, InputKind.STRUCTURED)
    assert (0, 0) in pairs and ((1 << n) - 1, (1 << n) - 1) in pairs
    assert all(0 <= u < 1 << n and 0 <= v < 1 << n for u, v in pairs)


def test_gen_inputs_reproducible():
    assert oracle.gen_inputs(100, 5, "uniform", seed=4) == oracle.gen_inputs(100, 5, "uniform", seed=4)
    assert oracle.gen_inputs(100, 5, "uniform", seed=4) != oracle.gen_inputs(100, 5, "uniform", seed=5)


def test_gen_inputs_adversarial():
    b, n = 6, 60
    u, v = oracle.gen_inputs(n, 3, InputKind.ADVERSARIAL, b=b)[0]
    assert u == v == (1 << n) - 1   # every chunk 2^b - 1
    for u, v in oracle.gen_inputs(n, 10, InputKind.ADVERSARIAL, b=b):
        chunks = [(u >> (i * b)) & 63 for i in range(n // b)]
        assert min(chunks) >= 60
    with pytest.raises(ValueError):
        oracle.gen_inputs(n, 3, InputKind.ADVERSARIAL)
