import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from truncmul import oracle
from truncmul.convolution import (EXACT_MAX_LENGTH, Backend, FixedPolynomial, Modulus,
                                  ModulusKind, convolve_rows, cyclic_convolve,
                                  factorize_smooth, is_smooth, make_plan, real_dft_forward,
                                  real_dft_inverse)
from truncmul.errors import PlanMismatch, PrecisionUnsupported, UnsupportedLength
from truncmul.numerics import lg


def poly(values, p=20, e=0, N=None):
    N = N or len(values)
    return FixedPolynomial.from_values(values, p, e, Modulus.cyclic(N))


def random_poly(rng, N, p, e=0):
    return FixedPolynomial(tuple(rng.randint(-(1 << p), 1 << p) for _ in range(N)), p, e,
                           Modulus.cyclic(N))


def test_identity_and_ones():
    plan = make_plan(3, Backend.EXACT)
    G = poly([Fraction(1, 4), Fraction(-1, 2), Fraction(3, 8)])
    H = cyclic_convolve(plan, poly([1, 0, 0]), G)
    assert H.values() == G.values()
    assert H.exponent == lg(3)
    ones = poly([Fraction(1)] * 3)
    assert cyclic_convolve(plan, ones, ones).values() == [3, 3, 3]


def test_random_against_naive():
    rng = random.Random(11)
    plan = make_plan(16, Backend.EXACT)
    for _ in range(50):
        p, e = 40, 3
        F, G = random_poly(rng, 16, p, e), random_poly(rng, 16, p, e)
        H = oracle.cyclic_convolution_exact(F.values(), G.values())
        Ht = cyclic_convolve(plan, F, G)
        bound = Fraction(2) ** (2 * e + lg(16) - p)
        assert max(abs(a - b) for a, b in zip(Ht.values(), H)) < bound


def test_fft_backend_matches_exact():
    rng = random.Random(5)
    for N in (8, 60, 1024, 4096):
        p = 40
        F, G = random_poly(rng, N, p), random_poly(rng, N, p)
        exact = cyclic_convolve(make_plan(N, Backend.EXACT), F, G).values()
        fft = cyclic_convolve(make_plan(N, Backend.FFT), F, G).values()
        bound = Fraction(2) ** (lg(N) - p)
        assert max(abs(a - b) for a, b in zip(exact, fft)) < bound


def test_bilinear_and_shift():
    rng = random.Random(9)
    N, p = 12, 30
    plan = make_plan(N, Backend.EXACT)
    ulp = Fraction(2) ** (lg(N) - p)
    for _ in range(20):
        # halves, so that F + F2 stays in R_p
        F, F2 = (FixedPolynomial(tuple(m // 2 for m in random_poly(rng, N, p).mantissas), p, 0,
                                 Modulus.cyclic(N)) for _ in range(2))
        G = random_poly(rng, N, p)
        S = FixedPolynomial(tuple(a + b for a, b in zip(F.mantissas, F2.mantissas)), p, 0,
                            Modulus.cyclic(N))
        lhs = cyclic_convolve(plan, S, G).values()
        rhs = [a + b for a, b in zip(cyclic_convolve(plan, F, G).values(),
                                     cyclic_convolve(plan, F2, G).values())]
        assert max(abs(a - b) for a, b in zip(lhs, rhs)) <= 3 * ulp / 2
        XF = FixedPolynomial(F.mantissas[-1:] + F.mantissas[:-1], p, 0, Modulus.cyclic(N))
        H, XH = cyclic_convolve(plan, F, G).values(), cyclic_convolve(plan, XF, G).values()
        assert XH == H[-1:] + H[:-1]


def test_plan_checks():
    plan = make_plan(4, Backend.EXACT)
    with pytest.raises(PlanMismatch):
        cyclic_convolve(plan, poly([1, 0, 0]), poly([1, 0, 0]))
    with pytest.raises(PlanMismatch):
        cyclic_convolve(plan, poly([1, 0, 0, 0]), poly([1, 0, 0, 0], p=21))
    A = FixedPolynomial((0, 0, 0, 0), 20, 0, Modulus.A(4, 4))
    with pytest.raises(PlanMismatch):
        cyclic_convolve(plan, A, A)
    with pytest.raises(UnsupportedLength):
        make_plan(1)
    with pytest.raises(UnsupportedLength):
        make_plan(EXACT_MAX_LENGTH + 1, Backend.EXACT)
    with pytest.raises(UnsupportedLength):
        make_plan(22, Backend.FFT)
    fplan = make_plan(4, Backend.FFT)
    F = poly([1, 0, 0, 0], p=60)
    with pytest.raises(PrecisionUnsupported):
        cyclic_convolve(fplan, F, F)


def test_moduli():
    assert Modulus.cyclic(5).degree == 5
    assert Modulus.A(4, 5).degree == 5
    assert Modulus.B(4, 5).degree == 6
    assert Modulus.C(4, 5).kind is ModulusKind.C


def test_fixed_polynomial_invariants():
    with pytest.raises(ValueError):
        FixedPolynomial((1, 2), 4, 0, Modulus.cyclic(3))
    with pytest.raises(OverflowError):
        FixedPolynomial((17, 0, 0), 4, 0, Modulus.cyclic(3))
    F = FixedPolynomial.from_integers([3, -5, 1], 10, 4, Modulus.cyclic(3))
    assert F.values() == [3, -5, 1]
    assert F.norm() == 5


def test_smoothness():
    assert is_smooth(2 ** 11 * 35) and is_smooth(1) and not is_smooth(22)
    assert factorize_smooth(2 ** 12 * 189) == {2: 12, 3: 3, 5: 0, 7: 1}
    with pytest.raises(UnsupportedLength):
        factorize_smooth(13)


def test_dft_examples():
    plan = make_plan(4, Backend.FFT)
    assert np.allclose(real_dft_forward(plan, [1, 1, 1, 1]), [4, 0, 0])
    assert np.allclose(real_dft_forward(plan, [1, 0, 0, 0]), [1, 1, 1])
    assert np.array_equal(real_dft_inverse(plan, real_dft_forward(plan, np.zeros(4))), np.zeros(4))
    assert np.allclose(real_dft_inverse(plan, [4, 0, 0]), np.ones(4))
    with pytest.raises(UnsupportedLength):
        real_dft_forward(plan, np.zeros(5))
    with pytest.raises(UnsupportedLength):
        real_dft_inverse(plan, np.zeros(4))


def test_dft_against_naive():
    N = 60
    x = np.random.default_rng(0).standard_normal(N)
    j = np.arange(N)
    naive = np.array([np.sum(x * np.exp(-2j * np.pi * j * k / N)) for k in range(N // 2 + 1)])
    X = real_dft_forward(make_plan(N, Backend.FFT), x)
    assert np.max(np.abs(X - naive)) < 2.0 ** -40 * np.max(np.abs(naive))


def test_dft_round_trip():
    N = 1 << 10
    plan = make_plan(N, Backend.FFT)
    x = np.random.default_rng(1).standard_normal(N)
    assert np.max(np.abs(real_dft_inverse(plan, real_dft_forward(plan, x)) - x)) < 2.0 ** -40 * np.max(np.abs(x))


def test_convolve_rows():
    rng = np.random.default_rng(2)
    xy = rng.integers(-100, 100, size=(2, 30)).astype(float)
    got = convolve_rows(make_plan(30, Backend.FFT), xy)
    want = oracle.cyclic_convolution_exact([int(a) for a in xy[0]], [int(a) for a in xy[1]])
    assert np.array_equal(np.rint(got), want)


@given(st.sampled_from([3, 5, 8, 12]), st.integers(8, 96), st.integers(-4, 4), st.randoms())
def test_contract_property(N, p, e, rnd):
    F, G = random_poly(rnd, N, p, e), random_poly(rnd, N, p, e)
    H = oracle.cyclic_convolution_exact(F.values(), G.values())
    Ht = cyclic_convolve(make_plan(N, Backend.EXACT), F, G)
    assert Ht.exponent == 2 * e + lg(N)
    assert max(abs(a - b) for a, b in zip(Ht.values(), H)) < Fraction(2) ** (2 * e + lg(N) - p)
