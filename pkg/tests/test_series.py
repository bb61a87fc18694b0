from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from truncmul.series import (Family, SeriesFamily, coeff_table, compose, evaluate,
                             power_series, series_coeff, series_coeff_fixed)


def fam(tag, b=8, N=12):
    return SeriesFamily(tag, b, N)


@pytest.mark.parametrize("b,N", [(4, 3), (8, 12), (16, 64)])
def test_published_coefficients(b, N):
    two = Fraction(2)
    assert series_coeff(fam(Family.ALPHA, b, N), 1, 1) == -two ** -b / N
    assert series_coeff(fam(Family.GAMMA, b, N), 2, 1) == Fraction(N + 3, 2 * N * N) * two ** (-2 * b)
    assert series_coeff(fam(Family.DELTA, b, N), 1, 1) == -two ** -b / N
    for k in range(N):
        assert series_coeff(fam(Family.BETA, b, N), 0, k) == 1


def test_alpha_table_small():
    t = coeff_table(fam(Family.ALPHA, 4, 3), 2)
    assert t.shape == (2, 3)
    assert list(t[1]) == [0.0, -1 / 48, -1 / 24]


@pytest.mark.parametrize("tag", list(Family))
def test_table_single_row(tag):
    assert np.array_equal(coeff_table(fam(tag), 1), np.ones((1, 12)))
    assert coeff_table(fam(tag), 1, 30) == (tuple([1 << 30] * 12),)


@pytest.mark.parametrize("tag", list(Family))
def test_table_matches_single_calls(tag):
    f = fam(tag, 6, 5)
    table = coeff_table(f, 6, 80)
    floats = coeff_table(f, 6)
    for r in range(6):
        for k in range(5):
            assert table[r][k] == series_coeff_fixed(f, r, k, 80)
            assert floats[r, k] == pytest.approx(float(series_coeff(f, r, k)), rel=1e-14, abs=0)


def test_leading_zero_column():
    for tag in (Family.ALPHA, Family.GAMMA):
        for r in range(1, 9):
            assert series_coeff(fam(tag), r, 0) == 0


@pytest.mark.parametrize("tag", list(Family))
@pytest.mark.parametrize("b", [4, 8, 16])
@pytest.mark.parametrize("N", [3, 12, 64])
def test_coefficient_bounds(tag, b, N):
    slack = 2 if tag in (Family.ALPHA, Family.GAMMA) else 0
    f = SeriesFamily(tag, b, N)
    for r in range(9):
        for k in range(N):
            assert abs(series_coeff(f, r, k)) <= Fraction(1, 1 << r * (b - slack))


@pytest.mark.parametrize("pair", [(Family.ALPHA, Family.BETA), (Family.GAMMA, Family.DELTA)])
@pytest.mark.parametrize("lam", range(1, 7))
def test_compositional_inverse(pair, lam):
    b, N = 6, 5
    f, g = (power_series(SeriesFamily(t, b, N), lam) for t in pair)
    order = lam + 1
    for outer, inner in ((f, g), (g, f)):
        c = compose(outer, inner, order)
        assert c[1] == 1 and c[0] == 0
        assert all(x == 0 for x in c[2:])
    # the first neglected coefficient is small
    c = compose(f, g, lam + 2)
    assert abs(c[lam + 1]) < Fraction(1, 1 << lam * (b - 2))


def test_series_fixed_rounding():
    f = fam(Family.GAMMA, 5, 7)
    for r in range(5):
        for k in range(7):
            exact = series_coeff(f, r, k) * (1 << 40)
            assert abs(series_coeff_fixed(f, r, k, 40) - exact) <= Fraction(1, 2)


def test_evaluate_matches_power_series():
    f = fam(Family.BETA, 4, 3)
    z = 0.3 + 0.4j
    coeffs = power_series(f, 5)
    direct = sum(float(c) * z ** i for i, c in enumerate(coeffs))
    assert abs(evaluate(f, 5, z) - direct) < 1e-15


def test_family_validation():
    assert SeriesFamily("alpha", 4, 3).in_running_hypothesis
    assert not SeriesFamily("beta", 2, 3).in_running_hypothesis
    with pytest.raises(ValueError):
        SeriesFamily(Family.BETA, 0, 3)
    with pytest.raises(ValueError):
        coeff_table(fam(Family.BETA), 0)


@given(st.sampled_from(list(Family)), st.integers(4, 20), st.integers(3, 80), st.data())
def test_bounds_random(tag, b, N, data):
    r = data.draw(st.integers(0, 8))
    k = data.draw(st.integers(0, N - 1))
    slack = 2 if tag in (Family.ALPHA, Family.GAMMA) else 0
    assert abs(series_coeff(SeriesFamily(tag, b, N), r, k)) <= Fraction(1, 1 << r * (b - slack))
