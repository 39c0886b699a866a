import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arfilt import series
from arfilt.errors import NonConvergent, UnstableInput
from arfilt.series import SeriesParams

C000_R4 = 1.2871181968439131112  # one-angle integral, mpmath
GAMMA4_REF = 1.7928815775535257  # one-dimensional elliptic reduction, mpmath at 60 digits
# regression constants from gamma_d_estimate (bound ~5e-13)
GAMMA5 = 1.4018456879486
GAMMA6 = 1.2750078204744


def test_params_validation():
    with pytest.raises(UnstableInput):
        SeriesParams(3, 1 / 3)
    with pytest.raises(UnstableInput):
        SeriesParams(2, 0.6j)
    with pytest.raises(ValueError):
        SeriesParams(0, 0.1)
    with pytest.raises(ValueError):
        SeriesParams(2, 0.1, tol=0)


def test_multinomial_square_sum_values():
    assert series.multinomial_square_sum(3, 0) == 1
    assert series.multinomial_square_sum(3, 1) == 3
    assert series.multinomial_square_sum(2, 5) == 252
    assert series.multinomial_square_sum(3, 2) == 15
    assert series.multinomial_square_sum(3, 3) == 93
    assert series.multinomial_square_sum(1, 7) == 1


def _brute_square_sum(d, n):
    total = 0
    for parts in itertools.product(range(n + 1), repeat=d):
        if sum(parts) == n:
            m = math.factorial(n)
            for p in parts:
                m //= math.factorial(p)
            total += m * m
    return total


@pytest.mark.parametrize("d,n", [(2, 6), (3, 5), (4, 4), (5, 3)])
def test_multinomial_square_sum_brute(d, n):
    assert series.multinomial_square_sum(d, n) == _brute_square_sum(d, n)


def test_composition_sums_shifted_index_brute():
    # G_k(n) for k = (1, -1, 0) by direct enumeration of both multinomials
    k = (1, -1, 0)
    gen = series.composition_sums(k)
    for n in range(5):
        expected = 0
        for parts in itertools.product(range(n + 1), repeat=3):
            if sum(parts) != n:
                continue
            up = [p + max(0, x) for p, x in zip(parts, k)]
            dn = [p + max(0, -x) for p, x in zip(parts, k)]
            m1 = math.factorial(sum(up))
            for u in up:
                m1 //= math.factorial(u)
            m2 = math.factorial(sum(dn))
            for v in dn:
                m2 //= math.factorial(v)
            expected += m1 * m2
        assert next(gen) == expected


def test_fourier_trivial():
    p = SeriesParams(3, 0.0)
    assert series.fourier_coeff_series(p, (0, 0, 0)) == 1
    assert series.fourier_coeff_series(p, (1, 0, 0)) == 0


def test_fourier_matches_elliptic_value():
    p = SeriesParams(3, 0.25)
    assert series.fourier_coeff_series(p, (0, 0, 0)).real == pytest.approx(C000_R4, rel=1e-13)


def test_fourier_info_and_bad_index():
    info = {}
    series.fourier_coeff_series(SeriesParams(3, 0.25), (0, 0, 0), info)
    assert info["terms"] > 10 and info["tail"] < 1e-13
    with pytest.raises(ValueError):
        series.fourier_coeff_series(SeriesParams(3, 0.25), (0, 0))


def test_fourier_max_n():
    with pytest.raises(NonConvergent):
        series.fourier_coeff_series(SeriesParams(3, 0.33, max_n=20), (0, 0, 0))


def test_forward_abc_values():
    a, b, c = series.forward_abc(SeriesParams(3, 0.0))
    assert (a, b, c) == (1, 0, 0)
    a, b, c = series.forward_abc(SeriesParams(2, 0.3))
    assert a == pytest.approx(1.25, rel=1e-14)
    a, b, c = series.forward_abc(SeriesParams(1, 0.5))
    assert c is None and a == pytest.approx(1 / (1 - 0.25), rel=1e-14)


def test_forward_abc_row_identity():
    s = 0.25
    a, b, c = series.forward_abc(SeriesParams(3, s))
    assert abs(a - 3 * s * np.conj(b) - 1) < 1e-12


def test_symmetries_unit_cube():
    p = SeriesParams(3, 0.25 * cmath.exp(0.7j))
    for k in itertools.product((-1, 0, 1), repeat=3):
        v = series.fourier_coeff_series(p, k)
        for perm in itertools.permutations(k):
            assert abs(series.fourier_coeff_series(p, perm) - v) < 1e-15
        neg = tuple(-x for x in k)
        assert abs(series.fourier_coeff_series(p, neg) - v.conjugate()) < 1e-15


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.3), st.floats(0.0, 2 * math.pi))
def test_a_depends_on_modulus_only(rho, theta):
    a0 = series.forward_abc(SeriesParams(3, rho))[0]
    a1 = series.forward_abc(SeriesParams(3, rho * cmath.exp(1j * theta)))[0]
    assert a1 == pytest.approx(a0, rel=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_a_strictly_increasing(d):
    grid = np.linspace(0, 0.9 / d, 10)
    vals = [series.forward_abc(SeriesParams(d, float(s)))[0] for s in grid]
    assert all(y > x for x, y in zip(vals, vals[1:]))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.floats(0.0, 0.9), st.floats(0.0, 2 * math.pi))
def test_c_real_nonnegative(d, frac, theta):
    s = frac / d * cmath.exp(1j * theta)
    c = series.fourier_coeff_series(SeriesParams(d, s), (1, -1) + (0,) * (d - 2))
    assert abs(c.imag) < 1e-15 and c.real >= 0


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.floats(0.0, 0.85))
def test_row_identities(d, frac):
    s = frac / d
    tol = 1e-14
    a, b, c = series.forward_abc(SeriesParams(d, s, tol=tol))
    scale = max(1.0, a)
    assert abs(a - d * s * np.conj(b) - 1) <= 10 * tol * scale + 1e-15
    assert abs(b - s * a - (d - 1) * s * c) <= 10 * tol * scale + 1e-15


def test_gamma_small_d_infinite():
    for d in (1, 2, 3):
        assert series.gamma_d(d) == math.inf


def test_gamma4_against_reference():
    est = series.gamma_d_estimate(4, tol=1e-10)
    assert abs(est.value - GAMMA4_REF) < 1e-12
    assert est.bound < 1e-10
    assert abs(est.value - GAMMA4_REF) <= est.bound


def test_gamma_stable_under_depth_doubling():
    for d, ref in ((4, GAMMA4_REF), (5, GAMMA5), (6, GAMMA6)):
        v1 = series.gamma_d_estimate(d, tol=1.0, n_start=256).value
        v2 = series.gamma_d_estimate(d, tol=1.0, n_start=512).value
        assert abs(v1 - v2) < 1e-8
        assert abs(v1 - ref) < 1e-10


def test_gamma_decreasing_in_d():
    vals = [series.gamma_d(d) for d in (4, 5, 6)]
    assert vals[0] > vals[1] > vals[2] > 1


def test_normalized_square_sums_exact_small():
    t = series.normalized_square_sums(4, 30)
    for n in (0, 1, 5, 30):
        exact = series.multinomial_square_sum(4, n) / 16 ** n
        assert t[n] == pytest.approx(exact, rel=1e-13)


def test_heun_initial_values():
    g = series.heun_g(5)
    assert g[0] == 1 and g[1] == 3 and g[2] == 15 and g[3] == 93
    assert len(g) == 6


def test_heun_equals_square_sums():
    g = series.heun_g(50)
    it = series.composition_sums((0, 0, 0))
    for n in range(51):
        assert g[n] == next(it)


def test_heun_recurrence_exact():
    g = series.heun_g(200)
    for n in range(2, 201):
        assert n * n * g[n] == (10 * n * n - 10 * n + 3) * g[n - 1] - 9 * (n - 1) ** 2 * g[n - 2]


def test_heun_asymptotics():
    assert abs(series.heun_asymptotic_estimate(2000) - 0.41349667) < 5e-6
    assert abs(series.heun_asymptotic_estimate(200) - 0.41349667) < 5e-4
    raw = series.heun_scaled(series.heun_g(2000), 2000)
    # the unextrapolated value is off by a term of order 1/n
    assert 1e-5 < abs(raw - 0.41349667) < 1e-2


def test_heun_bad_input():
    with pytest.raises(ValueError):
        series.heun_g(0)
    with pytest.raises(ValueError):
        series.heun_asymptotic_estimate(1)
