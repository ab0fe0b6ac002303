import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg
from scipy import integrate

from optimal_wls import basis
from optimal_wls.basis import (CHEBYSHEV, FAMILY_NAMES, HERMITE, LEGENDRE, DomainError,
                               UnboundedFamilyError)


def gram_schmidt_gaussian(j_max):
    """Orthonormal polynomials under N(0,1) from monomial moments (oracle)."""
    moments = [0.0] * (2 * j_max + 1)
    for k in range(0, 2 * j_max + 1, 2):
        moments[k] = float(np.prod(np.arange(k - 1, 0, -2))) if k else 1.0

    def inner(p, q):
        prod = np.polynomial.polynomial.polymul(p, q)
        return sum(c * moments[i] for i, c in enumerate(prod))

    polys = []
    for j in range(j_max + 1):
        p = np.zeros(j + 1)
        p[j] = 1.0
        for q in polys:
            p = np.polynomial.polynomial.polysub(p, inner(p, q) * q)
        polys.append(p / math.sqrt(inner(p, p)))
    return polys


class TestEvalBasis:
    def test_legendre_endpoint(self):
        np.testing.assert_allclose(basis.eval_basis(LEGENDRE, 1, 1.0), [1.0, math.sqrt(3.0)])

    def test_chebyshev_constant(self):
        np.testing.assert_array_equal(basis.eval_basis(CHEBYSHEV, 0, 0.3), [1.0])

    def test_hermite_against_gram_schmidt(self):
        polys = gram_schmidt_gaussian(2)
        expected = [np.polynomial.polynomial.polyval(2.0, p) for p in polys]
        got = basis.eval_basis(HERMITE, 2, 2.0)
        np.testing.assert_allclose(got, expected, rtol=1e-12)
        np.testing.assert_allclose(got, [1.0, 2.0, 2.1213203435596424], rtol=1e-12)

    @pytest.mark.parametrize("family", [LEGENDRE, CHEBYSHEV])
    def test_outside_support_raises(self, family):
        with pytest.raises(DomainError):
            basis.eval_basis(family, 3, 1.5)

    def test_hermite_accepts_any_real(self):
        assert np.all(np.isfinite(basis.eval_basis(HERMITE, 10, -40.0)))

    def test_first_entry_is_one(self):
        for fam in FAMILY_NAMES:
            assert basis.eval_basis(fam, 5, 0.37)[0] == 1.0

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            basis.get_family("laguerre")


class TestClosedForms:
    t = np.linspace(-1, 1, 41)

    def test_legendre(self):
        v = basis.evaluate(LEGENDRE, self.t, 3)
        t = self.t
        np.testing.assert_allclose(v[:, 1], math.sqrt(3) * t, atol=1e-12)
        np.testing.assert_allclose(v[:, 2], math.sqrt(5) * (3 * t**2 - 1) / 2, atol=1e-12)
        np.testing.assert_allclose(v[:, 3], math.sqrt(7) * (5 * t**3 - 3 * t) / 2, atol=1e-12)

    def test_chebyshev(self):
        v = basis.evaluate(CHEBYSHEV, self.t, 3)
        for j in range(1, 4):
            np.testing.assert_allclose(v[:, j], math.sqrt(2) * np.cos(j * np.arccos(self.t)),
                                       atol=1e-12)

    def test_hermite(self):
        t = np.linspace(-4, 4, 41)
        v = basis.evaluate(HERMITE, t, 3)
        np.testing.assert_allclose(v[:, 2], (t**2 - 1) / math.sqrt(2), atol=1e-12)
        np.testing.assert_allclose(v[:, 3], (t**3 - 3 * t) / math.sqrt(6), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-1, 1), st.integers(0, 40))
    def test_legendre_matches_numpy(self, t, j):
        ref = npleg.legval(t, np.eye(j + 1)[j]) * math.sqrt(2 * j + 1)
        assert basis.evaluate(LEGENDRE, t, j)[j] == pytest.approx(ref, abs=1e-11)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-30, 30), st.integers(0, 60))
    def test_scaled_is_sqrt_density_times_value(self, t, j):
        s = basis.evaluate_scaled(HERMITE, t, j)
        v = basis.evaluate(HERMITE, t, j)
        np.testing.assert_allclose(s, v * math.sqrt(basis.density(HERMITE, t)), rtol=1e-10,
                                   atol=1e-300)


class TestOrthonormality:
    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_gram_matrix_is_identity(self, family):
        x, w = basis.gauss_rule(family, 30)
        v = basis.evaluate(family, x, 20)
        G = (v * w[:, None]).T @ v
        assert np.max(np.abs(G - np.eye(21))) < 1e-10

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_weights_sum_to_one(self, family):
        assert basis.gauss_rule(family, 12)[1].sum() == pytest.approx(1.0, abs=1e-14)


class TestDensity:
    def test_uniform(self):
        assert basis.density(LEGENDRE, 0.2) == 0.5

    def test_arcsine_center(self):
        total = integrate.quad(lambda t: 1 / math.sqrt(1 - t * t), -1, 1)[0]
        assert basis.density(CHEBYSHEV, 0.0) == pytest.approx(1.0 / total, rel=1e-9)
        assert basis.density(CHEBYSHEV, 0.0) == pytest.approx(0.3183099, abs=1e-7)

    def test_gaussian_center(self):
        assert basis.density(HERMITE, 0.0) == pytest.approx(0.3989423, abs=1e-7)

    def test_zero_outside_bounded_support(self):
        assert basis.density(LEGENDRE, 1.5) == 0.0
        assert basis.density(CHEBYSHEV, -2.0) == 0.0

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_integrates_to_one(self, family):
        lo, hi = basis.get_family(family).support
        total = integrate.quad(lambda t: basis.density(family, t), lo, hi)[0]
        assert total == pytest.approx(1.0, abs=1e-9)


class TestPrimitives:
    def test_examples(self):
        assert basis.weighted_square_primitive(LEGENDRE, 0, 1.0) == pytest.approx(1.0, abs=1e-14)
        assert basis.weighted_square_primitive(LEGENDRE, 1, 0.0) == pytest.approx(0.5, abs=1e-14)

    def test_linear_legendre_at_half(self):
        oracle = integrate.quad(lambda s: 0.5 * 3 * s * s, -1, 0.5)[0]
        assert oracle == pytest.approx(0.5625, abs=1e-14)
        assert basis.weighted_square_primitive(LEGENDRE, 1, 0.5) == pytest.approx(oracle, abs=1e-14)

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    @pytest.mark.parametrize("j", [0, 1, 4, 11])
    def test_against_quadrature(self, family, j):
        lo = -np.inf if family == HERMITE else -1.0
        for t in (-0.8, -0.1, 0.35, 0.99) if family != HERMITE else (-3.0, -0.5, 0.7, 2.5):
            def f(s):
                return basis.density(family, s) * basis.evaluate(family, s, j)[j] ** 2
            oracle = integrate.quad(f, lo, t, limit=200, epsabs=1e-13)[0]
            assert basis.weighted_square_primitive(family, j, t) == pytest.approx(oracle, abs=1e-10)

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_monotone_with_unit_mass(self, family):
        if family == HERMITE:
            t = np.linspace(-40, 40, 4001)
        else:
            t = -np.cos(np.linspace(0, np.pi, 4001))
        P = basis.primitives(family, 30, t)
        assert np.all(np.diff(P, axis=0) >= -1e-13)
        np.testing.assert_allclose(P[0], 0.0, atol=1e-10)
        np.testing.assert_allclose(P[-1], 1.0, atol=1e-10)

    def test_gaussian_quantile(self):
        assert basis.mixture_cdf(HERMITE, [1.0], 1.959963984540054) == pytest.approx(0.975, abs=1e-12)


class TestSupNorm:
    def test_examples(self):
        assert basis.sup_norm_bound(CHEBYSHEV, 5) == pytest.approx(math.sqrt(2))
        assert basis.sup_norm_bound(LEGENDRE, 2) == pytest.approx(math.sqrt(5))
        assert basis.sup_norm_bound(LEGENDRE, 0) == 1.0

    def test_hermite_unbounded(self):
        with pytest.raises(UnboundedFamilyError):
            basis.sup_norm_bound(HERMITE, 1)

    @pytest.mark.parametrize("family", [LEGENDRE, CHEBYSHEV])
    def test_bound_is_attained_and_never_exceeded(self, family):
        t = np.linspace(-1, 1, 20001)
        v = np.abs(basis.evaluate(family, t, 12))
        for j in range(13):
            assert v[:, j].max() == pytest.approx(basis.sup_norm_bound(family, j), rel=1e-9)


class TestLogPeak:
    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_matches_direct_values(self, family):
        t = np.linspace(-0.99, 0.99, 17) if family != HERMITE else np.linspace(-20, 20, 17)
        v = basis.evaluate(family, t, 40)
        np.testing.assert_allclose(basis.log_peak(family, t, 40),
                                   np.log(np.abs(v).max(axis=1)), atol=1e-10)

    def test_finite_where_values_overflow(self):
        lp = basis.log_peak(HERMITE, np.array([1e3]), 400)
        assert np.isfinite(lp[0]) and lp[0] > 709


def test_large_gaussian_rule_is_stable():
    x, w = basis.gauss_rule(HERMITE, 800)
    assert np.all(np.isfinite(x)) and np.all(w >= 0)
    assert w.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.dot(w, x ** 4) == pytest.approx(3.0, rel=1e-12)
