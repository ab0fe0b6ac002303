import math

import numpy as np
import pytest
from scipy import optimize, stats

from optimal_wls import basis, sampler
from optimal_wls.basis import CHEBYSHEV, HERMITE, LEGENDRE, DomainError, UnboundedFamilyError
from optimal_wls.index_sets import IndexSet, index_set_for
from optimal_wls.measure import (ApproximationSpace, ConditionalMixture, conditional_mixture,
                                 optimal_weight)
from optimal_wls.sampler import (InverseCdfError, WeightedSample, build_inverse_cdf,
                                 rejection_draws, sample_mixture_its,
                                 sample_mixture_rejection, sample_optimal, sample_standard)

LIN = IndexSet([(0,), (1,)])
TRI = IndexSet([(0, 0), (1, 0), (0, 1)])


def mixture(family, coeffs, q=1):
    return ConditionalMixture(q, np.asarray(coeffs, dtype=float), basis.get_family(family))


def half_half_root(u):
    """Oracle inverse of t/4 + t^3/4 + 1/2."""
    return optimize.brentq(lambda t: t / 4 + t ** 3 / 4 + 0.5 - u, -1, 1, xtol=1e-14)


class TestInverseCdf:
    def test_uniform_inverse(self):
        inv = build_inverse_cdf(mixture(LEGENDRE, [1.0]))
        assert inv(0.25) == pytest.approx(-0.5, abs=1e-12)

    def test_symmetric_median(self):
        mix = mixture(LEGENDRE, [0.5, 0.5])
        assert mix.cdf(0.0) == pytest.approx(0.5, abs=1e-15)
        assert build_inverse_cdf(mix)(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_half_half_at_point_nine(self):
        oracle = half_half_root(0.9)
        assert oracle == pytest.approx(0.891488, abs=1e-6)
        mix = mixture(LEGENDRE, [0.5, 0.5])
        assert build_inverse_cdf(mix)(0.9) == pytest.approx(oracle, abs=1e-5)
        for solver in ("bisection", "newton"):
            assert sample_mixture_its(mix, 0.9, solver=solver) == pytest.approx(oracle, abs=1e-9)

    def test_interpolant_accuracy_on_grid(self):
        mix = mixture(LEGENDRE, [0.5, 0.5])
        inv = build_inverse_cdf(mix)
        u = np.linspace(0.01, 0.99, 97)
        ref = np.array([half_half_root(v) for v in u])
        assert np.max(np.abs(inv(u) - ref)) < 1e-5

    def test_non_monotone_table_is_rejected(self, monkeypatch):
        tab = sampler.primitive_table(LEGENDRE, 1, 33)
        bad = tab.values.copy()
        bad[10, 1] = bad[12, 1] + 0.05
        fake = sampler.PrimitiveTable(tab.kind, tab.degree, tab.grid, bad)
        monkeypatch.setattr(sampler, "primitive_table", lambda *a, **k: fake)
        with pytest.raises(InverseCdfError, match="decreases"):
            build_inverse_cdf(mixture(LEGENDRE, [0.0, 1.0]), 33)

    def test_grid_size_validated(self):
        with pytest.raises(ValueError):
            build_inverse_cdf(mixture(LEGENDRE, [1.0]), 1)


class TestMixtureIts:
    def test_symmetric_median(self):
        for fam in (LEGENDRE, CHEBYSHEV, HERMITE):
            mix = mixture(fam, [0.2, 0.3, 0.5])
            assert sample_mixture_its(mix, 0.5, solver="newton") == pytest.approx(0.0, abs=1e-9)

    def test_uniform_quantile(self):
        assert sample_mixture_its(mixture(LEGENDRE, [1.0]), 0.75) == pytest.approx(0.5, abs=1e-12)

    def test_gaussian_quantile(self):
        for solver in ("bisection", "newton"):
            z = sample_mixture_its(mixture(HERMITE, [1.0]), 0.975, solver=solver)
            assert z == pytest.approx(1.959964, abs=1e-6)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.2, 1.5, float("nan")])
    def test_domain(self, u):
        with pytest.raises(DomainError):
            sample_mixture_its(mixture(LEGENDRE, [1.0]), u)

    def test_unknown_solver(self):
        with pytest.raises(ValueError):
            sample_mixture_its(mixture(LEGENDRE, [1.0]), 0.3, solver="secant")

    @pytest.mark.parametrize("family", [LEGENDRE, CHEBYSHEV, HERMITE])
    def test_newton_matches_bisection(self, family):
        c = np.random.default_rng(5).dirichlet(np.ones(30))
        mix = mixture(family, c)
        u = np.linspace(0.001, 0.999, 101)
        zn = sample_mixture_its(mix, u, solver="newton")
        zb = sample_mixture_its(mix, u, solver="bisection")
        np.testing.assert_allclose(zn, zb, atol=1e-8)
        assert np.max(np.abs(mix.cdf(zn) - u)) <= 1e-10


class TestRejection:
    def test_envelopes(self):
        assert mixture(CHEBYSHEV, [0.1, 0.2, 0.7]).envelope() == pytest.approx(2.0)
        assert mixture(LEGENDRE, [0.1, 0.2, 0.7]).envelope() == pytest.approx(5.0)

    def test_acceptance_rate(self):
        mix = mixture(LEGENDRE, [0.1, 0.2, 0.7])
        n = 20_000
        _, rounds = rejection_draws(mix, n, seed=21)
        M = mix.envelope()
        # rounds per draw is geometric with success probability 1/M
        se = math.sqrt((1 - 1 / M) * M * M / n)
        assert abs(np.mean(rounds) - M) < 3 * se

    def test_draws_follow_mixture(self):
        mix = mixture(CHEBYSHEV, [0.25, 0.0, 0.5, 0.25])
        z, _ = rejection_draws(mix, 20_000, seed=22)
        assert stats.kstest(z, mix.cdf).pvalue > 0.001

    def test_hermite_rejected(self):
        with pytest.raises(UnboundedFamilyError):
            sample_mixture_rejection(mixture(HERMITE, [1.0]), seed=1)

    def test_single_draw_is_keyed_by_index(self):
        mix = mixture(LEGENDRE, [0.5, 0.5])
        z, _ = rejection_draws(mix, 5, seed=3)
        assert sample_mixture_rejection(mix, seed=3, k=4) == z[4]


class TestSampleOptimal:
    def test_ks_linear_legendre(self):
        s = sample_optimal(ApproximationSpace.isotropic(LEGENDRE, LIN), 100_000, 31, method="ITS")
        res = stats.kstest(s.points[:, 0], lambda t: t / 4 + t ** 3 / 4 + 0.5)
        assert res.statistic < stats.kstwo.ppf(0.99, 100_000)

    def test_marginal_chi_square(self):
        s = sample_optimal(ApproximationSpace.isotropic(LEGENDRE, TRI), 100_000, 32)
        edges = np.linspace(-1, 1, 51)
        expected = 100_000 * np.diff((2 * edges + edges ** 3 + 3) / 6)
        assert stats.chisquare(np.histogram(s.points[:, 0], edges)[0], expected).pvalue > 0.01

    def test_hermite_marginal(self):
        sp = ApproximationSpace.isotropic(HERMITE, IndexSet([(k,) for k in range(6)]))
        s = sample_optimal(sp, 50_000, 33)
        cdf = lambda t: basis.mixture_cdf(HERMITE, np.full(6, 1 / 6), t)  # noqa: E731
        assert stats.kstest(s.points[:, 0], cdf).pvalue > 0.001

    def test_rs_and_its_agree_in_two_dimensions(self):
        sp = ApproximationSpace.isotropic(CHEBYSHEV, index_set_for(2, 6))
        a = sample_optimal(sp, 20_000, 34, method="RS").points
        b = sample_optimal(sp, 20_000, 35, method="ITS").points
        for q in range(2):
            assert stats.ks_2samp(a[:, q], b[:, q]).pvalue > 0.001

    def test_second_coordinate_conditional(self):
        # given x1, x2 follows the conditional mixture; check through the
        # probability integral transform
        sp = ApproximationSpace.isotropic(LEGENDRE, index_set_for(2, 6))
        x = sample_optimal(sp, 4000, 36).points
        pit = np.array([conditional_mixture(sp, 2, x[i, :1]).cdf(x[i, 1]) for i in range(4000)])
        assert stats.kstest(pit, "uniform").pvalue > 0.001

    @pytest.mark.parametrize("family", [LEGENDRE, CHEBYSHEV, HERMITE])
    def test_weights_are_optimal(self, family):
        sp = ApproximationSpace.isotropic(family, index_set_for(3, 20))
        s = sample_optimal(sp, 500, 37, method="ITS")
        np.testing.assert_allclose(s.weights, optimal_weight(sp, s.points), rtol=1e-12)

    def test_constant_space_has_unit_weights(self):
        sp = ApproximationSpace.isotropic(HERMITE, IndexSet([(0, 0)]))
        s = sample_optimal(sp, 200, 38)
        np.testing.assert_array_equal(s.weights, 1.0)

    @pytest.mark.parametrize("method", ["RS", "ITS"])
    def test_determinism_and_prefix_stability(self, method):
        sp = ApproximationSpace.isotropic(LEGENDRE, index_set_for(2, 10))
        a = sample_optimal(sp, 300, 39, method=method)
        b = sample_optimal(sp, 300, 39, method=method)
        c = sample_optimal(sp, 100, 39, method=method)
        assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.points[:100], c.points)
        assert not np.array_equal(a.points, sample_optimal(sp, 300, 40, method=method).points)

    def test_rs_on_hermite_raises(self):
        sp = ApproximationSpace.isotropic(HERMITE, LIN)
        with pytest.raises(UnboundedFamilyError):
            sample_optimal(sp, 10, 1, method="RS")

    def test_auto_method(self):
        assert sample_optimal(ApproximationSpace.isotropic(LEGENDRE, LIN), 5, 1).meta["method"] == "RS"
        assert sample_optimal(ApproximationSpace.isotropic(HERMITE, LIN), 5, 1).meta["method"] == "ITS"

    def test_bad_arguments(self):
        sp = ApproximationSpace.isotropic(LEGENDRE, LIN)
        with pytest.raises(ValueError):
            sample_optimal(sp, 0, 1)
        with pytest.raises(ValueError):
            sample_optimal(sp, 5, 1, method="MCMC")

    def test_unrefined_draws_are_close(self):
        sp = ApproximationSpace.isotropic(CHEBYSHEV, IndexSet([(k,) for k in range(20)]))
        a = sample_optimal(sp, 2000, 41, method="ITS").points
        b = sample_optimal(sp, 2000, 41, method="ITS", refine=False).points
        assert np.max(np.abs(a - b)) < 1e-3

    def test_high_degree_residuals(self):
        for fam in (LEGENDRE, CHEBYSHEV, HERMITE):
            mix = mixture(fam, np.full(200, 1 / 200))
            u = np.linspace(1e-6, 1 - 1e-6, 501)
            z = sample_mixture_its(mix, u, solver="newton")
            assert np.max(np.abs(mix.cdf(z) - u)) <= 1e-10


class TestSampleStandard:
    def test_uniform_mean(self):
        sp = ApproximationSpace.isotropic(LEGENDRE, TRI)
        x = sample_standard(sp, 100_000, 51).points
        se = math.sqrt(1 / 3 / 100_000)
        assert np.all(np.abs(x.mean(axis=0)) < 3 * se)

    def test_gaussian_variance(self):
        sp = ApproximationSpace.isotropic(HERMITE, LIN)
        x = sample_standard(sp, 1_000_000, 52).points[:, 0]
        assert abs(x.var(ddof=1) - 1.0) < 3 * math.sqrt(2 / 1_000_000)

    def test_arcsine_ks(self):
        sp = ApproximationSpace.isotropic(CHEBYSHEV, LIN)
        x = sample_standard(sp, 100_000, 53).points[:, 0]
        res = stats.kstest(x, lambda t: np.arcsin(t) / np.pi + 0.5)
        assert res.statistic < stats.kstwo.ppf(0.99, 100_000)

    def test_unit_weights(self):
        s = sample_standard(ApproximationSpace.isotropic(LEGENDRE, LIN), 10, 1)
        np.testing.assert_array_equal(s.weights, 1.0)
        assert s.meta["measure"] == "standard"


class TestWeightedSample:
    def test_csv_round_trip(self, tmp_path):
        sp = ApproximationSpace.isotropic(HERMITE, index_set_for(2, 5))
        s = sample_optimal(sp, 40, 61)
        path = tmp_path / "s.csv"
        s.to_csv(path)
        back = WeightedSample.from_csv(path)
        assert np.array_equal(back.points, s.points)
        assert np.array_equal(back.weights, s.weights)
        assert back.meta["seed"] == "61"
        assert path.read_text().splitlines()[len(s.meta)] == "x_1,x_2,w"

    def test_validation(self):
        with pytest.raises(ValueError):
            WeightedSample(np.zeros((3, 1)), np.ones(2))
        with pytest.raises(ValueError):
            WeightedSample(np.zeros((2, 1)), np.array([1.0, 0.0]))
