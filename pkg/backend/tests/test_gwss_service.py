"""Tests for GW summary statistics."""
import numpy as np
import pytest

from exceptions import (
    DegenerateLocalDistributionError,
    InsufficientLocalDataError,
    MissingColumnError,
    ZeroMeanError,
    ZeroWeightSumError,
)
from models.kernel import KernelFamily, KernelSpec
from services.gwss_service import (
    GwssService,
    gw_covariance,
    gw_cv,
    gw_iqr,
    gw_mean,
    gw_median,
    gw_pearson,
    gw_qi,
    gw_quantiles,
    gw_sd,
    gw_skew,
    gw_spearman,
    gw_variance,
    pair_names,
    weighted_ranks,
)
from tests.test_helpers import grid_coords, make_dataset

GLOBAL = KernelSpec(family=KernelFamily.GLOBAL)


class TestMoments:
    def test_global_mean(self):
        assert gw_mean([1, 2, 3], np.ones(3)) == pytest.approx(2.0)

    def test_single_weight_picks_value(self):
        assert gw_mean([5, 9, 9], [1, 0, 0]) == pytest.approx(5.0)

    def test_mean_is_scale_invariant_in_weights(self):
        z = [3.0, 1.0, 4.0, 1.0, 5.0]
        w = np.array([0.2, 0.5, 0.1, 0.7, 0.3])
        assert gw_mean(z, w) == pytest.approx(gw_mean(z, 17.0 * w))

    def test_zero_weight_sum(self):
        with pytest.raises(ZeroWeightSumError):
            gw_mean([1, 2], [0, 0])

    def test_constant_has_zero_sd(self):
        assert gw_sd([4, 4, 4], np.ones(3)) == 0.0
        assert gw_variance([4, 4, 4], [1, 2, 3]) == 0.0

    def test_variance_matches_population_formula(self):
        z = np.array([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
        assert gw_variance(z, np.ones(8)) == pytest.approx(4.0)
        assert gw_sd(z, np.ones(8)) == pytest.approx(2.0)

    def test_symmetric_skew_is_zero(self):
        assert gw_skew([1, 2, 3], np.ones(3)) == pytest.approx(0.0, abs=1e-12)

    def test_right_tail_gives_positive_skew(self):
        assert gw_skew([1, 1, 1, 10], np.ones(4)) > 0

    def test_constant_skew_is_degenerate(self):
        with pytest.raises(DegenerateLocalDistributionError):
            gw_skew([2, 2, 2], np.ones(3))

    def test_cv(self):
        z = np.array([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
        assert gw_cv(z, np.ones(8)) == pytest.approx(2.0 / 5.0)

    def test_cv_zero_mean(self):
        with pytest.raises(ZeroMeanError):
            gw_cv([-1, 0, 1], np.ones(3))


class TestCorrelation:
    def test_covariance_matches_numpy(self):
        rng = np.random.default_rng(8)
        z, y = rng.normal(size=20), rng.normal(size=20)
        expected = np.cov(z, y, bias=True)[0, 1]
        assert gw_covariance(z, y, np.ones(20)) == pytest.approx(expected)

    def test_pearson_perfect(self):
        z = np.array([1.0, 3.0, 2.0, 7.0])
        w = np.array([0.3, 1.0, 0.5, 0.2])
        assert gw_pearson(z, z, w) == pytest.approx(1.0)
        assert gw_pearson(z, -z, w) == pytest.approx(-1.0)

    def test_pearson_bounded(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            value = gw_pearson(rng.normal(size=15), rng.normal(size=15), rng.uniform(size=15))
            assert -1.0 <= value <= 1.0

    def test_pearson_constant_variable(self):
        with pytest.raises(DegenerateLocalDistributionError):
            gw_pearson([1, 1, 1], [1, 2, 3], np.ones(3))

    def test_spearman_monotone(self):
        z = np.array([0.5, 2.0, 1.0, 3.0, 2.5])
        w = np.array([1.0, 0.4, 0.8, 0.2, 0.6])
        assert gw_spearman(z, z ** 3, w) == pytest.approx(1.0)
        assert gw_spearman(z, -z, w) == pytest.approx(-1.0)

    def test_spearman_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(10)
        z, y, w = rng.normal(size=12), rng.normal(size=12), rng.uniform(0.1, 1.0, size=12)
        assert gw_spearman(z, np.exp(y), w) == pytest.approx(gw_spearman(z, y, w))

    def test_spearman_ignores_zero_weights(self):
        z = np.array([1.0, 2.0, 3.0, 100.0])
        y = np.array([1.0, 2.0, 3.0, -100.0])
        assert gw_spearman(z, y, [1, 1, 1, 0]) == pytest.approx(1.0)

    def test_weighted_ranks_midranks_for_ties(self):
        ranks = weighted_ranks([1.0, 2.0, 2.0, 3.0], np.ones(4))
        np.testing.assert_allclose(ranks, [0.125, 0.5, 0.5, 0.875])


class TestQuantiles:
    def test_uniform_median(self):
        assert gw_median([1, 2, 3, 4, 5], np.ones(5)) == pytest.approx(3.0)

    def test_point_mass(self):
        assert gw_quantiles([1, 2, 3, 4], [0, 0, 1, 0], [0.1, 0.5, 0.9]) == [3.0, 3.0, 3.0]

    def test_quantiles_clamped_to_range(self):
        q = gw_quantiles([10, 20, 30], np.ones(3), [0.0, 1.0])
        assert q == [10.0, 30.0]

    def test_quantiles_non_decreasing(self):
        rng = np.random.default_rng(12)
        q = gw_quantiles(rng.normal(size=30), rng.uniform(size=30), np.linspace(0, 1, 21))
        assert np.all(np.diff(q) >= 0)

    def test_iqr(self):
        assert gw_iqr([1, 2, 3, 4, 5], np.ones(5)) == pytest.approx(2.5)

    def test_symmetric_qi_is_zero(self):
        assert gw_qi([1, 2, 3, 4, 5], np.ones(5)) == pytest.approx(0.0, abs=1e-12)

    def test_qi_median_at_first_quartile(self):
        assert gw_qi([1, 1, 1, 2, 5], np.ones(5)) == pytest.approx(-1.0)

    def test_qi_zero_iqr(self):
        with pytest.raises(DegenerateLocalDistributionError):
            gw_qi([2, 2, 2], np.ones(3))

    def test_no_positive_weight(self):
        with pytest.raises(InsufficientLocalDataError):
            gw_quantiles([1, 2], [0, 0], [0.5])


class TestGwssAll:
    @pytest.fixture
    def dataset(self):
        rng = np.random.default_rng(21)
        coords = grid_coords(5)
        a = rng.normal(size=25)
        return make_dataset(coords, {"a": a, "b": 2.0 * a + rng.normal(size=25), "c": rng.uniform(1, 3, size=25)})

    def test_global_kernel_gives_global_statistics(self, dataset):
        result = GwssService().gwss_all(dataset, ["a", "b"], GLOBAL)
        a, b = dataset.column("a"), dataset.column("b")
        np.testing.assert_allclose(result.local_mean["a"], a.mean())
        np.testing.assert_allclose(result.local_sd["b"], b.std())
        np.testing.assert_allclose(result.local_pearson["a.b"], np.corrcoef(a, b)[0, 1])

    def test_two_variables_one_pair(self, dataset):
        result = GwssService().gwss_all(dataset, ["a", "b"], GLOBAL)
        assert list(result.local_pearson) == ["a.b"]
        assert pair_names(["a", "b", "c"]) == ["a.b", "a.c", "b.c"]

    def test_table_layout(self, dataset):
        spec = KernelSpec(family=KernelFamily.BISQUARE, bandwidth=10, adaptive=True)
        table = GwssService().gwss_all(dataset, ["a", "b", "c"], spec, include_quantiles=True).table()
        assert len(table) == 25
        assert list(table.columns[:3]) == ["a_LM", "b_LM", "c_LM"]
        assert "Spearman_rho_b.c" in table.columns
        assert list(table.columns[-3:]) == ["a_QI", "b_QI", "c_QI"]

    def test_quantiles_optional(self, dataset):
        result = GwssService().gwss_all(dataset, ["a"], GLOBAL)
        assert not result.has_quantiles
        assert "a_Median" not in result.table().columns

    def test_streaming_matches_materialized(self, dataset):
        spec = KernelSpec(family=KernelFamily.GAUSSIAN, bandwidth=1.5)
        dense = GwssService().gwss_all(dataset, ["a", "b"], spec).table()
        streamed = GwssService().gwss_all(dataset, ["a", "b"], spec, stream=True).table()
        np.testing.assert_array_equal(dense.to_numpy(), streamed.to_numpy())

    def test_threads_match_serial(self, dataset):
        spec = KernelSpec(family=KernelFamily.BISQUARE, bandwidth=3.0)
        serial = GwssService(threads=1).gwss_all(dataset, ["a", "c"], spec).table()
        threaded = GwssService(threads=3).gwss_all(dataset, ["a", "c"], spec).table()
        np.testing.assert_array_equal(serial.to_numpy(), threaded.to_numpy())

    def test_degenerate_statistic_becomes_nan_with_warning(self):
        ds = make_dataset(grid_coords(3), {"a": np.arange(9.0), "k": np.full(9, 4.0)})
        result = GwssService().gwss_all(ds, ["a", "k"], GLOBAL)
        assert np.all(np.isnan(result.local_skew["k"]))
        assert np.all(np.isnan(result.local_pearson["a.k"]))
        np.testing.assert_allclose(result.local_mean["k"], 4.0)
        assert any("k_LSKe" in warning for warning in result.warnings)

    def test_unknown_variable(self, dataset):
        with pytest.raises(MissingColumnError):
            GwssService().gwss_all(dataset, ["zzz"], GLOBAL)


class TestWeightScale:
    @pytest.fixture
    def sample(self):
        rng = np.random.default_rng(31)
        z = rng.gamma(2.0, size=25) + 1.0
        y = 0.5 * z + rng.normal(size=25)
        w = rng.uniform(0.0, 1.0, size=25)
        w[[3, 11]] = 0.0
        return z, y, w

    @pytest.mark.parametrize("scale", [1e-3, 7.5, 1e4])
    def test_single_variable_statistics(self, sample, scale):
        z, _, w = sample
        for statistic in (gw_mean, gw_sd, gw_variance, gw_skew, gw_cv, gw_median, gw_iqr, gw_qi):
            assert statistic(z, scale * w) == pytest.approx(statistic(z, w), rel=1e-9, abs=1e-12)
        np.testing.assert_allclose(
            gw_quantiles(z, scale * w, [0.1, 0.25, 0.9]), gw_quantiles(z, w, [0.1, 0.25, 0.9]), rtol=1e-9
        )

    @pytest.mark.parametrize("scale", [1e-3, 7.5, 1e4])
    def test_pair_statistics(self, sample, scale):
        z, y, w = sample
        for statistic in (gw_covariance, gw_pearson, gw_spearman):
            assert statistic(z, y, scale * w) == pytest.approx(statistic(z, y, w), rel=1e-9, abs=1e-12)
        np.testing.assert_allclose(weighted_ranks(z, scale * w), weighted_ranks(z, w), rtol=1e-9)
