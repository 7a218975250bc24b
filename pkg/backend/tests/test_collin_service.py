"""Tests for local collinearity diagnostics and locally compensated ridge GW regression."""
import numpy as np
import pytest

from exceptions import ConfigError, SingularCorrelationMatrixError, ZeroColumnError
from models.kernel import KernelFamily, KernelSpec
from models.spatial import VariableSelection
from services.collin_service import (
    CollinService,
    bkw_condition_number,
    global_vif,
    ridge_for_target_cn,
    variance_decomposition,
)
from services.gwr_service import GwrService
from tests.test_helpers import grid_coords, make_dataset

SELECTION = VariableSelection(dependent="y", independents=["x1", "x2"])
ADAPTIVE_20 = KernelSpec(family=KernelFamily.BISQUARE, bandwidth=20, adaptive=True)


@pytest.fixture
def collinear_dataset():
    """7 x 7 grid where x2 nearly duplicates x1 in the east"""
    rng = np.random.default_rng(17)
    coords = grid_coords(7)
    n = coords.shape[0]
    x1 = rng.normal(size=n)
    spread = np.where(coords[:, 0] >= 3, 0.01, 1.0)
    x2 = x1 + spread * rng.normal(size=n)
    y = 2.0 + x1 + 0.5 * x2 + rng.normal(scale=0.2, size=n)
    return make_dataset(coords, {"y": y, "x1": x1, "x2": x2})


class TestHelpers:
    def test_ridge_for_target_cn(self):
        assert ridge_for_target_cn([4.0, 1.0], 3.0) == pytest.approx(0.5)

    def test_ridge_not_needed(self):
        assert ridge_for_target_cn([4.0, 2.0], 3.0) == 0.0

    def test_ridge_reaches_target_ratio(self):
        values = np.array([50.0, 3.0, 0.01])
        ridge = ridge_for_target_cn(values, 10.0)
        assert (values[0] + ridge) / (values[-1] + ridge) == pytest.approx(10.0)

    def test_ridge_target_must_exceed_one(self):
        with pytest.raises(ConfigError):
            ridge_for_target_cn([4.0, 1.0], 1.0)

    def test_condition_number_of_orthogonal_columns(self):
        M = np.array([[1.0, 1.0], [1.0, -1.0], [1.0, 1.0], [1.0, -1.0]])
        assert bkw_condition_number(M) == pytest.approx(1.0)

    def test_condition_number_scale_invariant(self):
        M = np.random.default_rng(1).normal(size=(10, 3))
        assert bkw_condition_number(M * [1.0, 1000.0, 0.01]) == pytest.approx(bkw_condition_number(M))

    def test_zero_column(self):
        with pytest.raises(ZeroColumnError):
            bkw_condition_number(np.column_stack([np.ones(4), np.zeros(4)]))

    def test_variance_decomposition_rows_sum_to_one(self):
        M = np.random.default_rng(2).normal(size=(12, 4))
        M = M / np.linalg.norm(M, axis=0)
        singular_values, proportions = variance_decomposition(M)
        assert np.all(np.diff(singular_values) <= 0)
        np.testing.assert_allclose(proportions.sum(axis=1), 1.0)
        assert np.all(proportions >= 0)

    def test_global_vif(self, collinear_dataset):
        x1, x2 = collinear_dataset.column("x1"), collinear_dataset.column("x2")
        r = np.corrcoef(x1, x2)[0, 1]
        np.testing.assert_allclose(global_vif(collinear_dataset, ["x1", "x2"]), 1.0 / (1.0 - r ** 2))
        np.testing.assert_array_equal(global_vif(collinear_dataset, ["x1"]), [1.0])


class TestCollinDiagnostics:
    def test_orthogonal_predictors_have_unit_vif(self):
        ds = make_dataset(
            grid_coords(3)[:8],
            {
                "x1": [1, -1, 1, -1, 1, -1, 1, -1],
                "x2": [1, 1, -1, -1, 1, 1, -1, -1],
            },
        )
        result = CollinService().collin_diagnostics(
            ds, VariableSelection(independents=["x1", "x2"]), KernelSpec(family=KernelFamily.GLOBAL)
        )
        np.testing.assert_allclose(result.local_vifs, 1.0, atol=1e-12)
        np.testing.assert_allclose(result.local_correlations, 0.0, atol=1e-12)

    def test_duplicate_predictor(self, collinear_dataset):
        ds = make_dataset(
            collinear_dataset.coords,
            {"y": collinear_dataset.column("y"), "x1": collinear_dataset.column("x1"), "x3": collinear_dataset.column("x1")},
        )
        with pytest.raises(SingularCorrelationMatrixError):
            CollinService().collin_diagnostics(ds, VariableSelection(independents=["x1", "x3"]), ADAPTIVE_20)

    def test_boxcar_covering_every_point_gives_global_condition_number(self, collinear_dataset):
        spec = KernelSpec(family=KernelFamily.BOXCAR, bandwidth=100.0)
        result = CollinService().collin_diagnostics(collinear_dataset, SELECTION, spec)
        X = np.column_stack([np.ones(49), collinear_dataset.columns(["x1", "x2"])])
        np.testing.assert_allclose(result.local_cn, bkw_condition_number(X), rtol=1e-10)

    def test_local_structure(self, collinear_dataset):
        result = CollinService().collin_diagnostics(collinear_dataset, SELECTION, ADAPTIVE_20)
        assert result.local_vdps.shape == (49, 3, 3)
        np.testing.assert_allclose(result.local_vdps.sum(axis=2), 1.0)
        assert np.all(result.local_cn >= 1.0)
        east = (collinear_dataset.coords[:, 0] == 6) & (np.abs(collinear_dataset.coords[:, 1] - 3) <= 1)
        west = collinear_dataset.coords[:, 0] == 0
        assert result.local_cn[east].min() > result.local_cn[west].max()

    def test_table_and_flags(self, collinear_dataset):
        table = CollinService().collin_diagnostics(collinear_dataset, SELECTION, ADAPTIVE_20).table()
        assert list(table.columns) == [
            "Corr_x1.x2", "x1_VIF", "x2_VIF", "Intercept_VDP", "x1_VDP", "x2_VDP", "Local_CN",
            "Corr_flag", "VIF_flag", "VDP_flag", "CN_flag",
        ]
        east = (collinear_dataset.coords[:, 0] == 6) & (np.abs(collinear_dataset.coords[:, 1] - 3) <= 1)
        assert table.loc[east, "VIF_flag"].all()


class TestLcr:
    def test_unadjusted_zero_ridge_matches_basic_gwr(self, regression_dataset):
        lcr = CollinService().gwr_lcr(regression_dataset, SELECTION, ADAPTIVE_20)
        basic = GwrService().gwr_basic(regression_dataset, SELECTION, ADAPTIVE_20)
        np.testing.assert_allclose(lcr.coefficients, basic.coefficients, atol=1e-10)
        np.testing.assert_allclose(lcr.fitted, basic.fitted, atol=1e-10)
        np.testing.assert_array_equal(lcr.local_lambda, 0.0)

    def test_adjusted_caps_condition_number(self, collinear_dataset):
        kappa = 30.0
        lcr = CollinService().gwr_lcr(collinear_dataset, SELECTION, ADAPTIVE_20, adjust=True, cn_thresh=kappa)
        high = lcr.local_cn > kappa
        assert high.any()
        assert np.all(lcr.local_lambda[high] > 0)
        np.testing.assert_array_equal(lcr.local_lambda[~high], 0.0)
        np.testing.assert_allclose(lcr.adjusted_cn[high], kappa, rtol=1e-8)
        assert np.all(lcr.adjusted_cn <= kappa * (1 + 1e-8))

    def test_global_ridge(self, collinear_dataset):
        lcr = CollinService().gwr_lcr(collinear_dataset, SELECTION, ADAPTIVE_20, lambda_=0.1)
        np.testing.assert_array_equal(lcr.local_lambda, 0.1)
        assert np.all(lcr.adjusted_cn < lcr.local_cn)

    def test_negative_lambda(self, collinear_dataset):
        with pytest.raises(ConfigError):
            CollinService().gwr_lcr(collinear_dataset, SELECTION, ADAPTIVE_20, lambda_=-1.0)

    def test_table_columns(self, collinear_dataset):
        table = CollinService().gwr_lcr(collinear_dataset, SELECTION, ADAPTIVE_20, adjust=True).table()
        assert list(table.columns[-2:]) == ["Local_CN", "Local_Lambda"]

    def test_bandwidth_search(self, collinear_dataset):
        spec = KernelSpec(family=KernelFamily.BISQUARE, adaptive=True)
        result = CollinService().lcr_bandwidth(collinear_dataset, SELECTION, spec, adjust=True)
        assert 10 <= result.value <= 49
        assert result.score == pytest.approx(
            CollinService().lcr_cv_score(collinear_dataset, SELECTION, spec.with_bandwidth(result.value), adjust=True)
        )

    def test_cn_explore(self, collinear_dataset):
        spec = KernelSpec(family=KernelFamily.BISQUARE, adaptive=True)
        result = CollinService().cn_explore(collinear_dataset, "y", [["x1"], ["x1", "x2"]], spec)
        assert len(result.models) == 2
        table = result.table()
        assert list(table["variables"]) == ["x1", "x1+x2"]
        assert table.loc[1, "Median"] > table.loc[0, "Median"]


class TestSweeps:
    def test_ridge_identity_over_random_spectra(self):
        rng = np.random.default_rng(1000)
        zero, positive = 0, 0
        for _ in range(1000):
            values = np.sort(10.0 ** rng.uniform(-4.0, 4.0, size=rng.integers(2, 7)))[::-1]
            kappa = float(rng.uniform(1.5, 200.0))
            ridge = ridge_for_target_cn(values, kappa)
            if values[0] / values[-1] <= kappa:
                assert ridge == 0.0
                zero += 1
            else:
                assert ridge > 0.0
                assert (values[0] + ridge) / (values[-1] + ridge) == pytest.approx(kappa, rel=1e-9)
                positive += 1
        assert zero > 0
        assert positive > 0

    def test_unadjusted_lcr_matches_basic_gwr_on_random_instances(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            n = int(rng.integers(25, 40))
            coords = rng.uniform(0.0, 10.0, size=(n, 2))
            x1 = rng.normal(size=n)
            x2 = rng.normal(size=n)
            y = rng.normal(size=n) + x1 * coords[:, 0] / 10.0
            ds = make_dataset(coords, {"y": y, "x1": x1, "x2": x2})
            if rng.uniform() < 0.5:
                spec = KernelSpec(family=KernelFamily.BISQUARE, bandwidth=int(rng.integers(15, n + 1)), adaptive=True)
            else:
                spec = KernelSpec(family=KernelFamily.GAUSSIAN, bandwidth=float(rng.uniform(3.0, 8.0)))

            lcr = CollinService().gwr_lcr(ds, SELECTION, spec, adjust=False)
            basic = GwrService().gwr_basic(ds, SELECTION, spec)

            np.testing.assert_allclose(lcr.coefficients, basic.coefficients, rtol=1e-7, atol=1e-9)
            np.testing.assert_allclose(lcr.fitted, basic.fitted, rtol=1e-7, atol=1e-9)
            np.testing.assert_array_equal(lcr.local_lambda, 0.0)
