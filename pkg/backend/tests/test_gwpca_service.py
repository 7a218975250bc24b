"""Tests for basic and robust GW PCA."""
import numpy as np
import pytest

from exceptions import InvalidComponentCountError, KEqualsMError, ScoresUnavailableError
from models.kernel import KernelFamily, KernelSpec
from models.results import GwpcaResult
from services.gwpca_service import (
    GwpcaService,
    eigen_descending,
    global_pca,
    local_covariance,
    orient,
    ptv,
    winning_variable,
)
from services.spatial_service import standardize
from tests.test_helpers import grid_coords, make_dataset

VARIABLES = ["a", "b", "c"]
GLOBAL = KernelSpec(family=KernelFamily.GLOBAL)
ADAPTIVE_12 = KernelSpec(family=KernelFamily.BISQUARE, bandwidth=12, adaptive=True)


class TestHelpers:
    def test_local_covariance_with_unit_weights(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(20, 3))
        np.testing.assert_allclose(local_covariance(X, np.ones(20)), np.cov(X.T, bias=True))

    def test_orient_makes_largest_element_positive(self):
        vectors = orient(np.array([[0.2, -0.9], [-0.8, 0.1]]))
        np.testing.assert_allclose(vectors, [[-0.2, 0.9], [0.8, -0.1]])

    def test_eigen_descending(self):
        values, vectors = eigen_descending(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_allclose(values, [3.0, 2.0, 1.0])
        np.testing.assert_allclose(np.abs(vectors[:, 0]), [0.0, 1.0, 0.0])


class TestGwpcaFit:
    def test_global_kernel_matches_global_pca(self, pca_dataset):
        result = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, GLOBAL, k=2)
        reference = global_pca(pca_dataset, VARIABLES)
        np.testing.assert_allclose(result.eigenvalues, np.tile(reference.eigenvalues, (pca_dataset.n, 1)))
        np.testing.assert_allclose(result.loadings[0], reference.loadings, atol=1e-10)

    def test_standardized_trace(self, pca_dataset):
        ds = standardize(pca_dataset, VARIABLES)
        result = GwpcaService().gwpca_fit(ds, VARIABLES, GLOBAL)
        n = ds.n
        np.testing.assert_allclose(result.eigenvalues.sum(axis=1), 3.0 * (n - 1) / n)

    def test_local_eigen_structure(self, pca_dataset):
        result = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, ADAPTIVE_12, k=2)
        assert result.eigenvalues.shape == (pca_dataset.n, 3)
        assert np.all(np.diff(result.eigenvalues, axis=1) <= 1e-12)
        assert np.all(result.eigenvalues > -1e-12)
        for loadings in result.loadings:
            np.testing.assert_allclose(loadings.T @ loadings, np.eye(3), atol=1e-10)

    def test_ptv_and_winning_variable(self, pca_dataset):
        result = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, ADAPTIVE_12, k=2)
        values = ptv(result, 2)
        assert np.all((values > 0) & (values <= 100.0))
        np.testing.assert_allclose(ptv(result, 3), 100.0)
        assert set(winning_variable(result, 1)) <= set(VARIABLES)
        table = result.table()
        assert list(table.columns) == [
            "Comp.1_EV", "Comp.2_EV", "Comp.3_EV", "PTV_1", "PTV_2", "win_var_PC1", "win_var_PC2",
        ]

    def test_scores_at_data_locations(self, pca_dataset):
        result = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, GLOBAL)
        X = pca_dataset.columns(VARIABLES)
        expected = (X - X.mean(axis=0)) @ result.loadings[0]
        np.testing.assert_allclose(result.scores, expected, atol=1e-10)

    def test_targets_have_no_scores(self, pca_dataset):
        targets = np.array([[0.5, 0.5], [2.5, 3.5]])
        result = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, ADAPTIVE_12, targets=targets)
        assert result.eigenvalues.shape == (2, 3)
        assert result.scores is None
        with pytest.raises(ScoresUnavailableError):
            GwpcaService().gwpca_fit(pca_dataset, VARIABLES, ADAPTIVE_12, targets=targets, with_scores=True)

    def test_loadings_table(self, pca_dataset):
        table = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, GLOBAL).loadings_table()
        assert len(table) == pca_dataset.n * 3
        assert list(table.columns) == ["location", "component"] + VARIABLES

    @pytest.mark.parametrize("k", [0, 4])
    def test_component_count(self, pca_dataset, k):
        with pytest.raises(InvalidComponentCountError):
            GwpcaService().gwpca_fit(pca_dataset, VARIABLES, GLOBAL, k=k)

    def test_robust_fit(self, pca_dataset):
        service = GwpcaService(seed=5)
        result = service.gwpca_fit(pca_dataset, VARIABLES, ADAPTIVE_12, robust=True)
        assert result.robust
        assert np.all(np.isfinite(result.eigenvalues))
        again = GwpcaService(seed=5).gwpca_fit(pca_dataset, VARIABLES, ADAPTIVE_12, robust=True)
        np.testing.assert_array_equal(result.eigenvalues, again.eigenvalues)

    def test_streaming_matches_materialized(self, pca_dataset):
        spec = KernelSpec(family=KernelFamily.GAUSSIAN, bandwidth=2.0)
        dense = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, spec)
        streamed = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, spec, stream=True)
        np.testing.assert_array_equal(dense.eigenvalues, streamed.eigenvalues)


class TestBandwidth:
    def test_cv_score_is_non_negative(self, pca_dataset):
        score = GwpcaService().gwpca_cv_score(pca_dataset, VARIABLES, ADAPTIVE_12, k=2)
        assert score >= 0.0

    def test_cv_needs_k_below_m(self, pca_dataset):
        with pytest.raises(KEqualsMError):
            GwpcaService().gwpca_cv_score(pca_dataset, VARIABLES, ADAPTIVE_12, k=3)

    def test_adaptive_search(self, pca_dataset):
        result = GwpcaService().gwpca_bandwidth(pca_dataset, VARIABLES, k=2, adaptive=True)
        assert isinstance(result.bandwidth, int)
        assert 10 <= result.bandwidth <= pca_dataset.n
        assert result.score == min(score for _, score in result.trace)

    def test_bandwidth_needs_k_below_m(self, pca_dataset):
        with pytest.raises(KEqualsMError):
            GwpcaService().gwpca_bandwidth(pca_dataset, VARIABLES, k=3)


def _loo_reconstruction_error(X, coords, bandwidth, k):
    """Leave-one-out squared reconstruction error from explicitly weighted covariances"""
    total = 0.0
    for i in range(X.shape[0]):
        d = np.linalg.norm(coords - coords[i], axis=1)
        w = np.exp(-0.5 * (d / bandwidth) ** 2)
        w[i] = 0.0
        center = np.average(X, axis=0, weights=w)
        cov = np.cov(X.T, aweights=w, bias=True)
        _, vectors = np.linalg.eigh(cov)
        retained = vectors[:, ::-1][:, :k]
        centered = X[i] - center
        residual = centered - retained @ (retained.T @ centered)
        total += float(residual @ residual)
    return total


class TestCvScore:
    @pytest.mark.parametrize("k", [1, 2])
    def test_matches_explicit_leave_one_out_loop(self, pca_dataset, k):
        spec = KernelSpec(family=KernelFamily.GAUSSIAN, bandwidth=2.0)
        score = GwpcaService().gwpca_cv_score(pca_dataset, VARIABLES, spec, k=k)
        expected = _loo_reconstruction_error(pca_dataset.columns(VARIABLES), pca_dataset.coords, 2.0, k)
        assert score == pytest.approx(expected, rel=1e-8)

    def test_noiseless_rank_k_data_reconstructs_exactly(self):
        rng = np.random.default_rng(9)
        coords = grid_coords(6)
        latent = rng.normal(size=(36, 2))
        basis = rng.normal(size=(2, 4))
        X = 3.0 + latent @ basis
        ds = make_dataset(coords, {name: X[:, j] for j, name in enumerate(["p", "q", "r", "s"])})
        spec = KernelSpec(family=KernelFamily.BISQUARE, bandwidth=20, adaptive=True)
        score = GwpcaService().gwpca_cv_score(ds, ["p", "q", "r", "s"], spec, k=2)
        assert score == pytest.approx(0.0, abs=1e-18)
        assert GwpcaService().gwpca_cv_score(ds, ["p", "q", "r", "s"], spec, k=1) > 1e-3


class TestWinningVariable:
    def test_tie_goes_to_first_variable(self):
        loadings = np.array([[[0.7, 0.1, 0.0], [-0.7, 0.1, 0.0], [0.1, 0.99, 1.0]]])
        result = GwpcaResult(
            eigenvalues=np.array([[2.0, 1.0, 0.5]]),
            loadings=loadings,
            variable_names=VARIABLES,
            k=1,
            spec=GLOBAL,
        )
        assert winning_variable(result, 1) == ["a"]
        flipped = result.model_copy(update={"loadings": -loadings})
        assert winning_variable(flipped, 1) == ["a"]

    def test_sign_flips_do_not_change_the_winner(self, pca_dataset):
        result = GwpcaService().gwpca_fit(pca_dataset, VARIABLES, ADAPTIVE_12, k=2)
        signs = np.random.default_rng(13).choice([-1.0, 1.0], size=(pca_dataset.n, 1, 3))
        flipped = result.model_copy(update={"loadings": result.loadings * signs})
        for component in (1, 2, 3):
            assert winning_variable(flipped, component) == winning_variable(result, component)
