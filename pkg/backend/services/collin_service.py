"""Collinearity diagnostics and locally compensated ridge (LCR) GW regression"""
import logging
import math
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from exceptions import (
    ConfigError,
    GwModelError,
    InvalidSelectionError,
    SingularCorrelationMatrixError,
    SingularLocalFitError,
    ZeroColumnError,
)
from models.kernel import BandwidthResult, KernelSpec
from models.results import CnExploreModel, CnExploreResult, CollinDiagnostics, LcrFit
from models.spatial import SpatialDataset, VariableSelection
from services.distance_service import DistanceRows
from services.gwr_service import RCOND_LIMIT, reciprocal_condition
from services.gwss_service import gw_pearson, pair_names
from services.spatial_service import INTERCEPT, design_matrix, regression_inputs, resolve_selection, validate
from services.weighting_service import default_bounds, optimize_bandwidth, validate_kernel_spec, weights_for
from utils.parallel import map_locations

logger = logging.getLogger(__name__)

DEFAULT_CN_THRESHOLD = 30.0


def _column_norms(M: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(M, axis=0)
    zero = np.flatnonzero(~(norms > 0))
    if zero.size:
        raise ZeroColumnError(f"Design column {int(zero[0]) + 1} is identically zero", column=int(zero[0]) + 1)
    return norms


def bkw_condition_number(M) -> float:
    """Ratio of the extreme singular values after scaling every column to unit length"""
    M = np.asarray(M, dtype=float)
    scaled = M / _column_norms(M)
    singular_values = linalg.svd(scaled, compute_uv=False)
    if not singular_values[-1] > 0:
        return math.inf
    return float(singular_values[0] / singular_values[-1])


def global_vif(ds: SpatialDataset, independents: List[str]) -> np.ndarray:
    """VIFs of the global model: diagonal of the inverse predictor correlation matrix"""
    validate(ds)
    resolve_selection(ds, VariableSelection(independents=independents))
    if len(independents) == 1:
        return np.ones(1)
    corr = np.corrcoef(ds.columns(independents), rowvar=False)
    return np.diag(_invert_correlation(corr))


def ridge_for_target_cn(eigenvalues, kappa: float) -> float:
    """
    Smallest ridge lambda with (e_1 + lambda) / (e_p + lambda) <= kappa.

    Args:
        eigenvalues: cross-product eigenvalues, largest first
        kappa: target eigenvalue ratio (> 1)
    """
    if not kappa > 1:
        raise ConfigError(f"Target condition number must exceed 1, got {kappa}", kappa=kappa)
    values = np.asarray(eigenvalues, dtype=float)
    largest, smallest = float(values.max()), float(values.min())
    return max(0.0, (largest - smallest) / (kappa - 1.0) - smallest)


def variance_decomposition(scaled: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Singular values (descending) and variance-decomposition proportions of a
    column-scaled design; proportions[k, j] is the share of coefficient k's
    variance tied to singular value j and every row sums to 1.
    """
    _, singular_values, vt = linalg.svd(scaled, full_matrices=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = vt.T ** 2 / singular_values ** 2
    if not np.all(np.isfinite(phi)):
        raise SingularLocalFitError("Local design matrix is rank deficient")
    return singular_values, phi / phi.sum(axis=1, keepdims=True)


def _invert_correlation(corr: np.ndarray, location: Optional[int] = None) -> np.ndarray:
    if reciprocal_condition(corr) < RCOND_LIMIT:
        where = f" at location {location + 1}" if location is not None else ""
        raise SingularCorrelationMatrixError(
            f"Predictor correlation matrix{where} is singular",
            location=None if location is None else location + 1,
        )
    return linalg.inv(corr)


def _scaled_system(X: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sqrt(W) X scaled to unit columns, column norms, sqrt(w))"""
    root = np.sqrt(w)
    weighted = X * root[:, None]
    norms = _column_norms(weighted)
    return weighted / norms, norms, root


def _ridge_solve(scaled: np.ndarray, target: np.ndarray, ridge: float, location: Optional[int]) -> np.ndarray:
    A = scaled.T @ scaled + ridge * np.eye(scaled.shape[1])
    rcond = reciprocal_condition(A)
    if rcond < RCOND_LIMIT:
        raise SingularLocalFitError(
            "Ridge-augmented local system is singular",
            location=None if location is None else location + 1,
            condition_number=1.0 / rcond if rcond > 0 else math.inf,
        )
    return linalg.solve(A, scaled.T @ target, assume_a="sym")


class CollinService:
    """Local collinearity diagnostics and LCR GW regression"""

    def __init__(self, threads: int = 1):
        self.threads = threads

    def _design(self, ds: SpatialDataset, selection: VariableSelection, spec: KernelSpec, need_y: bool):
        validate_kernel_spec(spec, ds.n)
        if need_y or selection.dependent:
            X, y, names = regression_inputs(ds, selection)
        else:
            validate(ds)
            resolve_selection(ds, selection)
            X, y, names = design_matrix(ds, selection.independents), None, [INTERCEPT] + list(selection.independents)
        if not selection.independents:
            raise InvalidSelectionError("At least one independent variable is required")
        return X, y, names

    def collin_diagnostics(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        cn_threshold: float = DEFAULT_CN_THRESHOLD,
    ) -> CollinDiagnostics:
        """
        Local predictor correlations, VIFs, variance-decomposition proportions and
        condition numbers at the scale of each local regression.

        Raises:
            DegenerateLocalDistributionError: a predictor is locally constant
            SingularCorrelationMatrixError: local predictors are perfectly collinear
        """
        X, _, names = self._design(ds, selection, spec, need_y=False)
        predictors = X[:, 1:]
        m = predictors.shape[1]
        pairs = list(combinations(range(m), 2))
        rows = DistanceRows(ds.coords, spec=spec.distance)

        def at_location(i: int):
            w = weights_for(rows.row(i), spec, target_index=i).w
            corr = np.eye(m)
            for a, b in pairs:
                corr[a, b] = corr[b, a] = gw_pearson(predictors[:, a], predictors[:, b], w)
            vifs = np.diag(_invert_correlation(corr, i)) if m > 1 else np.ones(1)
            scaled, _, _ = _scaled_system(X, w)
            singular_values, proportions = variance_decomposition(scaled)
            return (
                np.array([corr[a, b] for a, b in pairs]),
                vifs,
                proportions,
                float(singular_values[0] / singular_values[-1]),
            )

        results = map_locations(at_location, ds.n, self.threads)
        logger.info(f"Collinearity diagnostics computed at {ds.n} locations ({spec.describe()})")
        return CollinDiagnostics(
            variable_names=list(selection.independents),
            coefficient_names=names,
            pair_names=pair_names(list(selection.independents)),
            local_correlations=np.array([r[0] for r in results]).reshape(ds.n, len(pairs)),
            local_vifs=np.array([r[1] for r in results]),
            local_vdps=np.array([r[2] for r in results]),
            local_cn=np.array([r[3] for r in results]),
            spec=spec,
            cn_threshold=cn_threshold,
        )

    @staticmethod
    def _local_ridge(singular_values: np.ndarray, adjust: bool, kappa: float, user_lambda: float) -> float:
        """Ridge in the scaled system: compensation above kappa when adjusting, else the user value"""
        if not adjust:
            return user_lambda
        cn = singular_values[0] / singular_values[-1] if singular_values[-1] > 0 else math.inf
        if cn <= kappa:
            return 0.0
        return ridge_for_target_cn(singular_values ** 2, kappa ** 2)

    def gwr_lcr(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        adjust: bool = False,
        cn_thresh: float = DEFAULT_CN_THRESHOLD,
        lambda_: float = 0.0,
    ) -> LcrFit:
        """
        Locally compensated ridge GW regression.

        The local condition number is measured on the column-scaled sqrt(W) X.
        With ``adjust`` a ridge is added only where it exceeds ``cn_thresh`` and is
        sized so the adjusted condition number equals the threshold; otherwise
        ``lambda_`` is applied everywhere. Coefficients are solved in the scaled
        system and divided by the column norms.
        """
        if lambda_ < 0:
            raise ConfigError(f"Ridge lambda must be non-negative, got {lambda_}", lambda_=lambda_)
        if adjust and not cn_thresh > 1:
            raise ConfigError(f"Condition number threshold must exceed 1, got {cn_thresh}", cn_thresh=cn_thresh)
        X, y, names = self._design(ds, selection, spec, need_y=True)
        rows = DistanceRows(ds.coords, spec=spec.distance)

        def at_location(i: int):
            w = weights_for(rows.row(i), spec, target_index=i).w
            scaled, norms, root = _scaled_system(X, w)
            singular_values = linalg.svd(scaled, compute_uv=False)
            cn = float(singular_values[0] / singular_values[-1]) if singular_values[-1] > 0 else math.inf
            ridge = self._local_ridge(singular_values, adjust, cn_thresh, lambda_)
            gamma = _ridge_solve(scaled, root * y, ridge, i)
            squared = singular_values ** 2
            adjusted = math.sqrt((squared[0] + ridge) / (squared[-1] + ridge)) if squared[-1] + ridge > 0 else math.inf
            return gamma / norms, cn, ridge, adjusted

        results = map_locations(at_location, ds.n, self.threads)
        coefficients = np.array([r[0] for r in results])
        fitted = np.einsum("ij,ij->i", X, coefficients)
        local_lambda = np.array([r[2] for r in results])
        logger.info(
            f"LCR GW regression fitted at {ds.n} locations; ridge applied at "
            f"{int(np.count_nonzero(local_lambda > 0))} location(s)"
        )
        return LcrFit(
            coefficient_names=names,
            coefficients=coefficients,
            y=y,
            fitted=fitted,
            residuals=y - fitted,
            local_cn=np.array([r[1] for r in results]),
            local_lambda=local_lambda,
            adjusted_cn=np.array([r[3] for r in results]),
            kappa=cn_thresh,
            adjust=adjust,
            spec=spec,
        )

    def lcr_cv_score(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        adjust: bool = False,
        cn_thresh: float = DEFAULT_CN_THRESHOLD,
        lambda_: float = 0.0,
        rows: Optional[DistanceRows] = None,
    ) -> float:
        """Leave-one-out prediction error of the LCR model, ridge recomputed without the left-out point"""
        X, y, _ = self._design(ds, selection, spec, need_y=True)
        rows = rows or DistanceRows(ds.coords, spec=spec.distance)

        def at_location(i: int) -> float:
            w = np.array(weights_for(rows.row(i), spec, target_index=i).w)
            w[i] = 0.0
            scaled, norms, root = _scaled_system(X, w)
            singular_values = linalg.svd(scaled, compute_uv=False)
            ridge = self._local_ridge(singular_values, adjust, cn_thresh, lambda_)
            beta = _ridge_solve(scaled, root * y, ridge, i) / norms
            return float((y[i] - X[i] @ beta) ** 2)

        return float(sum(map_locations(at_location, ds.n, self.threads)))

    def lcr_bandwidth(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        adjust: bool = False,
        cn_thresh: float = DEFAULT_CN_THRESHOLD,
        lambda_: float = 0.0,
        bounds: Optional[Tuple[float, float]] = None,
        exhaustive: bool = False,
    ) -> BandwidthResult:
        """Bandwidth minimizing the LCR leave-one-out CV score"""
        template = spec.with_bandwidth(1.0) if spec.bandwidth is None else spec
        X, _, _ = self._design(ds, selection, template, need_y=True)
        rows = DistanceRows(ds.coords, spec=spec.distance)
        if bounds is None:
            distance_range = None if spec.adaptive else rows.positive_range()
            bounds = default_bounds(spec.adaptive, ds.n, X.shape[1] + 1, distance_range)

        def objective(bandwidth) -> float:
            return self.lcr_cv_score(ds, selection, spec.with_bandwidth(bandwidth), adjust, cn_thresh, lambda_, rows)

        result = optimize_bandwidth(objective, spec.adaptive, bounds, exhaustive=exhaustive)
        logger.info(f"LCR bandwidth ({'adjusted' if adjust else 'unadjusted'}): {result.bandwidth}")
        return result

    def cn_explore(
        self,
        ds: SpatialDataset,
        dependent: str,
        candidate_models: List[List[str]],
        spec: KernelSpec,
    ) -> CnExploreResult:
        """
        Local condition numbers of alternative model structures; every model gets
        its own unadjusted LCR bandwidth. A failing model is reported and skipped.
        """
        models: List[CnExploreModel] = []
        warnings: List[str] = []
        for variables in candidate_models:
            if not variables:
                raise InvalidSelectionError("Every candidate model needs at least one predictor")
            selection = VariableSelection(dependent=dependent, independents=list(variables))
            try:
                bandwidth = self.lcr_bandwidth(ds, selection, spec).value
                fit = self.gwr_lcr(ds, selection, spec.with_bandwidth(bandwidth))
                models.append(CnExploreModel(variables=list(variables), bandwidth=bandwidth, local_cn=fit.local_cn))
            except GwModelError as exc:
                message = f"Model {'+'.join(variables)} failed: {exc.message}"
                logger.warning(message)
                warnings.append(message)
                models.append(CnExploreModel(variables=list(variables), error=exc.message))
        return CnExploreResult(models=models, warnings=warnings)
