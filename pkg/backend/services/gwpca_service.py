"""Basic and robust GW principal components analysis"""
import logging
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from exceptions import (
    InsufficientLocalDataError,
    InvalidComponentCountError,
    KEqualsMError,
    ScoresUnavailableError,
    SingularLocalCovarianceError,
    ZeroWeightSumError,
)
from models.kernel import BandwidthResult, KernelFamily, KernelSpec, WeightVector
from models.results import GlobalPcaResult, GwpcaResult
from models.spatial import SpatialDataset, VariableSelection
from services.distance_service import DistanceRows
from services.mcd_service import mcd, subset_size
from services.spatial_service import resolve_selection, validate
from services.weighting_service import default_bounds, optimize_bandwidth, validate_kernel_spec, weights_for
from utils.parallel import map_locations

logger = logging.getLogger(__name__)

# Continuous kernels with a fixed bandwidth: the robust window keeps w > this fraction of max(w)
ROBUST_WINDOW_FRACTION = 1e-6


def local_covariance(X, weights: Union[WeightVector, np.ndarray]) -> np.ndarray:
    """Covariance about the GW means: sum_i w_i (x_i - m)(x_i - m)^T / sum(w)"""
    X = np.asarray(X, dtype=float)
    w = weights.w if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    total = float(w.sum())
    if not total > 0:
        raise ZeroWeightSumError()
    centered = X - (w @ X) / total
    return (centered * w[:, None]).T @ centered / total


def _gw_center(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    return (w @ X) / w.sum()


def orient(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude element is positive"""
    vectors = np.array(vectors, dtype=float)
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigen_descending(cov: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition sorted by decreasing eigenvalue, sign-normalized"""
    values, vectors = linalg.eigh(cov)
    return values[::-1], orient(vectors[:, ::-1])


def robust_window(w: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Indices of the local sample passed to the unweighted MCD"""
    if spec.family.continuous and spec.family is not KernelFamily.GLOBAL:
        if spec.adaptive:
            return np.sort(np.argsort(-w, kind="stable")[: int(spec.bandwidth)])
        return np.flatnonzero(w > ROBUST_WINDOW_FRACTION * w.max())
    return np.flatnonzero(w > 0)


def global_pca(ds: SpatialDataset, variables: List[str], robust: bool = False, alpha: float = 0.75, seed: int = 42) -> GlobalPcaResult:
    """Whole-map PCA of the population covariance (MCD covariance when robust)"""
    validate(ds)
    resolve_selection(ds, VariableSelection(independents=variables))
    X = ds.columns(variables)
    if robust:
        cov = mcd(X, alpha=alpha, seed=seed).cov
    else:
        cov = local_covariance(X, np.ones(ds.n))
    values, vectors = eigen_descending(cov)
    return GlobalPcaResult(eigenvalues=values, loadings=vectors, variable_names=list(variables), robust=robust)


def winning_variable(result: GwpcaResult, component: int = 1) -> List[str]:
    """Per location, the variable with the largest absolute loading on ``component`` (1-based)"""
    if not 1 <= component <= result.m:
        raise InvalidComponentCountError(f"Component must be between 1 and {result.m}", component=component)
    return [result.variable_names[i] for i in result.winning_index(component)]


def ptv(result: GwpcaResult, k: int) -> np.ndarray:
    if not 1 <= k <= result.m:
        raise InvalidComponentCountError(f"k must be between 1 and {result.m}", k=k)
    return result.ptv(k)


class GwpcaService:
    """Local eigendecomposition of GW (or MCD) covariance matrices"""

    def __init__(self, threads: int = 1, mcd_alpha: float = 0.75, seed: int = 42):
        self.threads = threads
        self.mcd_alpha = mcd_alpha
        self.seed = seed

    def _local_moments(
        self,
        X: np.ndarray,
        w: np.ndarray,
        spec: KernelSpec,
        robust: bool,
        location: int,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(center, covariance) of the local sample at one location"""
        m = X.shape[1]
        if robust:
            window = robust_window(w, spec)
            h = subset_size(window.size, self.mcd_alpha)
            if h <= m:
                raise InsufficientLocalDataError(
                    f"Location {location + 1}: local window of {window.size} points gives h={h} <= {m}",
                    location=location + 1,
                )
            rng = np.random.default_rng([self.seed, location])
            estimate = mcd(X[window], alpha=self.mcd_alpha, rng=rng)
            return estimate.center, estimate.cov
        if np.count_nonzero(w > 0) < 2:
            raise InsufficientLocalDataError(
                f"Location {location + 1}: fewer than two positively weighted points",
                location=location + 1,
            )
        return _gw_center(X, w), local_covariance(X, w)

    def _decompose(self, cov: np.ndarray, location: int) -> Tuple[np.ndarray, np.ndarray]:
        if not np.trace(cov) > 0:
            raise SingularLocalCovarianceError(f"Location {location + 1}: local covariance is zero", location=location + 1)
        return eigen_descending(cov)

    def _prepare(self, ds: SpatialDataset, variables: List[str], spec: KernelSpec, k: int) -> np.ndarray:
        validate(ds)
        resolve_selection(ds, VariableSelection(independents=variables))
        validate_kernel_spec(spec, ds.n)
        m = len(variables)
        if not 1 <= k <= m:
            raise InvalidComponentCountError(f"k must be between 1 and {m}, got {k}", k=k, m=m)
        if ds.n <= m:
            raise InsufficientLocalDataError(f"GW PCA needs more observations ({ds.n}) than variables ({m})")
        return ds.columns(variables)

    def gwpca_fit(
        self,
        ds: SpatialDataset,
        variables: List[str],
        spec: KernelSpec,
        k: int = 2,
        robust: bool = False,
        targets: Optional[np.ndarray] = None,
        with_scores: Optional[bool] = None,
        stream: bool = False,
    ) -> GwpcaResult:
        """
        Local eigenvalues, loadings and scores at every data location (or at
        ``targets``, where scores cannot be obtained).

        Args:
            ds: dataset (standardize beforehand for correlation-based PCA)
            variables: analysis columns
            spec: kernel and distance specification
            k: retained components for PTV and winning-variable reporting
            robust: use the MCD covariance of the local window
            targets: optional r x 2 target coordinates
            with_scores: compute component scores; defaults to True at data
                locations and must stay off for ``targets``
        """
        X = self._prepare(ds, variables, spec, k)
        if targets is not None and with_scores:
            raise ScoresUnavailableError()
        with_scores = targets is None if with_scores is None else with_scores
        rows = DistanceRows(ds.coords, targets, spec.distance, stream=stream)

        def at_location(i: int):
            w = weights_for(rows.row(i), spec, target_index=None if targets is not None else i).w
            center, cov = self._local_moments(X, w, spec, robust, i)
            values, vectors = self._decompose(cov, i)
            score = (X[i] - center) @ vectors if targets is None and with_scores else None
            return values, vectors, score

        results = map_locations(at_location, len(rows), self.threads)
        eigenvalues = np.array([values for values, _, _ in results])
        loadings = np.array([vectors for _, vectors, _ in results])
        scores = np.array([score for _, _, score in results]) if targets is None and with_scores else None
        logger.info(
            f"{'Robust' if robust else 'Basic'} GW PCA fitted at {len(rows)} locations "
            f"({len(variables)} variables, {spec.describe()})"
        )
        return GwpcaResult(
            eigenvalues=eigenvalues,
            loadings=loadings,
            scores=scores,
            variable_names=list(variables),
            k=k,
            robust=robust,
            spec=spec,
        )

    def gwpca_cv_score(
        self,
        ds: SpatialDataset,
        variables: List[str],
        spec: KernelSpec,
        k: int,
        robust: bool = False,
        rows: Optional[DistanceRows] = None,
    ) -> float:
        """
        Leave-one-out CV score: sum over locations of the squared residual of the
        locally centered row after projection on the first k components fitted
        without that row.
        """
        if k < 1:
            raise InvalidComponentCountError(f"k must be at least 1, got {k}", k=k)
        if k >= len(variables):
            raise KEqualsMError(k=k, m=len(variables))
        X = self._prepare(ds, variables, spec, k)
        rows = rows or DistanceRows(ds.coords, spec=spec.distance)

        def at_location(i: int) -> float:
            w = np.array(weights_for(rows.row(i), spec, target_index=i).w)
            w[i] = 0.0
            center, cov = self._local_moments(X, w, spec, robust, i)
            _, vectors = self._decompose(cov, i)
            retained = vectors[:, :k]
            centered = X[i] - center
            residual = centered - retained @ (retained.T @ centered)
            return float(residual @ residual)

        return float(sum(map_locations(at_location, ds.n, self.threads)))

    def gwpca_bandwidth(
        self,
        ds: SpatialDataset,
        variables: List[str],
        k: int,
        robust: bool = False,
        adaptive: bool = True,
        family: KernelFamily = KernelFamily.BISQUARE,
        spec: Optional[KernelSpec] = None,
        bounds: Optional[Tuple[float, float]] = None,
        exhaustive: bool = False,
    ) -> BandwidthResult:
        """Bandwidth minimizing the leave-one-out CV score for k retained components"""
        if k >= len(variables):
            raise KEqualsMError(k=k, m=len(variables))
        template = spec or KernelSpec(family=family, adaptive=adaptive)
        template = template.model_copy(update={"adaptive": adaptive})
        rows = DistanceRows(ds.coords, spec=template.distance)
        if bounds is None:
            distance_range = None if adaptive else rows.positive_range()
            bounds = default_bounds(adaptive, ds.n, len(variables) + 2, distance_range)

        def objective(bandwidth) -> float:
            return self.gwpca_cv_score(ds, variables, template.with_bandwidth(bandwidth), k, robust, rows=rows)

        result = optimize_bandwidth(objective, adaptive, bounds, exhaustive=exhaustive)
        logger.info(f"GW PCA bandwidth for k={k} ({'robust' if robust else 'basic'}): {result.bandwidth}")
        return result

    def global_pca(self, ds: SpatialDataset, variables: List[str], robust: bool = False) -> GlobalPcaResult:
        return global_pca(ds, variables, robust, alpha=self.mcd_alpha, seed=self.seed)
