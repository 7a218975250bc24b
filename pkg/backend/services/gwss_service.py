"""GW summary statistics: local moments, correlations and quantile measures"""
import logging
from collections import Counter
from itertools import combinations
from typing import Dict, List, Sequence, Union

import numpy as np

from exceptions import (
    DegenerateLocalDistributionError,
    GwNumericalError,
    InsufficientLocalDataError,
    ZeroMeanError,
    ZeroWeightSumError,
)
from models.kernel import KernelSpec, WeightVector
from models.results import GwssResult
from models.spatial import SpatialDataset, VariableSelection
from services.distance_service import DistanceRows
from services.spatial_service import resolve_selection, validate
from services.weighting_service import validate_kernel_spec, weights_for
from utils.parallel import map_locations

logger = logging.getLogger(__name__)

Weights = Union[WeightVector, np.ndarray, Sequence[float]]

# A local standard deviation at or below this fraction of max(1, |mean|) is treated as zero
DEGENERATE_SD = 1e-12


def _weights(weights: Weights) -> np.ndarray:
    w = weights.w if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    return np.asarray(w, dtype=float)


def _total(w: np.ndarray) -> float:
    total = float(w.sum())
    if not total > 0:
        raise ZeroWeightSumError()
    return total


def _require_spread(sd: float, mean: float, what: str) -> None:
    if sd <= DEGENERATE_SD * max(1.0, abs(mean)):
        raise DegenerateLocalDistributionError(f"Local standard deviation of {what} is zero")


def gw_mean(z, weights: Weights) -> float:
    """m(z) = sum(w z) / sum(w)"""
    w = _weights(weights)
    return float(np.dot(w, np.asarray(z, dtype=float)) / _total(w))


def gw_variance(z, weights: Weights) -> float:
    z = np.asarray(z, dtype=float)
    w = _weights(weights)
    total = _total(w)
    m = np.dot(w, z) / total
    return float(np.dot(w, (z - m) ** 2) / total)


def gw_sd(z, weights: Weights) -> float:
    return float(np.sqrt(gw_variance(z, weights)))


def gw_skew(z, weights: Weights) -> float:
    """Real cube root of the third weighted central moment over the GW standard deviation"""
    z = np.asarray(z, dtype=float)
    w = _weights(weights)
    total = _total(w)
    m = np.dot(w, z) / total
    sd = np.sqrt(np.dot(w, (z - m) ** 2) / total)
    _require_spread(sd, m, "the variable")
    return float(np.cbrt(np.dot(w, (z - m) ** 3) / total) / sd)


def gw_cv(z, weights: Weights) -> float:
    m = gw_mean(z, weights)
    if m == 0:
        raise ZeroMeanError()
    return gw_sd(z, weights) / m


def gw_covariance(z, y, weights: Weights) -> float:
    """c(z, y) = sum(w (z - m_z)(y - m_y)) / sum(w)"""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = _weights(weights)
    total = _total(w)
    mz, my = np.dot(w, z) / total, np.dot(w, y) / total
    return float(np.dot(w, (z - mz) * (y - my)) / total)


def gw_pearson(z, y, weights: Weights) -> float:
    """GW correlation c(z, y) / (s(z) s(y))"""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = _weights(weights)
    total = _total(w)
    mz, my = np.dot(w, z) / total, np.dot(w, y) / total
    sz = np.sqrt(np.dot(w, (z - mz) ** 2) / total)
    sy = np.sqrt(np.dot(w, (y - my) ** 2) / total)
    _require_spread(sz, mz, "the first variable")
    _require_spread(sy, my, "the second variable")
    return float(np.dot(w, (z - mz) * (y - my)) / total / (sz * sy))


def gw_quantiles(z, weights: Weights, probs) -> List[float]:
    """
    Weighted quantiles by midpoint cumulative-weight interpolation.

    Positively weighted values are sorted ascending and placed at
    p_j = (c_j - w_j / 2) / sum(w); each quantile interpolates linearly between
    bracketing points and is clamped to the range of the positively weighted values.
    """
    z = np.asarray(z, dtype=float)
    w = _weights(weights)
    positive = w > 0
    if not positive.any():
        raise InsufficientLocalDataError("No positively weighted data for local quantiles")
    values, mass = z[positive], w[positive]
    order = np.argsort(values, kind="stable")
    values, mass = values[order], mass[order]
    positions = (np.cumsum(mass) - mass / 2.0) / mass.sum()
    return [float(q) for q in np.interp(np.asarray(probs, dtype=float), positions, values)]


def gw_median(z, weights: Weights) -> float:
    return gw_quantiles(z, weights, [0.5])[0]


def gw_iqr(z, weights: Weights) -> float:
    q1, q3 = gw_quantiles(z, weights, [0.25, 0.75])
    return q3 - q1


def gw_qi(z, weights: Weights) -> float:
    """Quantile imbalance (2 Q2 - Q1 - Q3) / (Q3 - Q1): -1 at median = Q1, +1 at median = Q3"""
    q1, q2, q3 = gw_quantiles(z, weights, [0.25, 0.5, 0.75])
    if not q3 > q1:
        raise DegenerateLocalDistributionError("Local interquartile range is zero")
    return (2.0 * q2 - q1 - q3) / (q3 - q1)


def weighted_ranks(z, weights: Weights) -> np.ndarray:
    """
    Midranks of ``z`` under weights, normalized by the weight total:
    rank(z_j) = (sum of w_k over z_k < z_j + half the sum over z_k = z_j) / sum(w)
    """
    z = np.asarray(z, dtype=float)
    w = _weights(weights)
    total = _total(w)
    order = np.argsort(z, kind="stable")
    ordered = z[order]
    cumulative = np.concatenate([[0.0], np.cumsum(w[order])])
    below = cumulative[np.searchsorted(ordered, z, side="left")]
    through = cumulative[np.searchsorted(ordered, z, side="right")]
    return (below + 0.5 * (through - below)) / total


def gw_spearman(z, y, weights: Weights) -> float:
    """GW Pearson correlation of the local weighted ranks of z and y"""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = _weights(weights)
    _total(w)
    positive = w > 0
    zp, yp, wp = z[positive], y[positive], w[positive]
    return gw_pearson(weighted_ranks(zp, wp), weighted_ranks(yp, wp), wp)


def pair_names(names: List[str]) -> List[str]:
    return [f"{a}.{b}" for a, b in combinations(names, 2)]


class GwssService:
    """Computes every GW summary statistic at every data location"""

    def __init__(self, threads: int = 1):
        self.threads = threads

    def gwss_all(
        self,
        ds: SpatialDataset,
        selection: Union[VariableSelection, List[str]],
        spec: KernelSpec,
        include_quantiles: bool = False,
        stream: bool = False,
    ) -> GwssResult:
        """
        Local means, SDs, variances, skews, CVs, covariances, Pearson and
        Spearman correlations (and optionally medians, IQRs and QIs).

        A degenerate local distribution yields NaN for the affected statistic at
        that location and a warning, instead of failing the whole run.
        """
        if not isinstance(selection, VariableSelection):
            selection = VariableSelection(independents=list(selection))
        validate(ds)
        resolve_selection(ds, selection)
        validate_kernel_spec(spec, ds.n)
        names = list(selection.independents)
        data = ds.columns(names)
        pairs = list(combinations(range(len(names)), 2))
        rows = DistanceRows(ds.coords, spec=spec.distance, stream=stream)

        def at_location(i: int):
            weights = weights_for(rows.row(i), spec, target_index=i)
            values: Dict[str, float] = {}
            failures: List[str] = []

            def record(label: str, func, *args):
                try:
                    values[label] = func(*args, weights)
                except GwNumericalError:
                    values[label] = float("nan")
                    failures.append(label)

            for j, name in enumerate(names):
                column = data[:, j]
                record(f"{name}_LM", gw_mean, column)
                record(f"{name}_LSD", gw_sd, column)
                record(f"{name}_LVar", gw_variance, column)
                record(f"{name}_LSKe", gw_skew, column)
                record(f"{name}_LCV", gw_cv, column)
                if include_quantiles:
                    record(f"{name}_Median", gw_median, column)
                    record(f"{name}_IQR", gw_iqr, column)
                    record(f"{name}_QI", gw_qi, column)
            for a, b in pairs:
                pair = f"{names[a]}.{names[b]}"
                record(f"Cov_{pair}", gw_covariance, data[:, a], data[:, b])
                record(f"Corr_{pair}", gw_pearson, data[:, a], data[:, b])
                record(f"Spearman_rho_{pair}", gw_spearman, data[:, a], data[:, b])
            return values, failures

        results = map_locations(at_location, ds.n, self.threads)

        def series(label: str) -> np.ndarray:
            return np.array([values[label] for values, _ in results])

        warnings = []
        counts = Counter(label for _, failures in results for label in failures)
        for label, count in counts.items():
            message = f"{label} undefined at {count} location(s); written as NaN"
            logger.warning(message)
            warnings.append(message)

        def per_variable(suffix: str) -> Dict[str, np.ndarray]:
            return {name: series(f"{name}_{suffix}") for name in names}

        def per_pair(prefix: str) -> Dict[str, np.ndarray]:
            return {pair: series(f"{prefix}_{pair}") for pair in pair_names(names)}

        logger.info(f"GW summary statistics computed at {ds.n} locations for {len(names)} variable(s)")
        return GwssResult(
            variable_names=names,
            local_mean=per_variable("LM"),
            local_sd=per_variable("LSD"),
            local_variance=per_variable("LVar"),
            local_skew=per_variable("LSKe"),
            local_cv=per_variable("LCV"),
            local_covariance=per_pair("Cov"),
            local_pearson=per_pair("Corr"),
            local_spearman=per_pair("Spearman_rho"),
            local_median=per_variable("Median") if include_quantiles else None,
            local_iqr=per_variable("IQR") if include_quantiles else None,
            local_qi=per_variable("QI") if include_quantiles else None,
            spec=spec,
            warnings=warnings,
        )
