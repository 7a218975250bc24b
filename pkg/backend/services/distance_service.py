"""Distances between target locations and data locations"""
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from exceptions import InvalidPowerError, NonFiniteValueError
from models.kernel import DistanceMatrix, DistanceMetric, DistanceSpec
from utils.dist_cache import read_distance_cache, write_distance_cache

logger = logging.getLogger(__name__)


def _check_spec(spec: DistanceSpec) -> None:
    if spec.metric is DistanceMetric.MINKOWSKI and not spec.p >= 1:
        raise InvalidPowerError(f"Minkowski power must be >= 1, got {spec.p}", p=spec.p)


def _as_points(points) -> np.ndarray:
    array = np.asarray(points, dtype=float)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    if not np.all(np.isfinite(array)):
        raise NonFiniteValueError("Coordinates must be finite")
    return array


def _haversine(targets: np.ndarray, data: np.ndarray, radius: float) -> np.ndarray:
    """Great-circle distance between (lon, lat) degree pairs on a sphere"""
    lon1, lat1 = np.radians(targets[:, 0])[:, None], np.radians(targets[:, 1])[:, None]
    lon2, lat2 = np.radians(data[:, 0])[None, :], np.radians(data[:, 1])[None, :]
    a = np.sin((lat2 - lat1) / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    return 2.0 * radius * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def _pairwise(targets: np.ndarray, data: np.ndarray, spec: DistanceSpec) -> np.ndarray:
    if spec.metric is DistanceMetric.GREAT_CIRCLE:
        return _haversine(targets, data, spec.earth_radius)
    if spec.p == 2:
        return cdist(targets, data, metric="euclidean")
    return cdist(targets, data, metric="minkowski", p=spec.p)


def distance(a, b, spec: Optional[DistanceSpec] = None) -> float:
    """Distance between two points under ``spec`` (Euclidean by default)."""
    spec = spec or DistanceSpec()
    _check_spec(spec)
    return float(_pairwise(_as_points(a), _as_points(b), spec)[0, 0])


def dist_matrix(dp, rp=None, spec: Optional[DistanceSpec] = None) -> DistanceMatrix:
    """
    Distances from every target point to every data point.

    Args:
        dp: n data points
        rp: optional r target points; omitted means the data points themselves
        spec: distance metric

    Returns:
        DistanceMatrix with ``symmetric`` set iff rp was omitted
    """
    spec = spec or DistanceSpec()
    _check_spec(spec)
    data = _as_points(dp)
    if rp is None:
        values = _pairwise(data, data, spec)
        values = np.triu(values, 1)
        values = values + values.T
        return DistanceMatrix(values=values, symmetric=True)
    return DistanceMatrix(values=_pairwise(_as_points(rp), data, spec), symmetric=False)


class DistanceRows:
    """
    Row provider over target-to-data distances.

    Materialized rows come from a dense matrix; streaming rows are computed on
    demand (one target at a time) with identical numerics.
    """

    def __init__(
        self,
        dp,
        rp=None,
        spec: Optional[DistanceSpec] = None,
        stream: bool = False,
    ):
        self.spec = spec or DistanceSpec()
        _check_spec(self.spec)
        self._matrix = None
        self.data = _as_points(dp)
        self.targets = self.data if rp is None else _as_points(rp)
        self.symmetric = rp is None
        self.stream = stream
        if not stream:
            self._matrix = dist_matrix(self.data, None if self.symmetric else self.targets, self.spec)

    @property
    def shape(self):
        if self._matrix is not None:
            return self._matrix.shape
        return (self.targets.shape[0], self.data.shape[0])

    def __len__(self) -> int:
        return self.shape[0]

    def row(self, index: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix.values[index]
        row = _pairwise(self.targets[index:index + 1], self.data, self.spec)[0]
        if self.symmetric:
            row[index] = 0.0
        return row

    def materialize(self) -> DistanceMatrix:
        if self._matrix is None:
            self._matrix = dist_matrix(self.data, None if self.symmetric else self.targets, self.spec)
        return self._matrix

    def positive_range(self):
        """(smallest positive, largest) distance over all rows"""
        low, high = np.inf, 0.0
        for i in range(len(self)):
            row = self.row(i)
            positive = row[row > 0]
            if positive.size:
                low = min(low, float(positive.min()))
            high = max(high, float(row.max()))
        return low, high


class DistanceService:
    """Distance matrices and their binary cache"""

    def __init__(self, earth_radius: float = 6378137.0):
        self.earth_radius = earth_radius

    def spec_for(self, geographic: bool, p: float = 2.0, earth_radius: Optional[float] = None) -> DistanceSpec:
        if geographic:
            return DistanceSpec.great_circle(earth_radius or self.earth_radius)
        return DistanceSpec(p=p)

    def dist_matrix(self, dp, rp=None, spec: Optional[DistanceSpec] = None) -> DistanceMatrix:
        matrix = dist_matrix(dp, rp, spec)
        logger.info(f"Computed {matrix.shape[0]}x{matrix.shape[1]} distance matrix")
        return matrix

    def write_cache(self, path: Union[str, Path], matrix: DistanceMatrix) -> None:
        write_distance_cache(path, matrix)
        logger.info(f"Distance cache written to {path}")

    def read_cache(self, path: Union[str, Path]) -> DistanceMatrix:
        return read_distance_cache(path)
