"""Minimum covariance determinant (MCD) estimator"""
import logging
import math
from itertools import combinations
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.special import comb

from exceptions import ConfigError, DegenerateSubsetError, InsufficientLocalDataError
from models.results import McdEstimate

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX_ROWS = 12
N_TRIALS = 500
MAX_C_STEPS = 100
# Covariances whose smallest eigenvalue is below this fraction of the largest are singular
SINGULAR_RATIO = 1e-12


def subset_size(rows: int, alpha: float) -> int:
    return int(math.ceil(alpha * rows))


def _moments(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    center = X.mean(axis=0)
    centered = X - center
    return center, centered.T @ centered / X.shape[0]


def _log_det(cov: np.ndarray) -> Optional[float]:
    """log det of a covariance, or None when it is singular"""
    eigenvalues = linalg.eigvalsh(cov)
    if not eigenvalues[-1] > 0 or eigenvalues[0] <= SINGULAR_RATIO * eigenvalues[-1]:
        return None
    return float(np.sum(np.log(eigenvalues)))


def _c_step(X: np.ndarray, center: np.ndarray, cov: np.ndarray, h: int) -> np.ndarray:
    """Indices of the h rows closest to ``center`` in the Mahalanobis metric of ``cov``"""
    centered = X - center
    distances = np.einsum("ij,ij->i", centered, linalg.solve(cov, centered.T, assume_a="pos").T)
    return np.sort(np.argsort(distances, kind="stable")[:h])


def _exhaustive(X: np.ndarray, h: int):
    best = None
    for subset in combinations(range(X.shape[0]), h):
        index = np.array(subset)
        _, cov = _moments(X[index])
        log_det = _log_det(cov)
        if log_det is not None and (best is None or log_det < best[0]):
            best = (log_det, index)
    return best


def _fast(X: np.ndarray, h: int, rng: np.random.Generator, n_trials: int):
    rows, m = X.shape
    best = None
    for _ in range(n_trials):
        start = rng.choice(rows, size=m + 1, replace=False)
        center, cov = _moments(X[start])
        # Grow a singular start with random rows until it spans the space
        order = rng.permutation(np.setdiff1d(np.arange(rows), start))
        cursor = 0
        while _log_det(cov) is None and cursor < order.size and start.size < h:
            start = np.append(start, order[cursor])
            cursor += 1
            center, cov = _moments(X[start])
        log_det = _log_det(cov)
        if log_det is None:
            continue

        subset = None
        for _ in range(MAX_C_STEPS):
            candidate = _c_step(X, center, cov, h)
            if subset is not None and np.array_equal(candidate, subset):
                break
            center_new, cov_new = _moments(X[candidate])
            log_det_new = _log_det(cov_new)
            if log_det_new is None:
                subset = candidate
                log_det = None
                break
            if subset is not None and log_det_new >= log_det:
                break
            subset, center, cov, log_det = candidate, center_new, cov_new, log_det_new
        if subset is None or log_det is None:
            continue
        if best is None or log_det < best[0]:
            best = (log_det, subset)
    return best


def mcd(
    X,
    alpha: float = 0.75,
    seed: int = 42,
    rng: Optional[np.random.Generator] = None,
    method: str = "auto",
    n_trials: int = N_TRIALS,
) -> McdEstimate:
    """
    Minimum covariance determinant estimate of location and scatter.

    Searches the h = ceil(alpha * rows) subset whose (population) covariance has
    the smallest determinant: exhaustively for at most 12 rows, otherwise by
    FAST-MCD random (m+1)-point starts refined with C-steps. No reweighting step.

    Args:
        X: rows x m sample
        alpha: subset fraction in (0.5, 1]
        seed: seed used when ``rng`` is not supplied
        rng: random generator for the FAST-MCD starts
        method: "auto", "exhaustive" or "fast"
        n_trials: number of random starts for the FAST-MCD search
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    rows, m = X.shape
    if not 0.5 < alpha <= 1.0:
        raise ConfigError(f"MCD alpha must lie in (0.5, 1], got {alpha}", alpha=alpha)
    h = subset_size(rows, alpha)
    if rows < m + 1 or h <= m:
        raise InsufficientLocalDataError(
            f"MCD needs h > m: {rows} rows give h={h} for {m} variables",
            rows=rows,
            h=h,
            m=m,
        )

    if h == rows:
        center, cov = _moments(X)
        if _log_det(cov) is None:
            raise DegenerateSubsetError("Covariance of all rows is singular")
        return McdEstimate(center=center, cov=cov, subset_indices=list(range(rows)), determinant=float(linalg.det(cov)))

    use_exhaustive = method == "exhaustive" or (method == "auto" and rows <= EXHAUSTIVE_MAX_ROWS)
    if use_exhaustive:
        logger.debug(f"Exhaustive MCD over {int(comb(rows, h, exact=True))} subsets of size {h}")
        best = _exhaustive(X, h)
    else:
        best = _fast(X, h, rng if rng is not None else np.random.default_rng(seed), n_trials)
    if best is None:
        raise DegenerateSubsetError(rows=rows, h=h)

    subset = np.sort(best[1])
    center, cov = _moments(X[subset])
    return McdEstimate(
        center=center,
        cov=cov,
        subset_indices=[int(i) for i in subset],
        determinant=float(np.exp(best[0])),
    )
