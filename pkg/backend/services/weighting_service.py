"""Kernel weights and bandwidth selection"""
import logging
import math
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from exceptions import (
    AdaptiveCountExceedsNError,
    AllScoresNonFiniteError,
    GwNumericalError,
    InvalidKernelSpecError,
)
from models.kernel import BandwidthResult, KernelFamily, KernelSpec, WeightVector

logger = logging.getLogger(__name__)

# Inflation of the N-th neighbour distance so the strict d < b rule keeps that neighbour
ADAPTIVE_INFLATION = 1e-12
GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0
FIXED_TOLERANCE = 1e-3
EXHAUSTIVE_FIXED_POINTS = 200
_MAX_GOLDEN_STEPS = 500

Objective = Callable[[Union[int, float]], float]


def kernel_weight(d, b: float, family: Union[KernelFamily, str]):
    """
    Kernel weight for distance(s) ``d`` at bandwidth ``b``.

    Boxcar, bisquare and tricube are zero for d >= b. Accepts scalars or arrays
    and returns the same shape.
    """
    family = KernelFamily(family)
    d = np.abs(np.asarray(d, dtype=float))
    if family is KernelFamily.GLOBAL:
        weights = np.ones_like(d)
    else:
        ratio = d / b
        inside = d < b
        if family is KernelFamily.GAUSSIAN:
            weights = np.exp(-0.5 * ratio ** 2)
        elif family is KernelFamily.EXPONENTIAL:
            weights = np.exp(-ratio)
        elif family is KernelFamily.BOXCAR:
            weights = np.where(inside, 1.0, 0.0)
        elif family is KernelFamily.BISQUARE:
            weights = np.where(inside, (1.0 - ratio ** 2) ** 2, 0.0)
        else:
            weights = np.where(inside, (1.0 - ratio ** 3) ** 3, 0.0)
    if weights.ndim == 0:
        return float(weights)
    return weights


def validate_kernel_spec(spec: KernelSpec, n: Optional[int] = None) -> None:
    """Raise InvalidKernelSpecError / AdaptiveCountExceedsNError for unusable specs."""
    if spec.family is KernelFamily.GLOBAL:
        return
    b = spec.bandwidth
    if b is None or not np.isfinite(b) or b <= 0:
        raise InvalidKernelSpecError(f"Bandwidth must be positive, got {b}", bandwidth=b)
    if spec.adaptive:
        if b != int(b):
            raise InvalidKernelSpecError(f"Adaptive bandwidth must be an integer count, got {b}", bandwidth=b)
        if n is not None and int(b) > n:
            raise AdaptiveCountExceedsNError(
                f"Adaptive bandwidth {int(b)} exceeds the {n} data points",
                bandwidth=int(b),
                n=n,
            )


def effective_bandwidth(distances: np.ndarray, spec: KernelSpec) -> float:
    """Kernel scale for one target: the fixed bandwidth, or the inflated N-th neighbour distance"""
    if not spec.adaptive:
        return float(spec.bandwidth)
    count = int(spec.bandwidth)
    if count > distances.size:
        raise AdaptiveCountExceedsNError(
            f"Adaptive bandwidth {count} exceeds the {distances.size} data points",
            bandwidth=count,
            n=int(distances.size),
        )
    nth = np.sort(distances, kind="stable")[count - 1]
    return float(nth) * (1.0 + ADAPTIVE_INFLATION)


def weights_for(
    distances,
    spec: KernelSpec,
    target_index: Optional[int] = None,
) -> WeightVector:
    """
    Weight vector for one target given its distances to all n data points.

    Args:
        distances: length-n distances from the target
        spec: kernel specification
        target_index: index of the target when it is itself a data point

    Returns:
        WeightVector with the effective bandwidth that was applied
    """
    row = np.asarray(distances, dtype=float)
    validate_kernel_spec(spec, row.size)
    if spec.family is KernelFamily.GLOBAL:
        return WeightVector(w=np.ones(row.size), target_index=target_index)
    b = effective_bandwidth(row, spec)
    if b <= 0:
        w = np.where(row == 0, 1.0, 0.0)
    else:
        w = kernel_weight(row, b, spec.family)
    return WeightVector(w=w, target_index=target_index, effective_bandwidth=b)


def default_bounds(
    adaptive: bool,
    n: int,
    min_local: int,
    distance_range: Optional[Tuple[float, float]] = None,
) -> Tuple[float, float]:
    """
    Default bandwidth search interval.

    Adaptive: [max(10, min_local), n], with the lower end pulled below n for tiny
    datasets. Fixed: [smallest positive distance, largest distance].
    """
    if adaptive:
        lo = min(max(10, min_local), n - 1)
        return float(max(lo, 1)), float(n)
    if distance_range is None:
        raise InvalidKernelSpecError("Fixed bandwidth search needs the distance range")
    lo, hi = distance_range
    if not np.isfinite(lo) or not hi > lo:
        raise InvalidKernelSpecError("Data locations do not span a usable distance range", low=lo, high=hi)
    return float(lo), float(hi)


def optimize_bandwidth(
    objective: Objective,
    adaptive: bool,
    bounds: Tuple[float, float],
    exhaustive: bool = False,
    tol: float = FIXED_TOLERANCE,
) -> BandwidthResult:
    """
    Minimize ``objective`` over a bandwidth interval.

    Adaptive bandwidths are searched by golden section over integers (rounded,
    memoized) and every integer left in the final bracket is evaluated; fixed
    bandwidths by golden section over reals to relative tolerance ``tol``.
    ``exhaustive`` evaluates every integer (adaptive) or a dense grid (fixed).
    Objectives that fail numerically or return non-finite scores count as +inf.

    Raises:
        AllScoresNonFiniteError: when no evaluated bandwidth has a finite score
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise InvalidKernelSpecError(f"Bandwidth bounds must satisfy lo < hi, got ({lo}, {hi})", low=lo, high=hi)

    cache: Dict[float, float] = {}
    trace = []

    def evaluate(b: float) -> float:
        key = int(round(b)) if adaptive else float(b)
        if key in cache:
            return cache[key]
        try:
            score = float(objective(key))
        except GwNumericalError as exc:
            logger.debug(f"Bandwidth {key}: {exc.message}")
            score = math.inf
        if not math.isfinite(score):
            score = math.inf
        cache[key] = score
        trace.append((float(key), score))
        logger.debug(f"Bandwidth {key}: score {score}")
        return score

    if adaptive:
        a, c = math.ceil(lo), math.floor(hi)
        if exhaustive:
            for b in range(a, c + 1):
                evaluate(b)
        else:
            evaluate(a)
            evaluate(c)
            while c - a > 3:
                x1 = int(round(c - GOLDEN_RATIO * (c - a)))
                x2 = int(round(a + GOLDEN_RATIO * (c - a)))
                if x1 >= x2:
                    break
                if evaluate(x1) <= evaluate(x2):
                    c = x2
                else:
                    a = x1
            for b in range(a, c + 1):
                evaluate(b)
    elif exhaustive:
        for b in np.linspace(lo, hi, EXHAUSTIVE_FIXED_POINTS):
            evaluate(float(b))
    else:
        evaluate(lo)
        evaluate(hi)
        a, c = lo, hi
        x1 = c - GOLDEN_RATIO * (c - a)
        x2 = a + GOLDEN_RATIO * (c - a)
        f1, f2 = evaluate(x1), evaluate(x2)
        steps = 0
        while (c - a) > tol * (abs(a) + abs(c)) / 2.0 and steps < _MAX_GOLDEN_STEPS:
            if f1 <= f2:
                c, x2, f2 = x2, x1, f1
                x1 = c - GOLDEN_RATIO * (c - a)
                f1 = evaluate(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + GOLDEN_RATIO * (c - a)
                f2 = evaluate(x2)
            steps += 1

    best_bandwidth, best_score = min(cache.items(), key=lambda item: (item[1], item[0]))
    if not math.isfinite(best_score):
        raise AllScoresNonFiniteError(
            f"All {len(trace)} evaluated bandwidths produced non-finite scores",
            evaluations=len(trace),
        )
    logger.info(f"Optimal bandwidth {best_bandwidth} (score {best_score:.6g}, {len(trace)} evaluations)")
    return BandwidthResult(value=float(best_bandwidth), score=best_score, trace=trace, adaptive=adaptive)
