"""GW regression: basic and robust fits, bandwidth selection, stepwise model
selection and prediction with prediction variance."""
import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from exceptions import (
    AiccUndefinedError,
    GwNumericalError,
    InvalidSelectionError,
    SingularLocalFitError,
    TooFewAfterFilterError,
)
from models.kernel import BandwidthResult, KernelSpec, WeightVector
from models.results import GwrFit, GwrPrediction, OlsFit, PredictionMetrics, StepwiseModel, StepwiseReport
from models.spatial import SpatialDataset, VariableSelection
from services.distance_service import DistanceRows
from services.spatial_service import regression_inputs
from services.weighting_service import default_bounds, optimize_bandwidth, validate_kernel_spec, weights_for
from utils.parallel import map_locations

logger = logging.getLogger(__name__)

RCOND_LIMIT = 1e-12
OUTLIER_CUTOFF = 3.0
ROBUST_TOLERANCE = 1e-5
MAX_ROBUST_ITERATIONS = 20
CRITERIA = ("aicc", "cv")


class LocalFit(NamedTuple):
    beta: np.ndarray
    hat_row: np.ndarray
    projector: np.ndarray


@dataclass
class _Problem:
    X: np.ndarray
    y: np.ndarray
    names: List[str]
    rows: DistanceRows

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _searchable(spec: KernelSpec) -> KernelSpec:
    """Placeholder bandwidth so a spec awaiting selection passes validation"""
    return spec.with_bandwidth(1.0) if spec.bandwidth is None else spec


def reciprocal_condition(A: np.ndarray) -> float:
    singular_values = linalg.svd(A, compute_uv=False)
    if singular_values.size == 0 or not singular_values[0] > 0:
        return 0.0
    return float(singular_values[-1] / singular_values[0])


def local_projector(X: np.ndarray, w: np.ndarray, location: Optional[int] = None) -> np.ndarray:
    """C = (X^T W X)^-1 X^T W, refusing systems with reciprocal condition below 1e-12"""
    XtW = X.T * w
    A = XtW @ X
    rcond = reciprocal_condition(A)
    if rcond < RCOND_LIMIT:
        condition_number = 1.0 / rcond if rcond > 0 else math.inf
        where = f"location {location + 1}" if location is not None else "target"
        raise SingularLocalFitError(
            f"Local regression at {where} is singular (condition number {condition_number:.3g})",
            location=None if location is None else location + 1,
            condition_number=condition_number,
        )
    return linalg.solve(A, XtW, assume_a="sym")


def gwr_fit_at(X, y, weights: Union[WeightVector, np.ndarray], x_target=None) -> LocalFit:
    """
    Weighted least squares at one target.

    Args:
        X: n x (m+1) design with leading ones
        y: responses
        weights: weight vector of the target
        x_target: design row of the target (defaults to X[target_index])

    Returns:
        LocalFit(beta, hat_row, projector) with hat_row . y equal to the fitted value
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    location = weights.target_index if isinstance(weights, WeightVector) else None
    w = weights.w if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    C = local_projector(X, w, location)
    if x_target is None:
        if location is None:
            raise InvalidSelectionError("Target design row is required when the target is not a data point")
        x_target = X[location]
    return LocalFit(beta=C @ y, hat_row=np.asarray(x_target, dtype=float) @ C, projector=C)


def aicc(rss: float, n: int, trace_s: float) -> float:
    """2n ln(sigma) + n ln(2 pi) + n (n + tr S) / (n - 2 - tr S) with sigma = sqrt(RSS / n)"""
    denominator = n - 2.0 - trace_s
    if denominator <= 0:
        raise AiccUndefinedError(trace_s=trace_s, n=n)
    with np.errstate(divide="ignore"):
        log_sigma = 0.5 * np.log(rss / n)
    return float(2.0 * n * log_sigma + n * math.log(2.0 * math.pi) + n * (n + trace_s) / denominator)


def robust_weight(u) -> np.ndarray:
    """1 for |u| <= 2, (1 - (|u| - 2)^2)^2 for 2 < |u| < 3, else 0 (u in units of sigma)"""
    u = np.abs(np.asarray(u, dtype=float))
    return np.where(u <= 2.0, 1.0, np.where(u < 3.0, (1.0 - (u - 2.0) ** 2) ** 2, 0.0))


def studentized_residuals(fit: GwrFit) -> np.ndarray:
    """
    Externally studentised residuals e_i / (sigma_(-i) sqrt(q_ii)) where q_ii is
    the diagonal of (I - S)(I - S)^T and sigma_(-i) comes from the leave-one-out
    identity sigma2_(-i) = (RSS - e_i^2 / q_ii) / (n - ENP - 1).
    """
    e = fit.residuals
    q = 1.0 - 2.0 * fit.hat_diag + fit.hat_row_norms
    with np.errstate(divide="ignore", invalid="ignore"):
        loo_variance = (fit.rss - np.where(q > 0, e ** 2 / q, 0.0)) / (fit.n_used - fit.enp - 1.0)
        r = e / np.sqrt(loo_variance * q)
    return np.where((q > 0) & (loo_variance > 0), r, 0.0)


def prediction_metrics(observed, prediction, variance) -> PredictionMetrics:
    """RMSPE, mean absolute prediction error and z-score mean / SD over finite predictions"""
    y = np.asarray(observed, dtype=float)
    yhat = np.asarray(prediction, dtype=float)
    var = np.asarray(variance, dtype=float)
    usable = np.isfinite(y) & np.isfinite(yhat) & np.isfinite(var) & (var > 0)
    error = y[usable] - yhat[usable]
    z = error / np.sqrt(var[usable])
    count = int(usable.sum())
    return PredictionMetrics(
        rmspe=float(np.sqrt(np.mean(error ** 2))) if count else math.nan,
        mape=float(np.mean(np.abs(error))) if count else math.nan,
        mean_zs=float(np.mean(z)) if count else math.nan,
        sd_zs=float(np.std(z, ddof=1)) if count > 1 else math.nan,
        count=count,
    )


def ols_fit(ds: SpatialDataset, selection: VariableSelection) -> OlsFit:
    """Global least-squares regression with standard errors and R-squared"""
    X, y, names = regression_inputs(ds, selection)
    n, p = X.shape
    XtX = X.T @ X
    if reciprocal_condition(XtX) < RCOND_LIMIT:
        raise SingularLocalFitError("Global design matrix is rank deficient")
    inverse = linalg.inv(XtX, check_finite=False)
    beta = inverse @ (X.T @ y)
    residuals = y - X @ beta
    rss = float(residuals @ residuals)
    tss = float(np.sum((y - y.mean()) ** 2))
    sigma2 = rss / (n - p) if n > p else math.nan
    std_errors = np.sqrt(sigma2 * np.diag(inverse))
    r2 = 1.0 - rss / tss if tss > 0 else math.nan
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - p) if n > p else math.nan
    return OlsFit(
        coefficient_names=names,
        coefficients=beta,
        std_errors=std_errors,
        t_values=beta / std_errors,
        sigma2=sigma2,
        rss=rss,
        r2=r2,
        adj_r2=adj_r2,
        n=n,
    )


def diagnostics_report(fit: GwrFit) -> str:
    """Plain-text summary of local coefficients and global diagnostics"""
    summary = fit.coefficient_summary().to_string(float_format=lambda v: f"{v:.6g}")
    lines = [
        "GW regression diagnostics",
        f"Kernel: {fit.spec.describe()}",
        "",
        "Summary of local coefficient estimates:",
        summary,
        "",
        f"Number of data points: {fit.n_used}",
        f"Effective number of parameters (2trace(S) - trace(S'S)): {fit.enp:.6g}",
        f"Effective degrees of freedom (n - 2trace(S) + trace(S'S)): {fit.n_used - fit.enp:.6g}",
        f"trace(S): {fit.trace_s:.6g}",
        f"trace(S'S): {fit.trace_sts:.6g}",
        f"Sigma2 (RSS / (n - ENP)): {fit.sigma2:.6g}",
        f"AICc: {fit.aicc:.6g}",
        f"Residual sum of squares: {fit.rss:.6g}",
        f"R-square: {fit.r2:.6g}",
        f"Adjusted R-square: {fit.adj_r2:.6g}",
    ]
    if fit.cv_score is not None:
        lines.append(f"CV score: {fit.cv_score:.6g}")
    if fit.iterations is not None:
        lines.append(f"Robust iterations: {fit.iterations} (converged: {fit.converged})")
    if fit.studentized_residuals is not None:
        dropped = int(np.sum(np.abs(fit.studentized_residuals) > OUTLIER_CUTOFF))
        lines.append(f"Observations filtered as outliers: {dropped}")
    for warning in fit.warnings:
        lines.append(f"Warning: {warning}")
    return "\n".join(lines) + "\n"


class GwrService:
    """GW regression fits at data locations and prediction at new locations"""

    def __init__(self, threads: int = 1, max_robust_iter: int = MAX_ROBUST_ITERATIONS):
        self.threads = threads
        self.max_robust_iter = max_robust_iter

    def _problem(self, ds: SpatialDataset, selection: VariableSelection, spec: KernelSpec, stream: bool = False) -> _Problem:
        X, y, names = regression_inputs(ds, selection)
        validate_kernel_spec(spec, ds.n)
        if ds.n <= X.shape[1] + 1:
            raise InvalidSelectionError(
                f"GW regression with {X.shape[1] - 1} predictors needs more than {X.shape[1] + 1} observations",
                n=ds.n,
            )
        return _Problem(X=X, y=y, names=names, rows=DistanceRows(ds.coords, spec=spec.distance, stream=stream))

    def _fit(
        self,
        problem: _Problem,
        spec: KernelSpec,
        obs_weights: Optional[np.ndarray] = None,
        require_aicc: bool = True,
    ) -> GwrFit:
        """Fit at every data location; diagnostics use observations with positive obs_weights"""
        X, y = problem.X, problem.y

        def at_location(i: int):
            w = weights_for(problem.rows.row(i), spec, target_index=i).w
            if obs_weights is not None:
                w = w * obs_weights
            C = local_projector(X, w, i)
            hat_row = X[i] @ C
            return C @ y, float(hat_row @ y), float(hat_row[i]), float(hat_row @ hat_row), np.einsum("ij,ij->i", C, C)

        results = map_locations(at_location, problem.n, self.threads)
        coefficients = np.array([r[0] for r in results])
        fitted = np.array([r[1] for r in results])
        hat_diag = np.array([r[2] for r in results])
        hat_row_norms = np.array([r[3] for r in results])
        spread = np.array([r[4] for r in results])
        residuals = y - fitted

        used = np.ones(problem.n, dtype=bool) if obs_weights is None else np.asarray(obs_weights) > 0
        n = int(used.sum())
        rss = float(np.sum(residuals[used] ** 2))
        tss = float(np.sum((y[used] - y[used].mean()) ** 2))
        trace_s = float(hat_diag[used].sum())
        trace_sts = float(hat_row_norms[used].sum())
        enp = 2.0 * trace_s - trace_sts
        sigma2 = rss / (n - enp) if n > enp else math.nan
        try:
            aicc_value = aicc(rss, n, trace_s)
        except AiccUndefinedError:
            if require_aicc:
                raise
            aicc_value = math.nan
        r2 = 1.0 - rss / tss if tss > 0 else math.nan
        adj_r2 = 1.0 - (1.0 - r2) * (n - 1.0) / (n - enp - 1.0) if n - enp - 1.0 > 0 else math.nan
        return GwrFit(
            coefficient_names=problem.names,
            coefficients=coefficients,
            std_errors=np.sqrt(sigma2 * spread),
            y=y,
            fitted=fitted,
            residuals=residuals,
            hat_diag=hat_diag,
            hat_row_norms=hat_row_norms,
            trace_s=trace_s,
            trace_sts=trace_sts,
            enp=enp,
            rss=rss,
            tss=tss,
            sigma2=sigma2,
            aicc=aicc_value,
            r2=r2,
            adj_r2=adj_r2,
            n_used=n,
            spec=spec,
        )

    def gwr_basic(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        stream: bool = False,
    ) -> GwrFit:
        """
        GW regression at every data location.

        Raises:
            SingularLocalFitError: a local system is singular
            AiccUndefinedError: n - 2 - tr(S) <= 0
        """
        fit = self._fit(self._problem(ds, selection, spec, stream), spec)
        logger.info(f"GW regression fitted at {ds.n} locations ({spec.describe()}), AICc {fit.aicc:.6g}")
        return fit

    def _cv_score(self, problem: _Problem, spec: KernelSpec) -> float:
        X, y = problem.X, problem.y

        def at_location(i: int) -> float:
            w = np.array(weights_for(problem.rows.row(i), spec, target_index=i).w)
            w[i] = 0.0
            try:
                C = local_projector(X, w, i)
            except SingularLocalFitError:
                return math.inf
            return float((y[i] - X[i] @ (C @ y)) ** 2)

        return float(sum(map_locations(at_location, problem.n, self.threads)))

    def gwr_cv_score(self, ds: SpatialDataset, selection: VariableSelection, spec: KernelSpec) -> float:
        """Leave-one-out CV score; +inf when any leave-one-out fit is singular"""
        return self._cv_score(self._problem(ds, selection, spec), spec)

    def _bandwidth(
        self,
        problem: _Problem,
        spec: KernelSpec,
        criterion: str,
        bounds: Optional[Tuple[float, float]],
        exhaustive: bool,
    ) -> BandwidthResult:
        if criterion not in CRITERIA:
            raise InvalidSelectionError(f"Unknown bandwidth criterion '{criterion}'", criterion=criterion)
        if bounds is None:
            distance_range = None if spec.adaptive else problem.rows.positive_range()
            bounds = default_bounds(spec.adaptive, problem.n, problem.p + 1, distance_range)

        def objective(bandwidth) -> float:
            candidate = spec.with_bandwidth(bandwidth)
            if criterion == "cv":
                return self._cv_score(problem, candidate)
            return self._fit(problem, candidate).aicc

        return optimize_bandwidth(objective, spec.adaptive, bounds, exhaustive=exhaustive)

    def gwr_bandwidth(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        criterion: str = "aicc",
        bounds: Optional[Tuple[float, float]] = None,
        exhaustive: bool = False,
    ) -> BandwidthResult:
        """Bandwidth minimizing AICc or the leave-one-out CV score (any bandwidth already on `spec` is ignored)"""
        template = _searchable(spec)
        result = self._bandwidth(self._problem(ds, selection, template), spec, criterion, bounds, exhaustive)
        logger.info(f"GW regression bandwidth ({criterion}): {result.bandwidth}")
        return result

    def gwr_robust_filtered(self, ds: SpatialDataset, selection: VariableSelection, spec: KernelSpec) -> GwrFit:
        """Fit, drop observations with |studentised residual| > 3, refit at every location"""
        problem = self._problem(ds, selection, spec)
        initial = self._fit(problem, spec)
        r = studentized_residuals(initial)
        keep = np.abs(r) <= OUTLIER_CUTOFF
        dropped = int((~keep).sum())
        if dropped == 0:
            logger.info("No observations with |studentised residual| > 3; basic fit retained")
            return initial.model_copy(update={"studentized_residuals": r})
        if keep.sum() < problem.p + 1:
            raise TooFewAfterFilterError(retained=int(keep.sum()), required=problem.p + 1)
        logger.info(f"Filtered {dropped} outlying observation(s); refitting")
        refit = self._fit(problem, spec, obs_weights=keep.astype(float))
        return refit.model_copy(update={"studentized_residuals": r})

    def gwr_robust_iterative(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        tol: float = ROBUST_TOLERANCE,
    ) -> GwrFit:
        """
        Iteratively down-weight large residuals: refit with geographic x robust
        weights until the robust weights move less than ``tol`` or the iteration
        limit is reached (non-convergence is a warning, not an error).
        """
        problem = self._problem(ds, selection, spec)
        robust = np.ones(problem.n)
        fit = self._fit(problem, spec)
        converged = False
        iterations = 0
        while iterations < self.max_robust_iter:
            iterations += 1
            sigma = math.sqrt(fit.sigma2) if fit.sigma2 > 0 else 0.0
            scaled = fit.residuals / sigma if sigma > 0 else np.zeros(problem.n)
            updated = robust_weight(scaled)
            change = float(np.max(np.abs(updated - robust)))
            robust = updated
            if change < tol:
                converged = True
                break
            fit = self._fit(problem, spec, obs_weights=robust, require_aicc=False)
        warnings = list(fit.warnings)
        if not converged:
            message = f"Robust weights did not converge after {iterations} iterations"
            logger.warning(message)
            warnings.append(message)
        logger.info(f"Robust GW regression finished after {iterations} iteration(s)")
        return fit.model_copy(
            update={"robust_weights": robust, "iterations": iterations, "converged": converged, "warnings": warnings}
        )

    def stepwise_select(
        self,
        ds: SpatialDataset,
        dependent: str,
        candidates: List[str],
        spec: KernelSpec,
        reoptimize: bool = False,
        criterion: str = "aicc",
    ) -> StepwiseReport:
        """
        Forward selection by AICc: each round fits every remaining candidate
        added to the selected set and includes the one with the lowest AICc.
        With ``reoptimize`` every candidate model gets its own optimal bandwidth.
        """
        if not candidates:
            raise InvalidSelectionError("Stepwise selection needs at least one candidate")
        selected: List[str] = []
        remaining = list(candidates)
        models: List[StepwiseModel] = []
        warnings: List[str] = []
        round_number = 0
        while remaining:
            round_number += 1
            best_index, best_aicc = None, math.inf
            for index, candidate in enumerate(remaining):
                variables = selected + [candidate]
                selection = VariableSelection(dependent=dependent, independents=variables)
                model_spec = spec
                try:
                    problem = self._problem(ds, selection, _searchable(spec) if reoptimize else spec)
                    if reoptimize:
                        model_spec = spec.with_bandwidth(self._bandwidth(problem, spec, criterion, None, False).value)
                    score = self._fit(problem, model_spec).aicc
                except GwNumericalError as exc:
                    message = f"Model {'+'.join(variables)} failed: {exc.message}"
                    logger.warning(message)
                    warnings.append(message)
                    score = math.inf
                models.append(
                    StepwiseModel(
                        number=len(models) + 1,
                        variables=variables,
                        aicc=score,
                        round=round_number,
                        bandwidth=model_spec.bandwidth,
                    )
                )
                if score < best_aicc:
                    best_index, best_aicc = index, score
            if best_index is None:
                message = f"No model in round {round_number} has a finite AICc; selection stopped"
                logger.warning(message)
                warnings.append(message)
                break
            selected.append(remaining.pop(best_index))
            logger.info(f"Round {round_number}: included {selected[-1]} (AICc {best_aicc:.6g})")
        return StepwiseReport(models=models, inclusion_order=selected, reoptimized=reoptimize, warnings=warnings)

    def gwr_predict(
        self,
        ds: SpatialDataset,
        selection: VariableSelection,
        spec: KernelSpec,
        target_coords,
        target_values,
    ) -> GwrPrediction:
        """
        Predictions x(s)^T beta(s) and variances sigma2 (1 + S(s)) at target locations,
        with S(s) = x(s)^T C C^T x(s) and sigma2 = RSS / (n - ENP) of the calibration fit.
        A singular fit at a target yields NaN for that target and a warning.
        """
        problem = self._problem(ds, selection, spec)
        calibration = self._fit(problem, spec, require_aicc=False)
        targets = np.asarray(target_coords, dtype=float).reshape(-1, 2)
        values = np.asarray(target_values, dtype=float).reshape(targets.shape[0], -1)
        if values.shape[1] != problem.p - 1:
            raise InvalidSelectionError(
                f"Targets carry {values.shape[1]} predictor values, expected {problem.p - 1}",
            )
        if not np.all(np.isfinite(values)):
            raise InvalidSelectionError("Target predictor values must be finite")
        design = np.column_stack([np.ones(targets.shape[0]), values])
        rows = DistanceRows(ds.coords, targets, spec.distance)

        def at_target(t: int):
            w = weights_for(rows.row(t), spec).w
            try:
                C = local_projector(problem.X, w)
            except SingularLocalFitError as exc:
                return None, f"Target {t + 1}: {exc.message}"
            projected = design[t] @ C
            return (C @ problem.y, float(projected @ problem.y), float(projected @ projected)), None

        results = map_locations(at_target, targets.shape[0], self.threads)
        coefficients = np.full((targets.shape[0], problem.p), math.nan)
        predictions = np.full(targets.shape[0], math.nan)
        variances = np.full(targets.shape[0], math.nan)
        warnings = []
        for t, (solution, failure) in enumerate(results):
            if solution is None:
                logger.warning(failure)
                warnings.append(failure)
                continue
            coefficients[t], predictions[t] = solution[0], solution[1]
            variances[t] = calibration.sigma2 * (1.0 + solution[2])
        logger.info(f"Predicted at {targets.shape[0]} target location(s)")
        return GwrPrediction(
            coefficient_names=problem.names,
            coefficients=coefficients,
            predictions=predictions,
            prediction_variance=variances,
            sigma2=calibration.sigma2,
            warnings=warnings,
        )


__all__ = [
    "GwrService",
    "LocalFit",
    "aicc",
    "diagnostics_report",
    "gwr_fit_at",
    "local_projector",
    "ols_fit",
    "prediction_metrics",
    "robust_weight",
    "studentized_residuals",
]
