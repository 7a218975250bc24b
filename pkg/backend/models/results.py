"""Result models for the GW statistics, PCA, regression and collinearity services.

Every per-location result exposes ``table()``, a pandas DataFrame with one row per
location in the column order written by the CLI and returned by the API.
"""
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from models.kernel import KernelSpec
from utils.summary import five_number_summary


class _ResultModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    warnings: List[str] = Field(default_factory=list, description="Non-fatal conditions met while fitting")


# GW summary statistics

class GwssResult(_ResultModel):
    """Local summary statistics at every data location"""
    variable_names: List[str]
    local_mean: Dict[str, np.ndarray]
    local_sd: Dict[str, np.ndarray]
    local_variance: Dict[str, np.ndarray]
    local_skew: Dict[str, np.ndarray]
    local_cv: Dict[str, np.ndarray]
    local_covariance: Dict[str, np.ndarray] = Field(default_factory=dict, description="Keyed '<a>.<b>'")
    local_pearson: Dict[str, np.ndarray] = Field(default_factory=dict, description="Keyed '<a>.<b>'")
    local_spearman: Dict[str, np.ndarray] = Field(default_factory=dict, description="Keyed '<a>.<b>'")
    local_median: Optional[Dict[str, np.ndarray]] = None
    local_iqr: Optional[Dict[str, np.ndarray]] = None
    local_qi: Optional[Dict[str, np.ndarray]] = None
    spec: KernelSpec

    @property
    def has_quantiles(self) -> bool:
        return self.local_median is not None

    def table(self) -> pd.DataFrame:
        columns: Dict[str, np.ndarray] = {}
        for suffix, block in (
            ("LM", self.local_mean),
            ("LSD", self.local_sd),
            ("LVar", self.local_variance),
            ("LSKe", self.local_skew),
            ("LCV", self.local_cv),
        ):
            for name in self.variable_names:
                columns[f"{name}_{suffix}"] = block[name]
        for prefix, block in (
            ("Cov", self.local_covariance),
            ("Corr", self.local_pearson),
            ("Spearman_rho", self.local_spearman),
        ):
            for pair, values in block.items():
                columns[f"{prefix}_{pair}"] = values
        if self.has_quantiles:
            for suffix, block in (("Median", self.local_median), ("IQR", self.local_iqr), ("QI", self.local_qi)):
                for name in self.variable_names:
                    columns[f"{name}_{suffix}"] = block[name]
        return pd.DataFrame(columns)


# GW PCA

class McdEstimate(BaseModel):
    """Minimum covariance determinant estimate"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    center: np.ndarray
    cov: np.ndarray
    subset_indices: List[int]
    determinant: float


class GlobalPcaResult(BaseModel):
    """Whole-map PCA on the (population) covariance matrix"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: np.ndarray
    loadings: np.ndarray
    variable_names: List[str]
    robust: bool = False

    @property
    def shares(self) -> np.ndarray:
        """Percentage of total variance per component"""
        return 100.0 * self.eigenvalues / self.eigenvalues.sum()


class GwpcaResult(_ResultModel):
    """Local eigenvalues, loadings and scores (scores only at data locations)"""
    eigenvalues: np.ndarray = Field(..., description="r x m, each row descending")
    loadings: np.ndarray = Field(..., description="r x m x m, columns are components")
    scores: Optional[np.ndarray] = Field(None, description="n x m centered rows times local loadings")
    variable_names: List[str]
    k: int
    robust: bool = False
    spec: KernelSpec

    @property
    def m(self) -> int:
        return len(self.variable_names)

    def ptv(self, k: Optional[int] = None) -> np.ndarray:
        """Percentage of total local variance carried by the first k components"""
        k = self.k if k is None else k
        cumulative = np.cumsum(self.eigenvalues, axis=1)
        return 100.0 * cumulative[:, k - 1] / cumulative[:, -1]

    def winning_index(self, component: int) -> np.ndarray:
        """0-based variable index with the largest absolute loading on a 1-based component"""
        return np.argmax(np.abs(self.loadings[:, :, component - 1]), axis=1)

    def table(self) -> pd.DataFrame:
        columns: Dict[str, object] = {}
        for j in range(self.m):
            columns[f"Comp.{j + 1}_EV"] = self.eigenvalues[:, j]
        for j in range(1, self.k + 1):
            columns[f"PTV_{j}"] = self.ptv(j)
        for j in range(1, self.k + 1):
            columns[f"win_var_PC{j}"] = [self.variable_names[i] for i in self.winning_index(j)]
        return pd.DataFrame(columns)

    def loadings_table(self) -> pd.DataFrame:
        """One row per (location, component) with the loading of every variable"""
        r, m = self.eigenvalues.shape
        frame = pd.DataFrame(
            self.loadings.transpose(0, 2, 1).reshape(r * m, m),
            columns=self.variable_names,
        )
        frame.insert(0, "component", np.tile(np.arange(1, m + 1), r))
        frame.insert(0, "location", np.repeat(np.arange(1, r + 1), m))
        return frame


# GW regression

class OlsFit(BaseModel):
    """Global least-squares fit"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    coefficient_names: List[str]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    sigma2: float
    rss: float
    r2: float
    adj_r2: float
    n: int

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"Estimate": self.coefficients, "Std. Error": self.std_errors, "t value": self.t_values},
            index=self.coefficient_names,
        )


class GwrFit(_ResultModel):
    """Per-location GW regression fit and global diagnostics"""
    coefficient_names: List[str] = Field(..., description="'Intercept' followed by the predictors")
    coefficients: np.ndarray = Field(..., description="n x (m+1), intercept first")
    std_errors: np.ndarray
    y: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    hat_diag: np.ndarray
    hat_row_norms: np.ndarray = Field(..., description="Squared norm of every hat-matrix row")
    trace_s: float
    trace_sts: float
    enp: float
    rss: float
    tss: float
    sigma2: float
    aicc: float
    r2: float
    adj_r2: float
    n_used: int = Field(..., description="Observations entering the diagnostics")
    cv_score: Optional[float] = None
    studentized_residuals: Optional[np.ndarray] = None
    robust_weights: Optional[np.ndarray] = None
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    spec: KernelSpec

    @property
    def t_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coefficients / self.std_errors

    def table(self) -> pd.DataFrame:
        columns: Dict[str, np.ndarray] = {}
        for j, name in enumerate(self.coefficient_names):
            columns[name] = self.coefficients[:, j]
        columns["y"] = self.y
        columns["yhat"] = self.fitted
        columns["residual"] = self.residuals
        t_values = self.t_values
        for j, name in enumerate(self.coefficient_names):
            columns[f"{name}_SE"] = self.std_errors[:, j]
        for j, name in enumerate(self.coefficient_names):
            columns[f"{name}_TV"] = t_values[:, j]
        if self.studentized_residuals is not None:
            columns["Stud_residual"] = self.studentized_residuals
        if self.robust_weights is not None:
            columns["E_weight"] = self.robust_weights
        return pd.DataFrame(columns)

    def coefficient_summary(self) -> pd.DataFrame:
        """Five-number summary of every local coefficient"""
        rows = {name: five_number_summary(self.coefficients[:, j]) for j, name in enumerate(self.coefficient_names)}
        return pd.DataFrame.from_dict(rows, orient="index")


class StepwiseModel(BaseModel):
    number: int
    variables: List[str]
    aicc: float
    round: int
    bandwidth: Optional[float] = None


class StepwiseReport(_ResultModel):
    """Every model fitted by forward selection, in evaluation order"""
    models: List[StepwiseModel]
    inclusion_order: List[str]
    reoptimized: bool = False

    @property
    def sorted_models(self) -> List[StepwiseModel]:
        """Models grouped by round, each round ordered by decreasing AICc"""
        return sorted(self.models, key=lambda model: (model.round, -_finite_or_inf(model.aicc)))

    def table(self, sort: bool = False) -> pd.DataFrame:
        models = self.sorted_models if sort else self.models
        return pd.DataFrame(
            {
                "model": [model.number for model in models],
                "round": [model.round for model in models],
                "variables": ["+".join(model.variables) for model in models],
                "bandwidth": [model.bandwidth for model in models],
                "AICc": [model.aicc for model in models],
            }
        )


def _finite_or_inf(value: float) -> float:
    return value if np.isfinite(value) else float("inf")


class GwrPrediction(_ResultModel):
    """Predictions and prediction variances at target locations"""
    coefficient_names: List[str]
    coefficients: np.ndarray
    predictions: np.ndarray
    prediction_variance: np.ndarray
    sigma2: float

    def table(self) -> pd.DataFrame:
        columns: Dict[str, np.ndarray] = {}
        for j, name in enumerate(self.coefficient_names):
            columns[name] = self.coefficients[:, j]
        columns["prediction"] = self.predictions
        columns["prediction_var"] = self.prediction_variance
        return pd.DataFrame(columns)


class PredictionMetrics(BaseModel):
    """Validation metrics of predictions against held-out observations"""
    rmspe: float
    mape: float
    mean_zs: float
    sd_zs: float
    count: int

    def as_text(self) -> str:
        return (
            f"RMSPE   {self.rmspe:.6g}\n"
            f"MAPE    {self.mape:.6g}\n"
            f"Mean.ZS {self.mean_zs:.6g}\n"
            f"SD.ZS   {self.sd_zs:.6g}\n"
            f"n       {self.count}\n"
        )


# Collinearity

class CollinDiagnostics(_ResultModel):
    """Local correlations, VIFs, VDPs and condition numbers"""
    variable_names: List[str] = Field(..., description="Predictors, intercept excluded")
    coefficient_names: List[str]
    pair_names: List[str]
    local_correlations: np.ndarray = Field(..., description="n x pairs")
    local_vifs: np.ndarray = Field(..., description="n x m")
    local_vdps: np.ndarray = Field(..., description="n x (m+1) x (m+1), [coefficient, singular value]")
    local_cn: np.ndarray
    spec: KernelSpec

    corr_threshold: float = 0.8
    vif_threshold: float = 10.0
    vdp_threshold: float = 0.5
    cn_threshold: float = 30.0

    def flags(self) -> pd.DataFrame:
        """Rule-of-thumb flags per location"""
        smallest = self.local_vdps[:, :, -1]
        return pd.DataFrame(
            {
                "Corr_flag": (np.abs(self.local_correlations) > self.corr_threshold).any(axis=1),
                "VIF_flag": (self.local_vifs > self.vif_threshold).any(axis=1),
                "VDP_flag": (smallest > self.vdp_threshold).sum(axis=1) >= 2,
                "CN_flag": self.local_cn > self.cn_threshold,
            }
        )

    def table(self) -> pd.DataFrame:
        columns: Dict[str, np.ndarray] = {}
        for j, pair in enumerate(self.pair_names):
            columns[f"Corr_{pair}"] = self.local_correlations[:, j]
        for j, name in enumerate(self.variable_names):
            columns[f"{name}_VIF"] = self.local_vifs[:, j]
        for j, name in enumerate(self.coefficient_names):
            columns[f"{name}_VDP"] = self.local_vdps[:, j, -1]
        columns["Local_CN"] = self.local_cn
        frame = pd.DataFrame(columns)
        return pd.concat([frame, self.flags()], axis=1)


class LcrFit(_ResultModel):
    """Locally compensated ridge GW regression"""
    coefficient_names: List[str]
    coefficients: np.ndarray
    y: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    local_cn: np.ndarray = Field(..., description="Condition numbers before adjustment")
    local_lambda: np.ndarray
    adjusted_cn: np.ndarray = Field(..., description="Condition numbers of the ridge-augmented system")
    kappa: float
    adjust: bool
    spec: KernelSpec

    def table(self) -> pd.DataFrame:
        columns: Dict[str, np.ndarray] = {}
        for j, name in enumerate(self.coefficient_names):
            columns[name] = self.coefficients[:, j]
        columns["y"] = self.y
        columns["yhat"] = self.fitted
        columns["residual"] = self.residuals
        columns["Local_CN"] = self.local_cn
        columns["Local_Lambda"] = self.local_lambda
        return pd.DataFrame(columns)


class CnExploreModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    variables: List[str]
    bandwidth: Optional[float] = None
    local_cn: Optional[np.ndarray] = None
    error: Optional[str] = None

    def summary(self) -> Dict[str, float]:
        if self.local_cn is None:
            return five_number_summary([])
        return five_number_summary(self.local_cn)


class CnExploreResult(_ResultModel):
    """Local condition number distributions for alternative model structures"""
    models: List[CnExploreModel]

    def table(self) -> pd.DataFrame:
        rows = []
        for index, model in enumerate(self.models, start=1):
            row = {"model": index, "variables": "+".join(model.variables), "bandwidth": model.bandwidth}
            row.update(model.summary())
            row["error"] = model.error or ""
            rows.append(row)
        return pd.DataFrame(rows)
