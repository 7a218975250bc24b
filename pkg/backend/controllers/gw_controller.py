"""GW Controller - orchestrates model runs for the command line and the HTTP API"""
import json
import logging
import os
import sys
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from exceptions import ConfigError, GwModelError, MissingColumnError
from models.kernel import KernelFamily, KernelSpec
from models.results import GwrFit
from models.run_config import RunConfig
from models.spatial import SpatialDataset, VariableSelection
from services.collin_service import CollinService
from services.distance_service import DistanceService
from services.gwpca_service import GwpcaService
from services.gwr_service import GwrService, diagnostics_report, ols_fit, prediction_metrics
from services.gwss_service import GwssService
from services.spatial_service import standardize
from utils.csv_io import read_csv
from utils.result_writer import sibling_path, to_csv_text, to_feature_collection, write_table, write_text
from utils.summary import five_number_summary

logger = logging.getLogger(__name__)


class RunOutput(BaseModel):
    """Tables and text produced by one run"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: str
    table: pd.DataFrame = Field(..., description="Main result, one row per location (per model for gwr-select)")
    coords: Optional[np.ndarray] = Field(None, description="Location of every table row")
    extra_tables: Dict[str, pd.DataFrame] = Field(default_factory=dict, description="Keyed by file suffix")
    report: Optional[str] = None
    report_suffix: str = "_report"
    bandwidth: Optional[float] = None
    warnings: List[str] = Field(default_factory=list)


def _summary_block(title: str, columns: Dict[str, np.ndarray]) -> str:
    frame = pd.DataFrame({name: five_number_summary(values) for name, values in columns.items()}).T
    return f"{title}\n{frame.to_string(float_format=lambda v: f'{v:.6g}')}\n"


class GwController:
    """Controller for GW model runs"""

    def __init__(
        self,
        distance_service: DistanceService,
        gwss_service: GwssService,
        gwpca_service: GwpcaService,
        gwr_service: GwrService,
        collin_service: CollinService,
    ):
        """
        Initialize GW Controller

        Args:
            distance_service: distance matrices and the distance cache
            gwss_service: GW summary statistics
            gwpca_service: basic and robust GW PCA
            gwr_service: GW regression
            collin_service: collinearity diagnostics and LCR regression
        """
        self.distance_service = distance_service
        self.gwss_service = gwss_service
        self.gwpca_service = gwpca_service
        self.gwr_service = gwr_service
        self.collin_service = collin_service

    def kernel_spec(self, config: RunConfig, geographic: bool) -> KernelSpec:
        """Kernel spec for a run; the bandwidth stays None while it awaits selection"""
        distance = self.distance_service.spec_for(geographic, p=config.power, earth_radius=config.earth_radius)
        return KernelSpec(
            family=config.kernel,
            bandwidth=config.bandwidth,
            adaptive=config.adaptive and config.kernel is not KernelFamily.GLOBAL,
            distance=distance,
        )

    def execute(
        self,
        config: RunConfig,
        dataset: SpatialDataset,
        target_dataset: Optional[SpatialDataset] = None,
    ) -> RunOutput:
        """
        Run one command on an in-memory dataset.

        Args:
            config: validated run configuration
            dataset: calibration data
            target_dataset: target locations with predictor values (gwr-predict, optional for dist)
        """
        spec = self.kernel_spec(config, dataset.geographic)
        handler = {
            "dist": self._dist,
            "gwss": self._gwss,
            "gwpca": self._gwpca,
            "gwr": self._gwr,
            "gwr-select": self._gwr_select,
            "gwr-lcr": self._gwr_lcr,
            "gwr-collin": self._gwr_collin,
            "gwr-predict": self._gwr_predict,
        }[config.command]
        logger.info(f"Running {config.command} on {dataset.n} locations")
        return handler(config, dataset, spec, target_dataset)

    # Commands

    def _dist(self, config, dataset, spec, target_dataset) -> RunOutput:
        rp = target_dataset.coords if target_dataset is not None else None
        matrix = self._cached_matrix(config, (dataset.n if rp is None else rp.shape[0], dataset.n), rp is None)
        if matrix is None:
            matrix = self.distance_service.dist_matrix(dataset.coords, rp, spec.distance)
            if config.dist_cache:
                self.distance_service.write_cache(config.dist_cache, matrix)
        table = pd.DataFrame(matrix.values, columns=[f"d_{j + 1}" for j in range(matrix.shape[1])])
        return RunOutput(
            command=config.command,
            table=table,
            coords=rp if rp is not None else dataset.coords,
        )

    def _cached_matrix(self, config: RunConfig, shape, symmetric: bool):
        """Existing --dist-cache matrix when its shape and symmetry match this run, else None"""
        if not config.dist_cache or not os.path.isfile(config.dist_cache):
            return None
        cached = self.distance_service.read_cache(config.dist_cache)
        if tuple(cached.shape) != tuple(shape) or cached.symmetric != symmetric:
            logger.warning(
                f"Distance cache {config.dist_cache} holds a {cached.shape[0]}x{cached.shape[1]} matrix, "
                f"expected {shape[0]}x{shape[1]}; recomputing"
            )
            return None
        logger.info(f"Reusing distance cache {config.dist_cache}")
        return cached

    def _gwss(self, config, dataset, spec, target_dataset) -> RunOutput:
        result = self.gwss_service.gwss_all(
            dataset, config.vars, spec, include_quantiles=config.quantiles, stream=config.stream
        )
        return RunOutput(
            command=config.command,
            table=result.table(),
            coords=dataset.coords,
            bandwidth=spec.bandwidth,
            warnings=result.warnings,
        )

    def _gwpca(self, config, dataset, spec, target_dataset) -> RunOutput:
        robust = config.robust == "mcd"
        service = self.gwpca_service
        if config.seed != service.seed:
            service = GwpcaService(threads=service.threads, mcd_alpha=service.mcd_alpha, seed=config.seed)
        if config.standardize:
            dataset = standardize(dataset, config.vars)
        if spec.bandwidth is None and spec.family is not KernelFamily.GLOBAL:
            selected = service.gwpca_bandwidth(
                dataset, config.vars, config.k, robust=robust, adaptive=spec.adaptive, spec=spec
            )
            spec = spec.with_bandwidth(selected.value)
        result = service.gwpca_fit(dataset, config.vars, spec, k=config.k, robust=robust, stream=config.stream)
        extra = {"_loadings": result.loadings_table()}
        if result.scores is not None:
            extra["_scores"] = pd.DataFrame(
                result.scores, columns=[f"Comp.{j + 1}" for j in range(result.m)]
            )
        global_result = service.global_pca(dataset, config.vars, robust=robust)
        report = _summary_block(
            f"{'Robust' if robust else 'Basic'} GW PCA, {spec.describe()}",
            {f"PTV_{j}": result.ptv(j) for j in range(1, config.k + 1)},
        )
        report += "\nGlobal PCA, percentage of total variance:\n" + "  ".join(
            f"Comp.{j + 1} {share:.4g}" for j, share in enumerate(global_result.shares)
        ) + "\n"
        return RunOutput(
            command=config.command,
            table=result.table(),
            coords=dataset.coords,
            extra_tables=extra,
            report=report,
            report_suffix="_summary",
            bandwidth=spec.bandwidth,
            warnings=result.warnings,
        )

    def _regression_spec(self, config, dataset, selection, spec) -> KernelSpec:
        if spec.bandwidth is not None or spec.family is KernelFamily.GLOBAL:
            return spec
        selected = self.gwr_service.gwr_bandwidth(dataset, selection, spec, criterion=config.criterion)
        return spec.with_bandwidth(selected.value)

    def _selection(self, config: RunConfig) -> VariableSelection:
        return VariableSelection(dependent=config.dependent, independents=config.vars)

    def _gwr(self, config, dataset, spec, target_dataset) -> RunOutput:
        selection = self._selection(config)
        spec = self._regression_spec(config, dataset, selection, spec)
        if config.robust == "filtered":
            fit = self.gwr_service.gwr_robust_filtered(dataset, selection, spec)
        elif config.robust == "iterative":
            fit = self.gwr_service.gwr_robust_iterative(dataset, selection, spec)
        else:
            fit = self.gwr_service.gwr_basic(dataset, selection, spec, stream=config.stream)
        if config.criterion == "cv":
            fit = fit.model_copy(update={"cv_score": self.gwr_service.gwr_cv_score(dataset, selection, spec)})
        return RunOutput(
            command=config.command,
            table=fit.table(),
            coords=dataset.coords,
            report=self._gwr_report(dataset, selection, fit),
            report_suffix="_diagnostics",
            bandwidth=spec.bandwidth,
            warnings=fit.warnings,
        )

    def _gwr_report(self, dataset, selection, fit: GwrFit) -> str:
        ols = ols_fit(dataset, selection)
        frame = ols.summary_frame().to_string(float_format=lambda v: f"{v:.6g}")
        return (
            "Global regression\n"
            f"{frame}\n"
            f"R-square: {ols.r2:.6g}  Adjusted R-square: {ols.adj_r2:.6g}  Sigma2: {ols.sigma2:.6g}\n\n"
            + diagnostics_report(fit)
        )

    def _gwr_select(self, config, dataset, spec, target_dataset) -> RunOutput:
        report = self.gwr_service.stepwise_select(
            dataset,
            config.dependent,
            config.vars,
            spec,
            reoptimize=config.refine,
            criterion=config.criterion,
        )
        text = "Inclusion order: " + " -> ".join(report.inclusion_order) + "\n"
        text += report.table(sort=True).to_string(index=False) + "\n"
        return RunOutput(
            command=config.command,
            table=report.table(),
            report=text,
            bandwidth=spec.bandwidth,
            warnings=report.warnings,
        )

    def _gwr_lcr(self, config, dataset, spec, target_dataset) -> RunOutput:
        selection = self._selection(config)
        if spec.bandwidth is None and spec.family is not KernelFamily.GLOBAL:
            selected = self.collin_service.lcr_bandwidth(
                dataset, selection, spec, adjust=config.adjust, cn_thresh=config.cn_thresh, lambda_=config.lambda_
            )
            spec = spec.with_bandwidth(selected.value)
        fit = self.collin_service.gwr_lcr(
            dataset, selection, spec, adjust=config.adjust, cn_thresh=config.cn_thresh, lambda_=config.lambda_
        )
        report = _summary_block(
            f"LCR GW regression, {spec.describe()}",
            {"Local_CN": fit.local_cn, "Local_Lambda": fit.local_lambda},
        )
        return RunOutput(
            command=config.command,
            table=fit.table(),
            coords=dataset.coords,
            report=report,
            bandwidth=spec.bandwidth,
            warnings=fit.warnings,
        )

    def _gwr_collin(self, config, dataset, spec, target_dataset) -> RunOutput:
        selection = self._selection(config)
        spec = self._regression_spec(config, dataset, selection, spec)
        diagnostics = self.collin_service.collin_diagnostics(dataset, selection, spec, cn_threshold=config.cn_thresh)
        flags = diagnostics.flags()
        report = _summary_block(f"Local collinearity, {spec.describe()}", {"Local_CN": diagnostics.local_cn})
        report += "\nLocations flagged:\n" + "\n".join(
            f"{name}: {int(flags[name].sum())}" for name in flags.columns
        ) + "\n"
        return RunOutput(
            command=config.command,
            table=diagnostics.table(),
            coords=dataset.coords,
            report=report,
            bandwidth=spec.bandwidth,
            warnings=diagnostics.warnings,
        )

    def _gwr_predict(self, config, dataset, spec, target_dataset) -> RunOutput:
        if target_dataset is None:
            raise ConfigError("'gwr-predict' needs target locations")
        for name in config.vars:
            if name not in target_dataset.names:
                raise MissingColumnError(f"Target data has no column '{name}'", column=name)
        selection = self._selection(config)
        spec = self._regression_spec(config, dataset, selection, spec)
        prediction = self.gwr_service.gwr_predict(
            dataset, selection, spec, target_dataset.coords, target_dataset.columns(config.vars)
        )
        report = None
        if config.dependent in target_dataset.names:
            metrics = prediction_metrics(
                target_dataset.column(config.dependent), prediction.predictions, prediction.prediction_variance
            )
            report = metrics.as_text()
        return RunOutput(
            command=config.command,
            table=prediction.table(),
            coords=target_dataset.coords,
            report=report,
            report_suffix="_metrics",
            bandwidth=spec.bandwidth,
            warnings=prediction.warnings,
        )

    # Command line

    def write_output(self, config: RunConfig, output: RunOutput) -> None:
        """Write the main table, extra tables and report next to ``config.out`` (stdout without it)"""
        table = output.table
        located = output.coords is not None and config.command != "dist"
        if config.format == "csv" and located:
            table = table.copy()
            # Result columns keep their names; coordinates take a suffix on collision (e.g. observed "y")
            x_name = config.x if config.x not in table.columns else f"{config.x}_coord"
            y_name = config.y if config.y not in table.columns else f"{config.y}_coord"
            table.insert(0, y_name, output.coords[:, 1])
            table.insert(0, x_name, output.coords[:, 0])
        if config.out is None:
            if config.format == "csv":
                sys.stdout.write(to_csv_text(table))
            else:
                sys.stdout.write(json.dumps(to_feature_collection(table, output.coords), allow_nan=False) + "\n")
            if output.report:
                sys.stderr.write(output.report)
            if output.extra_tables:
                logger.info(f"Use --out to save {', '.join(sorted(output.extra_tables))} tables")
            return
        write_table(table, config.out, config.format, coords=output.coords)
        for suffix, extra in output.extra_tables.items():
            write_table(extra, sibling_path(config.out, suffix, ".csv"), "csv")
        if output.report:
            write_text(output.report, sibling_path(config.out, output.report_suffix, ".txt"))

    def run(self, config: RunConfig) -> int:
        """
        Read the input, execute, write the results.

        Returns:
            0 on success, 1 on validation errors, 2 on numerical failures
        """
        try:
            if not config.input:
                raise ConfigError("--input is required")
            dataset = read_csv(config.input, config.x, config.y, config.geographic)
            target_dataset = None
            if config.predict_input:
                target_dataset = read_csv(config.predict_input, config.x, config.y, config.geographic)
            elif config.command == "gwr-predict":
                raise ConfigError("'gwr-predict' needs --predict-input")
            output = self.execute(config, dataset, target_dataset=target_dataset)
            self.write_output(config, output)
        except GwModelError as exc:
            logger.error(f"{config.command} failed ({exc.code}): {exc.message}")
            return exc.exit_code
        for warning in output.warnings:
            sys.stderr.write(f"warning: {warning}\n")
        if output.bandwidth is not None:
            logger.info(f"Bandwidth used: {output.bandwidth:g}")
        return 0
