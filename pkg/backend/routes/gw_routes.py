"""GW model API routes - Thin HTTP layer over the GW controller"""
from typing import Any, Dict, List

import pandas as pd
from fastapi import APIRouter, Depends

from config import get_gw_controller
from controllers.gw_controller import GwController
from exceptions import EmptyFileError
from models.gw_schemas import GwCommandsResponse, GwRunRequest, GwRunResponse
from models.kernel import KernelFamily
from models.run_config import COMMANDS, RunConfig
from utils.csv_io import dataset_from_frame
from utils.result_writer import table_records

router = APIRouter(prefix="/api/gw", tags=["gw"])


def _frame(records: List[Dict[str, Any]]) -> pd.DataFrame:
    if not records:
        raise EmptyFileError("No records supplied")
    return pd.DataFrame.from_records(records)


@router.get("/commands", response_model=GwCommandsResponse)
def list_commands():
    """Supported commands, kernels and robust variants"""
    return GwCommandsResponse(
        commands=COMMANDS,
        kernels=[family.value for family in KernelFamily],
        robust=["none", "filtered", "iterative", "mcd"],
    )


@router.post("/run", response_model=GwRunResponse)
def run_model(
    request: GwRunRequest,
    gw_controller: GwController = Depends(get_gw_controller),
):
    """
    Run one GW model on posted rows

    Args:
        request: command, rows and run options
        gw_controller: GW controller dependency injection

    Returns:
        GwRunResponse with the main table, selected bandwidth, report and warnings

    Raises:
        GwModelError: rendered by the application exception handler
    """
    config = RunConfig(**{**request.options, "command": request.command, "x": request.x, "y": request.y})
    dataset = dataset_from_frame(_frame(request.records), config.x, config.y, config.geographic)
    target_dataset = None
    if request.predict_records is not None:
        target_dataset = dataset_from_frame(_frame(request.predict_records), config.x, config.y, config.geographic)

    output = gw_controller.execute(config, dataset, target_dataset=target_dataset)
    return GwRunResponse(
        command=config.command,
        columns=[str(column) for column in output.table.columns],
        rows=table_records(output.table),
        bandwidth=output.bandwidth,
        report=output.report,
        extra_tables={suffix.lstrip("_"): table_records(table) for suffix, table in output.extra_tables.items()},
        warnings=output.warnings,
    )
