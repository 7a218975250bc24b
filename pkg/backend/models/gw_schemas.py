"""Pydantic schemas for GW model API requests and responses"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class GwRunRequest(BaseModel):
    """Schema for running one GW model on rows posted as JSON"""
    command: str = Field(..., description="dist, gwss, gwpca, gwr, gwr-select, gwr-lcr, gwr-collin or gwr-predict")
    records: List[Dict[str, Any]] = Field(..., description="One object per location (coordinates and attributes)")
    x: str = Field("x", description="Easting / longitude column")
    y: str = Field("y", description="Northing / latitude column")
    options: Dict[str, Any] = Field(
        default_factory=dict,
        description="Run options by CLI flag name without dashes (vars, kernel, bw, adaptive, k, ...)",
    )
    predict_records: Optional[List[Dict[str, Any]]] = Field(
        None, description="Target locations for gwr-predict (coordinates and predictor values)"
    )


class GwRunResponse(BaseModel):
    """Schema for a GW model run result"""
    command: str
    columns: List[str]
    rows: List[Dict[str, Any]] = Field(..., description="Main result table, NaN written as null")
    bandwidth: Optional[float] = Field(None, description="Bandwidth used (selected when 'auto')")
    report: Optional[str] = Field(None, description="Diagnostics or metrics text")
    extra_tables: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)


class GwCommandsResponse(BaseModel):
    """Supported commands and kernels"""
    commands: List[str]
    kernels: List[str]
    robust: List[str]
