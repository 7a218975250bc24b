"""CSV and GeoJSON serialization of per-location result tables"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from exceptions import ResultIoError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "geojson")
FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def json_value(value: Any) -> Any:
    """Plain JSON scalar; NaN and infinities become null"""
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if math.isfinite(number) else None
    return value


def to_csv_text(table: pd.DataFrame) -> str:
    return table.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")


def to_feature_collection(table: pd.DataFrame, coords) -> Dict[str, Any]:
    """FeatureCollection of Point features, one per table row, coordinates echoed from input"""
    coords = np.asarray(coords, dtype=float)
    if coords.shape[0] != len(table):
        raise ResultIoError(f"{len(table)} result rows but {coords.shape[0]} coordinates")
    features: List[Dict[str, Any]] = []
    records = table_records(table)
    for (cx, cy), record in zip(coords, records):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [float(cx), float(cy)]},
                "properties": record,
            }
        )
    return {"type": "FeatureCollection", "features": features}


def write_table(
    table: pd.DataFrame,
    path: PathLike,
    fmt: str = "csv",
    coords: Optional[np.ndarray] = None,
) -> None:
    """
    Write a result table.

    Args:
        table: one row per location
        path: output file
        fmt: "csv" (17 significant digits, NaN as empty) or "geojson"
        coords: location coordinates, required for GeoJSON
    """
    if fmt not in FORMATS:
        raise ResultIoError(f"Unknown output format '{fmt}'", format=fmt)
    try:
        if fmt == "csv":
            Path(path).write_text(to_csv_text(table), encoding="utf-8")
        else:
            if coords is None:
                raise ResultIoError("GeoJSON output needs location coordinates")
            payload = to_feature_collection(table, coords)
            Path(path).write_text(json.dumps(payload, allow_nan=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ResultIoError(f"Could not write {path}: {exc}", path=str(path))
    logger.info(f"Wrote {len(table)} row(s) to {path}")


def write_text(text: str, path: PathLike) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ResultIoError(f"Could not write {path}: {exc}", path=str(path))
    logger.info(f"Wrote {path}")


def sibling_path(path: PathLike, suffix: str, extension: str) -> Path:
    """``out.csv`` + ("_loadings", ".csv") -> ``out_loadings.csv``"""
    path = Path(path)
    return path.with_name(f"{path.stem}{suffix}{extension}")


def table_records(table: pd.DataFrame) -> List[Dict[str, Any]]:
    """Row objects with JSON-safe values"""
    return [
        {str(key): json_value(value) for key, value in record.items()}
        for record in table.to_dict(orient="records")
    ]
