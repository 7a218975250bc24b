"""CSV ingestion into SpatialDataset"""
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from exceptions import DuplicateNameError, EmptyFileError, MissingColumnError, ParseError, ResultIoError
from models.spatial import SpatialDataset

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _check_header(path: PathLike) -> List[str]:
    header = pd.read_csv(path, header=None, nrows=1, dtype=str, encoding="utf-8").iloc[0].tolist()
    names = [str(name).strip() for name in header]
    seen = set()
    for name in names:
        if name in seen:
            raise DuplicateNameError(f"Duplicate column '{name}' in {path}", column=name)
        seen.add(name)
    return names


def _require_numeric(frame: pd.DataFrame) -> pd.DataFrame:
    """Coerce every column to float, reporting the first unparseable cell (1-based data row)"""
    for column in frame.columns:
        if pd.api.types.is_numeric_dtype(frame[column]):
            continue
        for row, value in enumerate(frame[column].tolist(), start=1):
            try:
                float(value)
            except (TypeError, ValueError):
                raise ParseError(
                    f"Non-numeric value {value!r} at row {row}, column '{column}'",
                    row=row,
                    column=str(column),
                )
        frame[column] = frame[column].astype(float)
    return frame.astype(float)


def dataset_from_frame(
    frame: pd.DataFrame,
    x: str,
    y: str,
    geographic: bool = False,
    columns: Optional[Iterable[str]] = None,
) -> SpatialDataset:
    """
    Split a numeric frame into coordinates and attributes.

    Args:
        frame: one row per location
        x: easting / longitude column
        y: northing / latitude column
        geographic: coordinates are (longitude, latitude) in degrees
        columns: attribute columns to keep (default: every non-coordinate column)
    """
    if frame.empty:
        raise EmptyFileError("Input has no data rows")
    for name in (x, y):
        if name not in frame.columns:
            raise MissingColumnError(f"Coordinate column '{name}' not found", column=name)
    attributes = [c for c in frame.columns if c not in (x, y)] if columns is None else list(columns)
    for name in attributes:
        if name not in frame.columns:
            raise MissingColumnError(f"Column '{name}' not found", column=name)
    numeric = _require_numeric(frame[[x, y] + attributes].copy())
    return SpatialDataset(
        coords=numeric[[x, y]].to_numpy(),
        attrs=numeric[attributes].to_numpy(),
        names=[str(name) for name in attributes],
        geographic=geographic,
    )


def read_csv(
    path: PathLike,
    x: str,
    y: str,
    geographic: bool = False,
    columns: Optional[Iterable[str]] = None,
) -> SpatialDataset:
    """
    Read a UTF-8 CSV with a header row into a SpatialDataset; row order is preserved
    and attribute columns keep header order.

    Raises:
        EmptyFileError, MissingColumnError, ParseError, DuplicateNameError
    """
    try:
        _check_header(path)
        frame = pd.read_csv(path, float_precision="round_trip", encoding="utf-8", skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyFileError(f"{path} is empty", path=str(path))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc}", path=str(path))
    except OSError as exc:
        raise ResultIoError(f"Could not read {path}: {exc}", path=str(path))
    frame.columns = [str(c).strip() for c in frame.columns]
    dataset = dataset_from_frame(frame, x, y, geographic, columns)
    logger.info(f"Read {dataset.n} rows and {dataset.m} attribute column(s) from {path}")
    return dataset


def dataset_frame(ds: SpatialDataset, x: str = "x", y: str = "y") -> pd.DataFrame:
    """Coordinates followed by attributes, the inverse of ``dataset_from_frame``"""
    frame = pd.DataFrame(np.asarray(ds.attrs), columns=ds.names)
    frame.insert(0, y, ds.coords[:, 1])
    frame.insert(0, x, ds.coords[:, 0])
    return frame
