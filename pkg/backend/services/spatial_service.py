"""Validation and preparation of spatial datasets"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from exceptions import (
    DuplicateNameError,
    EmptyDatasetError,
    GeographicRangeViolationError,
    GwValidationError,
    InvalidSelectionError,
    NonFiniteValueError,
    ZeroVarianceError,
)
from models.spatial import SpatialDataset, VariableSelection

logger = logging.getLogger(__name__)

INTERCEPT = "Intercept"


def validate(ds: SpatialDataset) -> None:
    """
    Check every dataset invariant.

    Raises:
        EmptyDatasetError, DuplicateNameError, NonFiniteValueError,
        GeographicRangeViolationError
    """
    coords, attrs = ds.coords, ds.attrs
    if attrs.ndim != 2 or attrs.shape[0] == 0 or attrs.shape[1] == 0:
        raise EmptyDatasetError()
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise GwValidationError("Coordinates must have exactly two columns", shape=list(coords.shape))
    if coords.shape[0] != attrs.shape[0]:
        raise GwValidationError(
            f"{coords.shape[0]} coordinate rows but {attrs.shape[0]} attribute rows",
            coord_rows=int(coords.shape[0]),
            attr_rows=int(attrs.shape[0]),
        )

    if len(ds.names) != attrs.shape[1]:
        raise DuplicateNameError(f"Expected {attrs.shape[1]} column names, got {len(ds.names)}")
    seen = set()
    for name in ds.names:
        if not name or not str(name).strip():
            raise DuplicateNameError("Column names must be nonempty")
        if name in seen:
            raise DuplicateNameError(f"Duplicate column name '{name}'", column=name)
        seen.add(name)

    for label, matrix, columns in (("coords", coords, ["x", "y"]), ("attrs", attrs, ds.names)):
        bad = np.argwhere(~np.isfinite(matrix))
        if bad.size:
            row, col = (int(v) for v in bad[0])
            raise NonFiniteValueError(
                f"Non-finite value in {label} at row {row + 1}, column '{columns[col]}'",
                row=row + 1,
                column=columns[col],
            )

    if ds.geographic:
        lon, lat = coords[:, 0], coords[:, 1]
        bad_lon = np.flatnonzero(np.abs(lon) > 180.0)
        bad_lat = np.flatnonzero(np.abs(lat) > 90.0)
        if bad_lon.size or bad_lat.size:
            row = int(min(bad_lon.min(initial=ds.n), bad_lat.min(initial=ds.n)))
            raise GeographicRangeViolationError(
                f"Longitude/latitude out of range at row {row + 1}: ({lon[row]}, {lat[row]})",
                row=row + 1,
            )


def standardize(ds: SpatialDataset, cols: List[str]) -> SpatialDataset:
    """Z-score the selected columns with the sample (n-1) standard deviation."""
    attrs = np.array(ds.attrs, dtype=float)
    for name in cols:
        j = ds.index_of(name)
        column = attrs[:, j]
        sd = column.std(ddof=1) if column.size > 1 else 0.0
        if not sd > 0:
            raise ZeroVarianceError(f"Column '{name}' has zero standard deviation", column=name)
        attrs[:, j] = (column - column.mean()) / sd
    logger.debug(f"Standardized columns: {', '.join(cols)}")
    return ds.with_attrs(attrs)


def resolve_selection(
    ds: SpatialDataset,
    selection: VariableSelection,
    require_dependent: bool = False,
    require_independents: bool = True,
) -> Tuple[Optional[int], List[int]]:
    """
    Resolve a selection to column indices.

    Returns:
        (dependent index or None, independent indices in selection order)
    """
    if require_dependent and not selection.dependent:
        raise InvalidSelectionError("A dependent variable is required")
    if require_independents and not selection.independents:
        raise InvalidSelectionError("At least one independent variable is required")
    if len(set(selection.independents)) != len(selection.independents):
        raise InvalidSelectionError("Independent variables must be distinct", independents=selection.independents)
    if selection.dependent and selection.dependent in selection.independents:
        raise InvalidSelectionError(
            f"Dependent variable '{selection.dependent}' is also listed as independent",
            column=selection.dependent,
        )
    dependent = ds.index_of(selection.dependent) if selection.dependent else None
    return dependent, [ds.index_of(name) for name in selection.independents]


def design_matrix(ds: SpatialDataset, independents: List[str]) -> np.ndarray:
    """n x (m+1) design with a leading column of ones"""
    return np.column_stack([np.ones(ds.n), ds.columns(independents)])


def regression_inputs(ds: SpatialDataset, selection: VariableSelection) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """Validated (X, y, coefficient names) for a regression selection"""
    validate(ds)
    resolve_selection(ds, selection, require_dependent=True, require_independents=False)
    X = design_matrix(ds, selection.independents)
    y = np.array(ds.column(selection.dependent), dtype=float)
    return X, y, [INTERCEPT] + list(selection.independents)
