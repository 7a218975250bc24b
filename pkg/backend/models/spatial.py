"""Point-referenced multivariate data models"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from exceptions import MissingColumnError


def _frozen_matrix(value, columns: Optional[int] = None) -> np.ndarray:
    """Copy ``value`` into a read-only float matrix (1-D input becomes one row or one column)."""
    matrix = np.array(value, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1) if columns is not None and matrix.size == columns else matrix.reshape(-1, 1)
    matrix.setflags(write=False)
    return matrix


class SpatialDataset(BaseModel):
    """n point locations plus an n x m attribute matrix; immutable once built"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coords: np.ndarray = Field(..., description="n x 2 coordinates (x, y) or (lon, lat) in degrees when geographic")
    attrs: np.ndarray = Field(..., description="n x m attribute values")
    names: List[str] = Field(..., description="m attribute column names")
    geographic: bool = Field(False, description="Use great-circle distances on (lon, lat)")

    @field_validator("coords", mode="before")
    @classmethod
    def _coords_matrix(cls, value):
        return _frozen_matrix(value, columns=2)

    @field_validator("attrs", mode="before")
    @classmethod
    def _attrs_matrix(cls, value):
        return _frozen_matrix(value)

    @property
    def n(self) -> int:
        return int(self.attrs.shape[0])

    @property
    def m(self) -> int:
        return int(self.attrs.shape[1]) if self.attrs.ndim == 2 else 0

    def index_of(self, name: str) -> int:
        """Column index of ``name``; raises MissingColumnError when absent."""
        try:
            return self.names.index(name)
        except ValueError:
            raise MissingColumnError(f"Column '{name}' not found", column=name)

    def column(self, name: str) -> np.ndarray:
        return self.attrs[:, self.index_of(name)]

    def columns(self, names: List[str]) -> np.ndarray:
        return self.attrs[:, [self.index_of(name) for name in names]]

    def with_attrs(self, attrs: np.ndarray) -> "SpatialDataset":
        return SpatialDataset(coords=self.coords, attrs=attrs, names=list(self.names), geographic=self.geographic)


class VariableSelection(BaseModel):
    """Dependent variable (optional) and ordered independent variables"""
    model_config = ConfigDict(frozen=True)

    dependent: Optional[str] = Field(None, description="Response column for regression models")
    independents: List[str] = Field(default_factory=list, description="Ordered predictor / analysis columns")
