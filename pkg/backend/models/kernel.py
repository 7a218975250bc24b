"""Distance, kernel and bandwidth models"""
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

EARTH_RADIUS_M = 6378137.0


class DistanceMetric(str, Enum):
    MINKOWSKI = "minkowski"
    GREAT_CIRCLE = "greatCircle"


class KernelFamily(str, Enum):
    GLOBAL = "global"
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    BOXCAR = "boxcar"
    BISQUARE = "bisquare"
    TRICUBE = "tricube"

    @property
    def continuous(self) -> bool:
        """Kernels that give every data point a positive weight"""
        return self in (KernelFamily.GLOBAL, KernelFamily.GAUSSIAN, KernelFamily.EXPONENTIAL)


class DistanceSpec(BaseModel):
    """Distance metric: Minkowski with power p (p=2 Euclidean) or great circle in meters"""
    model_config = ConfigDict(frozen=True)

    metric: DistanceMetric = Field(DistanceMetric.MINKOWSKI, description="Distance family")
    p: float = Field(2.0, description="Minkowski power, must be >= 1")
    earth_radius: float = Field(EARTH_RADIUS_M, description="Sphere radius for great-circle distances (meters)")

    @classmethod
    def euclidean(cls) -> "DistanceSpec":
        return cls()

    @classmethod
    def great_circle(cls, earth_radius: float = EARTH_RADIUS_M) -> "DistanceSpec":
        return cls(metric=DistanceMetric.GREAT_CIRCLE, earth_radius=earth_radius)


class DistanceMatrix(BaseModel):
    """r x n distances; row i holds distances from target i to every data point"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    symmetric: bool = False

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.values.shape)

    def row(self, index: int) -> np.ndarray:
        return self.values[index]


class KernelSpec(BaseModel):
    """Kernel family with a fixed distance or adaptive nearest-neighbour bandwidth"""
    model_config = ConfigDict(frozen=True)

    family: KernelFamily = Field(KernelFamily.BISQUARE, description="Kernel function")
    bandwidth: Optional[float] = Field(None, description="Fixed distance, or neighbour count when adaptive")
    adaptive: bool = Field(False, description="Bandwidth is a count of nearest data points")
    distance: DistanceSpec = Field(default_factory=DistanceSpec, description="Distance metric used for weights")

    def with_bandwidth(self, bandwidth: Union[int, float]) -> "KernelSpec":
        return self.model_copy(update={"bandwidth": float(bandwidth)})

    def describe(self) -> str:
        if self.family is KernelFamily.GLOBAL:
            return "global"
        kind = "adaptive" if self.adaptive else "fixed"
        value = int(self.bandwidth) if self.adaptive and self.bandwidth is not None else self.bandwidth
        return f"{self.family.value} ({kind}, bandwidth={value})"


class WeightVector(BaseModel):
    """Diagonal of W for one target location"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    w: np.ndarray
    target_index: Optional[int] = Field(None, description="Index of the target when it is a data point")
    effective_bandwidth: Optional[float] = Field(None, description="Kernel scale actually applied")

    @field_validator("w", mode="before")
    @classmethod
    def _as_vector(cls, value):
        vector = np.array(value, dtype=float).ravel()
        vector.setflags(write=False)
        return vector

    @property
    def total(self) -> float:
        return float(self.w.sum())


class BandwidthResult(BaseModel):
    """Outcome of a bandwidth search"""
    value: float = Field(..., description="Selected bandwidth (an integer count when adaptive)")
    score: float = Field(..., description="Objective at the selected bandwidth")
    trace: List[Tuple[float, float]] = Field(default_factory=list, description="(bandwidth, score) per evaluation")
    adaptive: bool = False

    @property
    def bandwidth(self) -> Union[int, float]:
        return int(self.value) if self.adaptive else self.value
