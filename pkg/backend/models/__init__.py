"""Data models for the GW modelling toolkit"""
from .spatial import SpatialDataset, VariableSelection
from .kernel import BandwidthResult, DistanceSpec, KernelFamily, KernelSpec, WeightVector
from .run_config import RunConfig

__all__ = [
    'SpatialDataset',
    'VariableSelection',
    'BandwidthResult',
    'DistanceSpec',
    'KernelFamily',
    'KernelSpec',
    'WeightVector',
    'RunConfig',
]
