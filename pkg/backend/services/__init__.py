"""Numerical services, one per model family"""
from .collin_service import CollinService
from .distance_service import DistanceService
from .gwpca_service import GwpcaService
from .gwr_service import GwrService
from .gwss_service import GwssService

__all__ = ['CollinService', 'DistanceService', 'GwpcaService', 'GwrService', 'GwssService']
