"""API routes"""
from .gw_routes import router as gw_router

__all__ = ['gw_router']
