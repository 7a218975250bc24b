"""Utility functions"""
from .parallel import map_locations
from .summary import five_number_summary

__all__ = ['map_locations', 'five_number_summary']
