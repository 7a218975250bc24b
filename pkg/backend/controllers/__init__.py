"""Controllers layer - Run orchestration shared by the CLI and the HTTP API"""
from .gw_controller import GwController, RunOutput

__all__ = ["GwController", "RunOutput"]
