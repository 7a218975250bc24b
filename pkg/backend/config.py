"""Application configuration and dependency injection"""
import os
from typing import Optional

from dotenv import load_dotenv

from services.distance_service import DistanceService
from services.gwss_service import GwssService
from services.gwpca_service import GwpcaService
from services.gwr_service import GwrService
from services.collin_service import CollinService
from controllers.gw_controller import GwController

# Load environment variables
load_dotenv()


class Config:
    """Application configuration"""
    # Runtime environment
    ENVIRONMENT = os.getenv("APP_ENV", os.getenv("ENVIRONMENT", "development")).lower()

    # API & server settings
    PORT = int(os.getenv("PORT", 8001))

    # Per-location work is fanned out over this many threads
    THREADS = int(os.getenv("GW_THREADS", os.cpu_count() or 1))

    # Robust GW PCA: MCD subset fraction (h = alpha * n) and base seed
    MCD_ALPHA = float(os.getenv("GW_MCD_ALPHA", "0.75"))
    MCD_SEED = int(os.getenv("GW_MCD_SEED", "42"))

    # Great-circle sphere radius in meters (WGS84 equatorial)
    EARTH_RADIUS = float(os.getenv("GW_EARTH_RADIUS", "6378137.0"))

    # Model defaults
    DEFAULT_KERNEL = os.getenv("GW_DEFAULT_KERNEL", "bisquare")
    OUTPUT_FORMAT = os.getenv("GW_OUTPUT_FORMAT", "csv")
    CN_THRESHOLD = float(os.getenv("GW_CN_THRESHOLD", "30.0"))
    MAX_ROBUST_ITER = int(os.getenv("GW_MAX_ROBUST_ITER", "20"))

    # CORS settings (comma-separated list in env, fallback to local tooling)
    _allowed_origins_env = os.getenv("ALLOWED_ORIGINS", "").strip()
    if _allowed_origins_env:
        ALLOWED_ORIGINS = [origin.strip() for origin in _allowed_origins_env.split(",") if origin.strip()]
    else:
        ALLOWED_ORIGINS = [
            "http://localhost:3000",
            "http://127.0.0.1:3000",
        ]


# Singleton instances
_distance_service_instance = None
_gwss_service_instance = None
_gwpca_service_instance = None
_gwr_service_instance = None
_collin_service_instance = None
_gw_controller_instance = None


def get_distance_service() -> DistanceService:
    """
    Get Distance Service instance (dependency injection)

    Returns:
        DistanceService singleton instance
    """
    global _distance_service_instance

    if _distance_service_instance is None:
        _distance_service_instance = DistanceService(earth_radius=Config.EARTH_RADIUS)

    return _distance_service_instance


def get_gwss_service() -> GwssService:
    """Get GW summary statistics service instance (dependency injection)"""
    global _gwss_service_instance

    if _gwss_service_instance is None:
        _gwss_service_instance = GwssService(threads=Config.THREADS)

    return _gwss_service_instance


def get_gwpca_service() -> GwpcaService:
    """Get GW PCA service instance (dependency injection)"""
    global _gwpca_service_instance

    if _gwpca_service_instance is None:
        _gwpca_service_instance = GwpcaService(
            threads=Config.THREADS,
            mcd_alpha=Config.MCD_ALPHA,
            seed=Config.MCD_SEED,
        )

    return _gwpca_service_instance


def get_gwr_service() -> GwrService:
    """Get GW regression service instance (dependency injection)"""
    global _gwr_service_instance

    if _gwr_service_instance is None:
        _gwr_service_instance = GwrService(
            threads=Config.THREADS,
            max_robust_iter=Config.MAX_ROBUST_ITER,
        )

    return _gwr_service_instance


def get_collin_service() -> CollinService:
    """Get collinearity / LCR service instance (dependency injection)"""
    global _collin_service_instance

    if _collin_service_instance is None:
        _collin_service_instance = CollinService(threads=Config.THREADS)

    return _collin_service_instance


def build_gw_controller(
    threads: Optional[int] = None,
    seed: Optional[int] = None,
    earth_radius: Optional[float] = None,
) -> GwController:
    """
    Build a GW Controller with its own services (command-line runs with overrides)

    Args:
        threads: worker threads (default: Config.THREADS)
        seed: robust GW PCA seed (default: Config.MCD_SEED)
        earth_radius: great-circle radius in meters (default: Config.EARTH_RADIUS)
    """
    threads = threads or Config.THREADS
    return GwController(
        distance_service=DistanceService(earth_radius=earth_radius or Config.EARTH_RADIUS),
        gwss_service=GwssService(threads=threads),
        gwpca_service=GwpcaService(
            threads=threads,
            mcd_alpha=Config.MCD_ALPHA,
            seed=Config.MCD_SEED if seed is None else seed,
        ),
        gwr_service=GwrService(threads=threads, max_robust_iter=Config.MAX_ROBUST_ITER),
        collin_service=CollinService(threads=threads),
    )


def get_gw_controller() -> GwController:
    """
    Get GW Controller instance (dependency injection)

    Returns:
        GwController singleton instance
    """
    global _gw_controller_instance

    if _gw_controller_instance is None:
        _gw_controller_instance = GwController(
            distance_service=get_distance_service(),
            gwss_service=get_gwss_service(),
            gwpca_service=get_gwpca_service(),
            gwr_service=get_gwr_service(),
            collin_service=get_collin_service(),
        )

    return _gw_controller_instance
