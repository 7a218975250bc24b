"""
Pytest configuration and fixtures for the GW modelling tests.

Synthetic datasets are generated from fixed seeds so every run sees the same
numbers. Tests against the exported DubVoter / EWHP tables run only when
GW_FIXTURE_DIR points at a directory holding them.
"""
import logging
import os
import sys

import numpy as np
import pytest
from fastapi.testclient import TestClient

# Configure logging for tests - simplified output
logging.basicConfig(
    level=logging.INFO,
    format='[%(levelname)s] %(message)s',
    datefmt='%H:%M:%S'
)

# Suppress verbose logs from third-party libraries
logging.getLogger('urllib3').setLevel(logging.WARNING)
logging.getLogger('httpcore').setLevel(logging.WARNING)
logging.getLogger('httpx').setLevel(logging.WARNING)
logging.getLogger('asyncio').setLevel(logging.WARNING)

logger = logging.getLogger(__name__)

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from main import app  # noqa: E402
from models.spatial import SpatialDataset  # noqa: E402
from tests.test_helpers import EWHP_COORDS, grid_coords, make_dataset  # noqa: E402


@pytest.fixture
def ewhp_coords() -> np.ndarray:
    return EWHP_COORDS.copy()


@pytest.fixture
def regression_dataset() -> SpatialDataset:
    """7 x 7 grid; y = 1 + b1(u) x1 - 0.5 x2 + noise with a slope rising from west to east"""
    rng = np.random.default_rng(7)
    coords = grid_coords(7)
    n = coords.shape[0]
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    slope = 1.0 + 0.25 * coords[:, 0]
    y = 1.0 + slope * x1 - 0.5 * x2 + rng.normal(scale=0.3, size=n)
    return make_dataset(coords, {"y": y, "x1": x1, "x2": x2})


@pytest.fixture
def pca_dataset() -> SpatialDataset:
    """6 x 6 grid with three correlated variables"""
    rng = np.random.default_rng(11)
    coords = grid_coords(6)
    n = coords.shape[0]
    base = rng.normal(size=n)
    a = base + rng.normal(scale=0.5, size=n)
    b = 0.8 * base + rng.normal(scale=0.6, size=n)
    c = rng.normal(size=n)
    return make_dataset(coords, {"a": a, "b": b, "c": c})


@pytest.fixture
def client():
    return TestClient(app)
