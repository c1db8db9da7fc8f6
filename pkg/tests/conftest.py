import sys
from pathlib import Path

import numpy as np
import pytest


ROOT = Path(__file__).resolve().parents[1]
ROOT_STR = str(ROOT)
if ROOT_STR not in sys.path:
    sys.path.insert(0, ROOT_STR)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian_pair(rng):
    """Bivariate normal sample with correlation 0.9."""
    cov = np.array([[1.0, 0.9], [0.9, 1.0]])
    xy = rng.multivariate_normal(np.zeros(2), cov, size=2000)
    return xy[:, :1], xy[:, 1:]


@pytest.fixture
def small_csv(tmp_path):
    path = tmp_path / "small.csv"
    path.write_text("a,b\n1.0,2.0\n3.0,4.0\n5.0,6.0\n", encoding="utf-8")
    return path
