from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import CITestResult, EstimatorConfig
from .errors import ConfigError, DegenerateInputError, EstimatorError
from .estimators import as_matrix

TEST_METHODS = ("permutation-mi", "fisher-z", "hybrid")


@dataclass(frozen=True)
class TestSpec:
    method: str = "hybrid"
    config: EstimatorConfig = field(default_factory=EstimatorConfig)

    # keeps pytest from collecting this class
    __test__ = False

    def __post_init__(self):
        if self.method not in TEST_METHODS:
            raise ConfigError(f"unknown CI test method '{self.method}'; expected one of {TEST_METHODS}")


class CITest(ABC):
    """Decides X independent of Y given Z; ``association`` ranks candidates in nats."""

    method: str = "abstract"

    @abstractmethod
    def test(
        self,
        x: np.ndarray,
        y: np.ndarray,
        z: Optional[np.ndarray] = None,
        *,
        test_id: Sequence[int] = (),
        statistic: Optional[float] = None,
    ) -> CITestResult:
        ...

    @abstractmethod
    def association(self, x: np.ndarray, y: np.ndarray, z: Optional[np.ndarray] = None) -> float:
        ...


def split_inputs(x, y, z):
    """Normalise (x, y, z) to n x d matrices; z may be None or have zero columns."""
    x, y = as_matrix(x), as_matrix(y)
    n = x.shape[0]
    z = np.empty((n, 0)) if z is None else as_matrix(z)
    if not (y.shape[0] == n and z.shape[0] == n):
        raise EstimatorError(f"row counts differ: x={n}, y={y.shape[0]}, z={z.shape[0]}")
    return x, y, z


def check_not_constant(*blocks: np.ndarray) -> None:
    for block in blocks:
        if block.shape[1] and np.any(np.ptp(block, axis=0) == 0):
            raise DegenerateInputError("constant column in CI test input")
