"""Gaussian baseline: Fisher z-transformed sample partial correlation."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from scipy.stats import norm

from ..citest_base import CITest, check_not_constant, split_inputs
from ..core import CITestResult
from ..errors import EstimatorError, InsufficientSamplesError, SingularCovarianceError

EIGEN_TOLERANCE = 1e-12
# |rho| is kept below 1 so the z-transform stays finite
RHO_CLIP = 1.0 - 1e-12


def partial_correlation(x, y, z=None) -> float:
    """rho(x, y | z) read off the inverse correlation matrix of (x, y, z)."""
    x, y, z = split_inputs(x, y, z)
    if x.shape[1] != 1 or y.shape[1] != 1:
        raise EstimatorError(f"x and y must be single columns, got widths {x.shape[1]} and {y.shape[1]}")
    check_not_constant(x, y, z)
    block = np.hstack([x, y, z])
    corr = np.atleast_2d(np.corrcoef(block, rowvar=False))
    if z.shape[1]:
        cond_eig = np.linalg.eigvalsh(corr[2:, 2:]).min()
        if cond_eig < EIGEN_TOLERANCE:
            raise SingularCovarianceError(
                f"conditioning set covariance is singular (smallest eigenvalue {cond_eig:.3g})"
            )
    if np.linalg.eigvalsh(corr).min() < EIGEN_TOLERANCE:
        logger.warning("near-singular correlation matrix; using the pseudo-inverse")
        omega = np.linalg.pinv(corr)
    else:
        omega = np.linalg.inv(corr)
    denom = math.sqrt(omega[0, 0] * omega[1, 1])
    if denom == 0:
        return 0.0
    return float(-omega[0, 1] / denom)


def gaussian_cmi(rho: float) -> float:
    """CMI of jointly Gaussian variables with partial correlation rho, in nats."""
    rho = float(np.clip(rho, -RHO_CLIP, RHO_CLIP))
    return -0.5 * math.log1p(-rho * rho)


def fisher_z_ci_test(x, y, z=None, alpha: float = 0.05) -> CITestResult:
    x, y, z = split_inputs(x, y, z)
    n, d_z = x.shape[0], z.shape[1]
    if n - d_z - 3 <= 0:
        raise InsufficientSamplesError(f"Fisher z needs n > |z| + 3 (n={n}, |z|={d_z})")
    rho = partial_correlation(x, y, z)
    stat = math.sqrt(n - d_z - 3) * math.atanh(float(np.clip(rho, -RHO_CLIP, RHO_CLIP)))
    p_value = float(2.0 * norm.sf(abs(stat)))
    return CITestResult(
        statistic=stat,
        p_value=p_value,
        independent=p_value >= alpha,
        used_shortcut=False,
        permutation_count=0,
        method="fisher-z",
    )


class FisherZTest(CITest):
    method = "fisher-z"

    def __init__(self, alpha: float = 0.05):
        self.alpha = alpha

    def association(self, x, y, z=None) -> float:
        return gaussian_cmi(partial_correlation(x, y, z))

    def test(
        self,
        x,
        y,
        z=None,
        *,
        test_id: Sequence[int] = (),
        statistic: Optional[float] = None,
    ) -> CITestResult:
        result = fisher_z_ci_test(x, y, z, self.alpha)
        logger.debug("fisher-z test id={} z={:.3f} p={:.4f}", list(test_id), result.statistic, result.p_value)
        return result
