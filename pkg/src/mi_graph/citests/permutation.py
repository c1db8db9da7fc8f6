"""Permutation test of conditional independence with the kNN CMI statistic.

Only y is shuffled, so the (X,Z) and Z indexes of :class:`KSGEstimator` are
built once per test. Permutation ``i`` of a test draws from
``default_rng([seed, *test_id, i])``: results do not depend on worker count.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from ..citest_base import CITest, TestSpec, check_not_constant, split_inputs
from ..core import CITestResult, EstimatorConfig
from ..errors import InsufficientSamplesError
from ..estimators import KSGEstimator, add_jitter


def p_value_from_count(exceed: int, permutations: int) -> float:
    return (exceed + 1) / (permutations + 1)


def rejects(p_value: float, alpha: float) -> bool:
    """Independence is rejected only when p < alpha; p == alpha accepts."""
    return p_value < alpha


class PermutationMITest(CITest):
    method = "permutation-mi"

    def __init__(self, config: Optional[EstimatorConfig] = None):
        self.config = config or EstimatorConfig()

    def _prepare(self, x, y, z):
        x, y, z = split_inputs(x, y, z)
        if x.shape[0] <= self.config.k:
            raise InsufficientSamplesError(f"need n > k (n={x.shape[0]}, k={self.config.k})")
        cfg = self.config
        x = add_jitter(x, cfg.jitter, cfg.seed)
        y = add_jitter(y, cfg.jitter, cfg.seed)
        z = add_jitter(z, cfg.jitter, cfg.seed)
        check_not_constant(x, y, z)
        return x, y, z

    def association(self, x, y, z=None) -> float:
        x, y, z = self._prepare(x, y, z)
        return KSGEstimator(x, z, self.config.k).estimate(y)

    def test(
        self,
        x,
        y,
        z=None,
        *,
        test_id: Sequence[int] = (),
        statistic: Optional[float] = None,
    ) -> CITestResult:
        cfg = self.config
        x, y, z = self._prepare(x, y, z)
        estimator = KSGEstimator(x, z, cfg.k)
        observed = estimator.estimate(y) if statistic is None else float(statistic)
        key = [int(v) for v in test_id]

        def permuted(i: int) -> float:
            rng = np.random.default_rng([cfg.seed, *key, i])
            return estimator.estimate(y[rng.permutation(y.shape[0])])

        null = Parallel(n_jobs=cfg.workers, prefer="threads")(
            delayed(permuted)(i) for i in range(cfg.permutations)
        )
        exceed = int(np.count_nonzero(np.asarray(null) >= observed))
        p_value = p_value_from_count(exceed, cfg.permutations)
        independent = not rejects(p_value, cfg.alpha)
        logger.debug(
            "permutation test id={} cmi={:.5f} K={} p={:.4f} -> {}",
            key, observed, exceed, p_value, "independent" if independent else "dependent",
        )
        return CITestResult(
            statistic=observed,
            p_value=p_value,
            independent=independent,
            used_shortcut=False,
            permutation_count=cfg.permutations,
            method=self.method,
        )


def permutation_ci_test(x, y, z=None, spec: Optional[TestSpec] = None, test_id: Sequence[int] = ()) -> CITestResult:
    spec = spec or TestSpec(method="permutation-mi")
    return PermutationMITest(spec.config).test(x, y, z, test_id=test_id)
