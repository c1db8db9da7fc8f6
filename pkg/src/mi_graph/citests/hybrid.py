"""Permutation test with a cheap shortcut for clearly independent pairs.

If the kNN CMI estimate is below ``shortcut_threshold`` nats and the Fisher-z
test accepts independence at the same alpha, no permutations are drawn.
Otherwise the full permutation test runs on the estimate already computed.
"""

from __future__ import annotations

from typing import Optional, Sequence

from loguru import logger

from ..citest_base import CITest, TestSpec
from ..core import CITestResult, EstimatorConfig
from ..errors import EstimatorError, InsufficientSamplesError, SingularCovarianceError
from .fisher_z import FisherZTest
from .permutation import PermutationMITest


class HybridTest(CITest):
    method = "hybrid"

    def __init__(self, config: Optional[EstimatorConfig] = None):
        self.config = config or EstimatorConfig()
        self.permutation = PermutationMITest(self.config)
        self.fisher = FisherZTest(self.config.alpha)

    def association(self, x, y, z=None) -> float:
        return self.permutation.association(x, y, z)

    def test(
        self,
        x,
        y,
        z=None,
        *,
        test_id: Sequence[int] = (),
        statistic: Optional[float] = None,
    ) -> CITestResult:
        estimate = self.permutation.association(x, y, z) if statistic is None else float(statistic)
        if estimate < self.config.shortcut_threshold:
            fisher = None
            try:
                fisher = self.fisher.test(x, y, z)
            except (EstimatorError, InsufficientSamplesError, SingularCovarianceError) as exc:
                logger.debug("shortcut unavailable: {}", exc)
            if fisher is not None and fisher.independent:
                logger.debug("shortcut id={} cmi={:.5f} fisher p={:.4f}", list(test_id), estimate, fisher.p_value)
                return CITestResult(
                    statistic=estimate,
                    p_value=fisher.p_value,
                    independent=True,
                    used_shortcut=True,
                    permutation_count=0,
                    method=self.method,
                )
        result = self.permutation.test(x, y, z, test_id=test_id, statistic=estimate)
        return CITestResult(
            statistic=result.statistic,
            p_value=result.p_value,
            independent=result.independent,
            used_shortcut=False,
            permutation_count=result.permutation_count,
            method=self.method,
        )


def hybrid_ci_test(x, y, z=None, spec: Optional[TestSpec] = None, test_id: Sequence[int] = ()) -> CITestResult:
    spec = spec or TestSpec(method="hybrid")
    return HybridTest(spec.config).test(x, y, z, test_id=test_id)
