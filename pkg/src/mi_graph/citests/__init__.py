from ..citest_base import CITest, TestSpec
from .fisher_z import FisherZTest, fisher_z_ci_test
from .hybrid import HybridTest, hybrid_ci_test
from .permutation import PermutationMITest, permutation_ci_test


def build_test(spec: TestSpec) -> CITest:
    if spec.method == "permutation-mi":
        return PermutationMITest(spec.config)
    if spec.method == "fisher-z":
        return FisherZTest(spec.config.alpha)
    if spec.method == "hybrid":
        return HybridTest(spec.config)
    raise ValueError(f"Unknown CI test {spec.method}")


__all__ = [
    "CITest",
    "TestSpec",
    "FisherZTest",
    "HybridTest",
    "PermutationMITest",
    "build_test",
    "fisher_z_ci_test",
    "hybrid_ci_test",
    "permutation_ci_test",
]
