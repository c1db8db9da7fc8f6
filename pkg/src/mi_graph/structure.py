"""Markov network recovery: IAMB blanket search per node plus AND-rule assembly.

Grow phase: rank every remaining candidate by its association with the target
given the current blanket, test only the best one, add it if dependent and
stop at the first independent verdict. Shrink phase: walk the blanket in
insertion order and drop members independent of the target given the rest of
the current blanket.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from loguru import logger

from .citest_base import CITest, TestSpec
from .citests import build_test
from .core import Dataset, MarkovBlanket, UndirectedGraph
from .errors import ConfigError

GROW, SHRINK = 0, 1


@dataclass(frozen=True)
class LearnerConfig:
    test: TestSpec = field(default_factory=TestSpec)
    max_blanket_size: Optional[int] = None
    parallel_nodes: bool = False
    # Injected test (e.g. a test double); overrides ``test`` when set.
    ci_test: Optional[CITest] = field(default=None, compare=False)

    def __post_init__(self):
        if self.max_blanket_size is not None and self.max_blanket_size < 1:
            raise ConfigError(f"max_blanket_size must be >= 1, got {self.max_blanket_size}")

    @property
    def workers(self) -> int:
        return self.test.config.workers

    def resolve_test(self, workers: Optional[int] = None) -> CITest:
        if self.ci_test is not None:
            return self.ci_test
        spec = self.test
        if workers is not None and workers != spec.config.workers:
            spec = replace(spec, config=replace(spec.config, workers=workers))
        return build_test(spec)


@dataclass
class LearnResult:
    graph: UndirectedGraph
    blankets: List[MarkovBlanket]
    tests_performed: int = 0


def _check_problem(data: Dataset, cfg: LearnerConfig) -> None:
    if data.p < 2:
        raise ConfigError(f"structure learning needs p >= 2 variables, got {data.p}")
    if cfg.max_blanket_size is not None and cfg.max_blanket_size >= data.p:
        raise ConfigError(f"max_blanket_size must be < p ({cfg.max_blanket_size} >= {data.p})")


def _search_blanket(data: Dataset, target: int, test: CITest, cap: Optional[int]) -> Tuple[MarkovBlanket, int]:
    x = data.columns([target])
    blanket: List[int] = []
    tests = 0

    while cap is None or len(blanket) < cap:
        candidates = [c for c in range(data.p) if c != target and c not in blanket]
        if not candidates:
            break
        z = data.columns(blanket)
        best, best_score = None, None
        for c in candidates:
            score = test.association(x, data.columns([c]), z)
            if best_score is None or score > best_score:
                best, best_score = c, score
        result = test.test(
            x, data.columns([best]), z, test_id=(target, best, GROW, *blanket), statistic=best_score
        )
        tests += 1
        if result.independent:
            logger.debug("node {}: grow stops at {} (p={:.4f})", target, best, result.p_value)
            break
        blanket.append(best)
        logger.debug("node {}: added {} (assoc={:.4f}, p={:.4f})", target, best, best_score, result.p_value)

    for j in list(blanket):
        rest = [m for m in blanket if m != j]
        result = test.test(x, data.columns([j]), data.columns(rest), test_id=(target, j, SHRINK, *rest))
        tests += 1
        if result.independent:
            blanket.remove(j)
            logger.debug("node {}: removed {} (p={:.4f})", target, j, result.p_value)

    return MarkovBlanket(target, tuple(blanket)), tests


def iamb_blanket(data: Dataset, target: int, cfg: Optional[LearnerConfig] = None) -> MarkovBlanket:
    cfg = cfg or LearnerConfig()
    _check_problem(data, cfg)
    if not 0 <= target < data.p:
        raise ConfigError(f"target {target} outside [0, {data.p})")
    blanket, _ = _search_blanket(data, target, cfg.resolve_test(), cfg.max_blanket_size)
    return blanket


def and_rule(blankets: Sequence[MarkovBlanket], node_count: int) -> UndirectedGraph:
    """Edge (i, j) iff i is in the blanket of j and j is in the blanket of i."""
    by_target = {b.target: b.member_set for b in blankets}
    edges = set()
    for i, members in by_target.items():
        for j in members:
            if i < j and i in by_target.get(j, frozenset()):
                edges.add((i, j))
    return UndirectedGraph(node_count, frozenset(edges))


def learn_structure(data: Dataset, cfg: Optional[LearnerConfig] = None) -> LearnResult:
    cfg = cfg or LearnerConfig()
    _check_problem(data, cfg)
    if cfg.parallel_nodes and cfg.workers > 1:
        test = cfg.resolve_test(workers=1)
        searches = Parallel(n_jobs=cfg.workers, prefer="threads")(
            delayed(_search_blanket)(data, t, test, cfg.max_blanket_size) for t in range(data.p)
        )
    else:
        test = cfg.resolve_test()
        searches = [_search_blanket(data, t, test, cfg.max_blanket_size) for t in range(data.p)]
    blankets = [b for b, _ in searches]
    tests = sum(t for _, t in searches)
    graph = and_rule(blankets, data.p)
    logger.info("Learned graph: p={} n={} edges={} tests={}", data.p, data.n, graph.edge_count, tests)
    return LearnResult(graph=graph, blankets=blankets, tests_performed=tests)


def learn_graph(data: Dataset, cfg: Optional[LearnerConfig] = None) -> UndirectedGraph:
    return learn_structure(data, cfg).graph
