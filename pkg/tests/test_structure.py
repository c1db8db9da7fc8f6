import itertools
from collections import deque

import numpy as np
import pytest

from src.mi_graph.citest_base import CITest, TestSpec
from src.mi_graph.core import CITestResult, Dataset, EstimatorConfig, MarkovBlanket, UndirectedGraph
from src.mi_graph.errors import ConfigError
from src.mi_graph.structure import GROW, SHRINK, LearnerConfig, and_rule, iamb_blanket, learn_graph, learn_structure
from src.mi_graph.synthdata import generate_small_network

TAG = 1000.0


def tagged_dataset(p: int, n: int = 5) -> Dataset:
    """Column j starts with j * TAG so a test double can recover node ids from arrays."""
    values = np.arange(p)[None, :] * TAG + np.arange(n)[:, None]
    return Dataset.from_array(values)


def _nodes(block) -> list:
    block = np.asarray(block).reshape(len(block), -1) if block is not None else np.empty((0, 0))
    return [int(round(v / TAG)) for v in block[0]] if block.size else []


class SeparationOracle(CITest):
    """Answers CI queries by graph separation in a known undirected graph."""

    method = "oracle"

    def __init__(self, graph: UndirectedGraph):
        self.graph = graph
        self.calls = []

    def separated(self, a: int, b: int, given) -> bool:
        blocked = set(given)
        seen, queue = {a}, deque([a])
        while queue:
            node = queue.popleft()
            for nb in self.graph.neighbors(node):
                if nb == b:
                    return False
                if nb not in seen and nb not in blocked:
                    seen.add(nb)
                    queue.append(nb)
        return True

    def association(self, x, y, z=None) -> float:
        (a,), (b,) = _nodes(x), _nodes(y)
        return 0.0 if self.separated(a, b, _nodes(z)) else 1.0

    def test(self, x, y, z=None, *, test_id=(), statistic=None) -> CITestResult:
        (a,), (b,) = _nodes(x), _nodes(y)
        independent = self.separated(a, b, _nodes(z))
        self.calls.append(tuple(test_id))
        return CITestResult(
            statistic=0.0 if independent else 1.0,
            p_value=1.0 if independent else 0.0,
            independent=independent,
            method=self.method,
        )


def oracle_config(graph: UndirectedGraph, **kwargs) -> LearnerConfig:
    return LearnerConfig(ci_test=SeparationOracle(graph), **kwargs)


def all_graphs(p: int):
    pairs = list(itertools.combinations(range(p), 2))
    for mask in range(1 << len(pairs)):
        yield UndirectedGraph(p, frozenset(e for bit, e in enumerate(pairs) if mask >> bit & 1))


def test_and_rule_requires_agreement():
    assert and_rule([MarkovBlanket(0, (1,)), MarkovBlanket(1, ())], 2).edge_count == 0
    assert and_rule([MarkovBlanket(0, (1,)), MarkovBlanket(1, (0,))], 2).sorted_edges() == [(0, 1)]


def test_oracle_recovers_every_graph_on_four_nodes():
    data = tagged_dataset(4)
    for truth in all_graphs(4):
        assert learn_graph(data, oracle_config(truth)) == truth


@pytest.mark.parametrize("p", [5, 6])
def test_oracle_recovers_random_graphs(p):
    rng = np.random.default_rng(p)
    data = tagged_dataset(p)
    pairs = list(itertools.combinations(range(p), 2))
    for _ in range(40):
        keep = rng.random(len(pairs)) < 0.4
        truth = UndirectedGraph(p, frozenset(e for e, k in zip(pairs, keep) if k))
        result = learn_structure(data, oracle_config(truth))
        assert result.graph == truth
        for blanket in result.blankets:
            assert blanket.member_set == truth.neighbors(blanket.target)


def test_grow_tests_only_the_best_candidate_and_tags_test_ids():
    # chain 0 - 1 - 2 - 3
    truth = UndirectedGraph(4, frozenset({(0, 1), (1, 2), (2, 3)}))
    oracle = SeparationOracle(truth)
    blanket = iamb_blanket(tagged_dataset(4), 0, LearnerConfig(ci_test=oracle))
    assert blanket.members == (1,)
    # grow: add 1, then the best remaining candidate (2) is independent given {1}; shrink: keep 1
    assert oracle.calls == [(0, 1, GROW), (0, 2, GROW, 1), (0, 1, SHRINK)]


def test_shrink_removes_spurious_members():
    # star 0 - 1, 0 - 2; node 3 hangs off 1. From 3, node 0 is dependent until 1 is in the blanket.
    truth = UndirectedGraph(4, frozenset({(0, 1), (0, 2), (1, 3)}))
    blanket = iamb_blanket(tagged_dataset(4), 3, oracle_config(truth))
    assert blanket.member_set == {1}


def test_max_blanket_size_caps_growth():
    truth = UndirectedGraph(4, frozenset({(0, 1), (0, 2), (0, 3)}))
    blanket = iamb_blanket(tagged_dataset(4), 0, oracle_config(truth, max_blanket_size=2))
    assert len(blanket) == 2


def test_learn_structure_counts_tests():
    truth = UndirectedGraph(3, frozenset({(0, 1)}))
    oracle = SeparationOracle(truth)
    result = learn_structure(tagged_dataset(3), LearnerConfig(ci_test=oracle))
    assert result.tests_performed == len(oracle.calls)


def test_problem_validation():
    with pytest.raises(ConfigError):
        learn_structure(tagged_dataset(1))
    with pytest.raises(ConfigError):
        learn_structure(tagged_dataset(3), LearnerConfig(max_blanket_size=3))
    with pytest.raises(ConfigError):
        iamb_blanket(tagged_dataset(3), 5)


def test_chain_blanket_with_knn_test(rng):
    x1 = rng.standard_normal(1000)
    x2 = 0.8 * x1 + rng.standard_normal(1000)
    x3 = 0.8 * x2 + rng.standard_normal(1000)
    data = Dataset.from_array(np.column_stack([x1, x2, x3]))
    cfg = LearnerConfig(test=TestSpec(method="hybrid", config=EstimatorConfig(permutations=100)))
    assert iamb_blanket(data, 1, cfg).member_set == {0, 2}


def test_two_independent_variables_have_empty_blankets(rng):
    data = Dataset.from_array(rng.standard_normal((300, 2)))
    cfg = LearnerConfig(test=TestSpec(method="permutation-mi", config=EstimatorConfig(permutations=50, alpha=0.01)))
    result = learn_structure(data, cfg)
    assert result.graph.edge_count == 0
    assert all(len(b) == 0 for b in result.blankets)


def test_parallel_nodes_match_sequential():
    data, _ = generate_small_network("linear", "gaussian", 500, seed=3)
    spec = TestSpec(method="fisher-z", config=EstimatorConfig(workers=3))
    sequential = learn_structure(data, LearnerConfig(test=spec))
    parallel = learn_structure(data, LearnerConfig(test=spec, parallel_nodes=True))
    assert parallel.graph == sequential.graph
    assert parallel.tests_performed == sequential.tests_performed


def test_fisher_learner_on_linear_small_network():
    data, truth = generate_small_network("linear", "gaussian", 2000, seed=1)
    learned = learn_graph(data, LearnerConfig(test=TestSpec(method="fisher-z")))
    assert len(learned.edges ^ truth.edges) <= 1


@pytest.mark.slow
def test_knn_blanket_of_product_node_in_nonlinear_small_network():
    data, truth = generate_small_network("nonlinear", "gaussian", 2000, seed=5)
    x5 = data.index_of("X5")
    cfg = LearnerConfig(test=TestSpec(method="hybrid", config=EstimatorConfig(permutations=100, workers=4)))
    blanket = iamb_blanket(data, x5, cfg)
    assert blanket.member_set >= truth.neighbors(x5)
    assert {data.names[j] for j in truth.neighbors(x5)} == {"X2", "X3", "X6", "X7"}
