import numpy as np
import pytest

from src.mi_graph.core import (
    Dataset,
    EstimatorConfig,
    MarkovBlanket,
    UndirectedGraph,
    disjoint_union,
    edge_list_lines,
    load_dataset,
    read_edge_list,
    save_dataset,
    write_edge_list,
)
from src.mi_graph.errors import (
    ConfigError,
    DatasetError,
    EmptyDatasetError,
    GraphError,
    NonFiniteValueError,
    RaggedRowError,
)


def test_load_dataset_parses_headed_csv(small_csv):
    data = load_dataset(small_csv)
    assert (data.n, data.p) == (3, 2)
    assert data.names == ("a", "b")
    assert data.column(1).tolist() == [2.0, 4.0, 6.0]


def test_load_dataset_rejects_nan_cell(tmp_path):
    path = tmp_path / "nan.csv"
    path.write_text("a,b\n1.0,NaN\n2.0,3.0\n", encoding="utf-8")
    with pytest.raises(NonFiniteValueError):
        load_dataset(path)


def test_load_dataset_rejects_ragged_rows(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("a,b,c\n1,2,3\n1,2,3,4\n", encoding="utf-8")
    with pytest.raises(RaggedRowError):
        load_dataset(path)


def test_load_dataset_rejects_long_first_data_row(tmp_path):
    path = tmp_path / "ragged_first.csv"
    path.write_text("a,b,c\n1,2,3,4\n5,6,7,8\n", encoding="utf-8")
    with pytest.raises(RaggedRowError):
        load_dataset(path)


def test_load_dataset_rejects_duplicate_header(tmp_path):
    path = tmp_path / "dup.csv"
    path.write_text("a,a\n1,2\n3,4\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="duplicate column names: a"):
        load_dataset(path)


def test_load_dataset_rejects_short_rows(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("a,b,c\n1,2,3\n1,2\n", encoding="utf-8")
    with pytest.raises(RaggedRowError):
        load_dataset(path)


def test_load_dataset_empty_and_header_only(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    header = tmp_path / "header.csv"
    header.write_text("a,b\n", encoding="utf-8")
    with pytest.raises(EmptyDatasetError):
        load_dataset(empty)
    with pytest.raises(EmptyDatasetError):
        load_dataset(header)


def test_load_dataset_malformed_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1.0,abc\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_load_dataset_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(FileNotFoundError, match="nope.csv"):
        load_dataset(missing)


def test_save_then_load_is_bit_exact(tmp_path, rng):
    data = Dataset.from_array(rng.standard_normal((50, 3)) * 1e3, ["x", "y", "z"])
    path = tmp_path / "out.csv"
    save_dataset(data, path)
    assert load_dataset(path) == data


def test_dataset_is_read_only_and_validates_names():
    data = Dataset.from_array(np.arange(6.0).reshape(3, 2))
    assert data.names == ("X1", "X2")
    with pytest.raises(ValueError):
        data.values[0, 0] = 1.0
    with pytest.raises(DatasetError):
        Dataset(np.zeros((2, 2)), ("a", "a"))
    with pytest.raises(DatasetError):
        Dataset(np.zeros((2, 2)), ("a",))


def test_dataset_columns_empty_selection():
    data = Dataset.from_array(np.arange(6.0).reshape(3, 2))
    assert data.columns([]).shape == (3, 0)
    assert data.columns([1, 0])[:, 0].tolist() == [1.0, 3.0, 5.0]
    with pytest.raises(DatasetError, match="unknown column"):
        data.index_of("missing")


def test_graph_normalises_edges():
    g = UndirectedGraph(3, frozenset({(2, 1), (0, 1)}))
    assert g.sorted_edges() == [(0, 1), (1, 2)]
    assert g == UndirectedGraph(3, frozenset({(1, 2), (1, 0)}))
    assert g.has_edge(2, 1)
    assert g.neighbors(1) == frozenset({0, 2})


def test_graph_rejects_self_loops_and_out_of_range():
    with pytest.raises(GraphError):
        UndirectedGraph(3, frozenset({(1, 1)}))
    with pytest.raises(GraphError):
        UndirectedGraph(3, frozenset({(0, 3)}))


def test_disjoint_union_offsets_nodes():
    g = UndirectedGraph(2, frozenset({(0, 1)}))
    union = disjoint_union([g, g, g])
    assert union.node_count == 6
    assert union.sorted_edges() == [(0, 1), (2, 3), (4, 5)]


def test_edge_list_round_trip(tmp_path):
    names = ["b", "a", "c"]
    g = UndirectedGraph(3, frozenset({(0, 1), (1, 2)}))
    assert edge_list_lines(g, names) == ["a\tc", "b\ta"]
    path = tmp_path / "g.txt"
    write_edge_list(g, names, path)
    assert read_edge_list(path, names) == g


def test_read_edge_list_unknown_name(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("a\tq\n", encoding="utf-8")
    with pytest.raises(GraphError):
        read_edge_list(path, ["a", "b"])


def test_markov_blanket_invariants():
    mb = MarkovBlanket(0, (3, 1))
    assert 3 in mb and 2 not in mb
    assert len(mb) == 2
    with pytest.raises(GraphError):
        MarkovBlanket(1, (1,))
    with pytest.raises(GraphError):
        MarkovBlanket(0, (2, 2))


def test_estimator_config_defaults_and_validation():
    cfg = EstimatorConfig()
    assert (cfg.k, cfg.permutations, cfg.alpha, cfg.shortcut_threshold) == (3, 200, 0.05, 0.001)
    for bad in ({"k": 0}, {"permutations": 0}, {"alpha": 1.0}, {"workers": 0}, {"jitter": -1.0}):
        with pytest.raises(ConfigError):
            EstimatorConfig(**bad)
