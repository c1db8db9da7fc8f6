"""Domain types shared by every module: datasets, graphs, blankets and configs.

Node indices are 0-based integers everywhere inside the package; variable
names only appear at the I/O boundary (CSV headers and edge lists).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dataclasses_json import dataclass_json
from loguru import logger

from .errors import (
    ConfigError,
    DatasetError,
    EmptyDatasetError,
    GraphError,
    NonFiniteValueError,
    RaggedRowError,
)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed sample: ``n`` rows of ``p`` continuous variables.

    Values are stored column-major (Fortran order) and read-only so that
    projections onto variable subsets are contiguous and instances can be
    shared between workers.
    """

    values: np.ndarray
    names: Tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float, order="F", copy=True)
        if values.ndim == 1:
            values = values.reshape(-1, 1, order="F")
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise EmptyDatasetError(f"dataset needs n >= 1 rows and p >= 1 columns, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise NonFiniteValueError(f"non-finite value at row {row + 1}, column {col + 1}")
        names = tuple(str(nm) for nm in self.names)
        if len(names) != values.shape[1]:
            raise DatasetError(f"{len(names)} names for {values.shape[1]} columns")
        if len(set(names)) != len(names):
            raise DatasetError(f"variable names must be unique: {names}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_array(cls, values, names: Optional[Sequence[str]] = None) -> "Dataset":
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if names is None:
            names = [f"X{j + 1}" for j in range(arr.shape[1])]
        return cls(arr, tuple(names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def columns(self, idx: Iterable[int]) -> np.ndarray:
        """n x len(idx) projection; an empty selection gives an n x 0 array."""
        idx = list(idx)
        if not idx:
            return np.empty((self.n, 0))
        return self.values[:, idx]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DatasetError(f"unknown column '{name}'; available: {', '.join(self.names)}") from None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(np.asarray(self.values), columns=list(self.names))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.names, self.values.tobytes()))


def load_dataset(path, sep: str = ",") -> Dataset:
    """Read a headed CSV of decimal reals into a :class:`Dataset`.

    The header is read as an ordinary row so that every line is held to the
    header's width and duplicate names are reported as written.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    try:
        raw = pd.read_csv(path, sep=sep, header=None, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError(f"{path}: file is empty") from None
    except pd.errors.ParserError as exc:
        raise RaggedRowError(f"{path}: ragged rows ({exc})") from None
    names = [str(nm).strip() for nm in raw.iloc[0]]
    duplicates = sorted({nm for nm in names if names.count(nm) > 1})
    if duplicates:
        raise DatasetError(f"{path}: duplicate column names: {', '.join(duplicates)}")
    frame = raw.iloc[1:]
    if frame.empty:
        raise EmptyDatasetError(f"{path}: no data rows")
    if frame.isna().any(axis=None):
        row = int(np.flatnonzero(frame.isna().any(axis=1).to_numpy())[0])
        raise RaggedRowError(f"{path}: data row {row + 1} has fewer than {len(names)} columns")
    try:
        values = frame.apply(lambda col: col.str.strip()).astype(float).to_numpy()
    except ValueError as exc:
        raise DatasetError(f"{path}: malformed cell ({exc})") from None
    try:
        data = Dataset(values, tuple(names))
    except DatasetError as exc:
        raise type(exc)(f"{path}: {exc}") from None
    logger.debug("Loaded {} (n={}, p={})", path, data.n, data.p)
    return data


def save_dataset(data: Dataset, path, sep: str = ",") -> None:
    """Write full-precision decimals so that load_dataset reproduces values bit-exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data.to_frame().to_csv(path, sep=sep, index=False, float_format="%.17g", lineterminator="\n")


@dataclass(frozen=True)
class UndirectedGraph:
    node_count: int
    edges: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.node_count < 1:
            raise GraphError(f"node_count must be positive, got {self.node_count}")
        normalised = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphError(f"self-loop on node {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise GraphError(f"edge ({i}, {j}) outside [0, {self.node_count})")
            normalised.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalised))

    @classmethod
    def empty(cls, node_count: int) -> "UndirectedGraph":
        return cls(node_count, frozenset())

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> FrozenSet[int]:
        return frozenset(b if a == i else a for a, b in self.edges if i in (a, b))

    def sorted_edges(self):
        return sorted(self.edges)

    def relabel(self, offset: int, node_count: int) -> "UndirectedGraph":
        return UndirectedGraph(node_count, frozenset((i + offset, j + offset) for i, j in self.edges))


def disjoint_union(graphs: Sequence[UndirectedGraph]) -> UndirectedGraph:
    total = sum(g.node_count for g in graphs)
    edges = set()
    offset = 0
    for g in graphs:
        edges |= g.relabel(offset, total).edges
        offset += g.node_count
    return UndirectedGraph(total, frozenset(edges))


def edge_list_lines(graph: UndirectedGraph, names: Sequence[str]):
    if len(names) != graph.node_count:
        raise GraphError(f"{len(names)} names for a graph on {graph.node_count} nodes")
    return sorted(f"{names[i]}\t{names[j]}" for i, j in graph.edges)


def write_edge_list(graph: UndirectedGraph, names: Sequence[str], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = edge_list_lines(graph, names)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_edge_list(path, names: Sequence[str]) -> UndirectedGraph:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"edge list not found: {path}")
    lookup = {name: i for i, name in enumerate(names)}
    edges = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[0] not in lookup or parts[1] not in lookup:
            raise GraphError(f"{path}:{lineno}: expected 'name<TAB>name' with known names, got {line!r}")
        edges.add((lookup[parts[0]], lookup[parts[1]]))
    return UndirectedGraph(len(names), frozenset(edges))


@dataclass(frozen=True)
class MarkovBlanket:
    """Estimated blanket of ``target``; ``members`` keeps insertion order."""

    target: int
    members: Tuple[int, ...] = ()

    def __post_init__(self):
        members = tuple(int(m) for m in self.members)
        if self.target in members:
            raise GraphError(f"target {self.target} cannot belong to its own blanket")
        if len(set(members)) != len(members):
            raise GraphError(f"duplicate blanket members: {members}")
        object.__setattr__(self, "members", members)

    def __contains__(self, node: int) -> bool:
        return node in self.members

    def __len__(self) -> int:
        return len(self.members)

    @property
    def member_set(self) -> FrozenSet[int]:
        return frozenset(self.members)


@dataclass_json
@dataclass(frozen=True)
class EstimatorConfig:
    k: int = 3
    permutations: int = 200
    alpha: float = 0.05
    shortcut_threshold: float = 0.001
    seed: int = 0
    jitter: float = 1e-10
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.permutations < 1:
            raise ConfigError(f"permutations must be >= 1, got {self.permutations}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.shortcut_threshold < 0:
            raise ConfigError(f"shortcut_threshold must be >= 0, got {self.shortcut_threshold}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.jitter < 0:
            raise ConfigError(f"jitter must be >= 0, got {self.jitter}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass_json
@dataclass(frozen=True)
class CITestResult:
    statistic: float
    p_value: float
    independent: bool
    used_shortcut: bool = False
    permutation_count: int = 0
    method: str = "permutation-mi"
