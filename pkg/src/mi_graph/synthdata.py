"""Synthetic benchmark data with known ground-truth graphs.

* the 7-node small network, sampled ancestrally with linear or nonlinear
  structural equations and Gaussian, uniform(-1, 1) or t(2) noise;
* disjoint copies of the small network;
* Gaussian Markov random fields on Erdos-Renyi graphs, optionally cubed;
* externally generated CSV + edge-list pairs.

Every generator is a pure function of (spec, n, seed).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy.stats import norm, rankdata
from tenacity import retry, retry_if_exception_type, stop_after_attempt

from .core import Dataset, UndirectedGraph, disjoint_union, load_dataset, read_edge_list
from .errors import ConfigError, DegenerateInputError, PrecisionConstructionError, SingularSampleError

MECHANISMS = ("linear", "nonlinear")
NOISE_FAMILIES = ("gaussian", "uniform", "t2")
TOPOLOGIES = ("small", "random", "replicated-small", "external")
POST_TRANSFORMS = ("none", "cube")

SMALL_NETWORK_NODES = 7
# 0-based; X1..X7 are columns 0..6
SMALL_NETWORK_EDGES = frozenset({(0, 1), (1, 2), (2, 3), (1, 4), (2, 4), (4, 5), (2, 6), (4, 6)})

EDGE_PRECISION = 0.25
MIN_PRECISION_EIGENVALUE = 0.1
LOG_ABS_FLOOR = 1e-300
MAX_REDRAWS = 10

RngLike = Union[int, np.random.Generator, None]


def _rng(seed: RngLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def small_network_graph() -> UndirectedGraph:
    return UndirectedGraph(SMALL_NETWORK_NODES, SMALL_NETWORK_EDGES)


def sample_noise(family: str, count: int, seed: RngLike = None) -> np.ndarray:
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    rng = _rng(seed)
    if family == "gaussian":
        return rng.standard_normal(count)
    if family == "uniform":
        return rng.uniform(-1.0, 1.0, count)
    if family == "t2":
        # t with 2 degrees of freedom as N(0,1) / sqrt(chi2_2 / 2)
        return rng.standard_normal(count) / np.sqrt(rng.chisquare(2, count) / 2.0)
    raise ConfigError(f"unknown noise family '{family}'; expected one of {NOISE_FAMILIES}")


def _linear_x5(x, eps):
    return 0.35 * x[:, 1] + 0.55 * x[:, 2] + eps


def _nonlinear_x5(x, eps):
    return 0.75 * x[:, 1] * x[:, 2] + eps


def _fill_downstream_of_x5(mechanism: str, x: np.ndarray, eps: np.ndarray, rows=slice(None)) -> None:
    """X6 and X7 given X1..X5 (rows selects which samples to recompute)."""
    if mechanism == "linear":
        x[rows, 5] = 0.65 * x[rows, 4] + eps[rows, 5]
        x[rows, 6] = 0.9 * x[rows, 2] + 0.25 * x[rows, 4] + eps[rows, 6]
    else:
        x[rows, 5] = 2.5 * x[rows, 4] + eps[rows, 5]
        x[rows, 6] = 3.0 * np.cos(0.2 * x[rows, 2]) + np.log(np.abs(x[rows, 4])) + eps[rows, 6]


def propagate_small_network(mechanism: str, noise: np.ndarray) -> np.ndarray:
    """Push an n x 7 noise matrix through the structural equations of the small network."""
    if mechanism not in MECHANISMS:
        raise ConfigError(f"unknown mechanism '{mechanism}'; expected one of {MECHANISMS}")
    eps = np.asarray(noise, dtype=float)
    if eps.ndim != 2 or eps.shape[1] != SMALL_NETWORK_NODES:
        raise ConfigError(f"noise must be n x {SMALL_NETWORK_NODES}, got {eps.shape}")
    x = np.empty_like(eps)
    x[:, 0] = eps[:, 0]
    if mechanism == "linear":
        x[:, 1] = 0.2 * x[:, 0] + eps[:, 1]
        x[:, 2] = 0.5 * x[:, 1] + eps[:, 2]
        x[:, 3] = 0.25 * x[:, 2] + eps[:, 3]
        x[:, 4] = _linear_x5(x, eps[:, 4])
    else:
        x[:, 1] = 2.0 * np.cos(x[:, 0]) + eps[:, 1]
        x[:, 2] = 2.0 * np.sin(np.pi * x[:, 1]) + eps[:, 2]
        x[:, 3] = 3.0 * np.cos(x[:, 2]) + eps[:, 3]
        x[:, 4] = _nonlinear_x5(x, eps[:, 4])
    with np.errstate(divide="ignore"):
        _fill_downstream_of_x5(mechanism, x, eps)
    return x


def _draw_noise_matrix(rng: np.random.Generator, noise: str, n: int) -> np.ndarray:
    return np.column_stack([sample_noise(noise, n, rng) for _ in range(SMALL_NETWORK_NODES)])


@retry(
    retry=retry_if_exception_type(SingularSampleError),
    stop=stop_after_attempt(MAX_REDRAWS),
    reraise=True,
)
def _redraw_singular_rows(rng: np.random.Generator, noise: str, x: np.ndarray, eps: np.ndarray) -> None:
    """Re-draw eps5 for samples whose |X5| underflows the log in the X7 equation."""
    rows = np.flatnonzero(np.abs(x[:, 4]) < LOG_ABS_FLOOR)
    if rows.size == 0:
        return
    logger.warning("re-drawing noise for {} sample(s) with |X5| < {}", rows.size, LOG_ABS_FLOOR)
    eps[rows, 4] = sample_noise(noise, rows.size, rng)
    x[rows, 4] = _nonlinear_x5(x[rows], eps[rows, 4])
    _fill_downstream_of_x5("nonlinear", x, eps, rows)
    if np.any(np.abs(x[rows, 4]) < LOG_ABS_FLOOR):
        raise SingularSampleError(f"|X5| still below {LOG_ABS_FLOOR} after re-draw")


def _small_network_values(mechanism: str, noise: str, n: int, rng: np.random.Generator) -> np.ndarray:
    eps = _draw_noise_matrix(rng, noise, n)
    x = propagate_small_network(mechanism, eps)
    if mechanism == "nonlinear":
        _redraw_singular_rows(rng, noise, x, eps)
    return x


def _small_names(prefix: str = "") -> Tuple[str, ...]:
    return tuple(f"{prefix}X{j + 1}" for j in range(SMALL_NETWORK_NODES))


def generate_small_network(
    mechanism: str, noise: str, n: int, seed: RngLike = None
) -> Tuple[Dataset, UndirectedGraph]:
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    values = _small_network_values(mechanism, noise, n, _rng(seed))
    return Dataset(values, _small_names()), small_network_graph()


def generate_replicated_network(
    copies: int, mechanism: str, noise: str, n: int, seed: RngLike = None
) -> Tuple[Dataset, UndirectedGraph]:
    """Independent copies of the small network placed side by side as disconnected components."""
    if copies < 1:
        raise ConfigError(f"copies must be >= 1, got {copies}")
    if copies == 1:
        return generate_small_network(mechanism, noise, n, seed)
    rng = _rng(seed)
    blocks, names = [], []
    for c in range(copies):
        blocks.append(_small_network_values(mechanism, noise, n, rng))
        names.extend(_small_names(prefix=f"C{c + 1}_"))
    graph = disjoint_union([small_network_graph()] * copies)
    return Dataset(np.hstack(blocks), tuple(names)), graph


def random_graph(p: int, edge_prob: Optional[float] = None, seed: RngLike = None) -> UndirectedGraph:
    """Erdos-Renyi graph; each pair is an edge with probability ``edge_prob`` (default 3/p)."""
    if p < 2:
        raise ConfigError(f"p must be >= 2, got {p}")
    prob = 3.0 / p if edge_prob is None else edge_prob
    if not 0.0 < prob <= 1.0:
        raise ConfigError(f"edge_prob must lie in (0, 1], got {prob}")
    rng = _rng(seed)
    iu, ju = np.triu_indices(p, k=1)
    keep = rng.random(iu.size) < prob
    return UndirectedGraph(p, frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))


def build_precision_matrix(
    graph: UndirectedGraph,
    rho: float = EDGE_PRECISION,
    min_eigenvalue: float = MIN_PRECISION_EIGENVALUE,
) -> np.ndarray:
    """Positive definite precision whose zero pattern is exactly the graph's non-edges.

    Unit diagonal and ``rho`` on edges; if the smallest eigenvalue is below
    ``min_eigenvalue`` a multiple of the identity is added, then the matrix is
    rescaled back to unit diagonal.
    """
    p = graph.node_count
    theta = np.eye(p)
    for i, j in graph.edges:
        theta[i, j] = theta[j, i] = rho
    lam = np.linalg.eigvalsh(theta).min()
    if lam < min_eigenvalue:
        theta += (min_eigenvalue - lam) * np.eye(p)
    scale = 1.0 / np.sqrt(np.diag(theta))
    theta = theta * np.outer(scale, scale)
    try:
        np.linalg.cholesky(theta)
    except np.linalg.LinAlgError as exc:
        raise PrecisionConstructionError(f"precision matrix is not positive definite: {exc}") from None
    return theta


def generate_random_network(
    p: int,
    edge_prob: Optional[float] = None,
    n: int = 1000,
    seed: RngLike = None,
    post_transform: str = "none",
) -> Tuple[Dataset, UndirectedGraph]:
    if post_transform not in POST_TRANSFORMS:
        raise ConfigError(f"unknown post_transform '{post_transform}'; expected one of {POST_TRANSFORMS}")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = _rng(seed)
    graph = random_graph(p, edge_prob, rng)
    theta = build_precision_matrix(graph)
    cov = np.linalg.inv(theta)
    cov = (cov + cov.T) / 2.0
    values = rng.multivariate_normal(np.zeros(p), cov, size=n, method="cholesky")
    if post_transform == "cube":
        values = values ** 3
    names = tuple(f"X{j + 1}" for j in range(p))
    return Dataset(values, names), graph


def shrinkage_delta(n: int) -> float:
    """Winsorisation level 1 / (4 n^(1/4) sqrt(pi log n)) of the nonparanormal ECDF."""
    return 1.0 / (4.0 * n ** 0.25 * np.sqrt(np.pi * np.log(n)))


def ecdf_transform(data: Dataset) -> Dataset:
    """Nonparanormal transform: winsorised ECDF of each column mapped through the normal quantile."""
    if data.n < 2:
        raise ConfigError(f"ecdf_transform needs n >= 2, got {data.n}")
    values = np.asarray(data.values)
    if np.any(np.ptp(values, axis=0) == 0):
        constant = [data.names[j] for j in np.flatnonzero(np.ptp(values, axis=0) == 0)]
        raise DegenerateInputError(f"constant column(s) cannot be rank-transformed: {constant}")
    delta = shrinkage_delta(data.n)
    u = rankdata(values, axis=0) / data.n
    u = np.clip(u, delta, 1.0 - delta)
    return Dataset(norm.ppf(u), data.names)


@dataclass(frozen=True)
class GeneratorSpec:
    topology: str = "small"
    mechanism: str = "nonlinear"
    noise: str = "gaussian"
    post_transform: str = "none"
    p: int = 10
    edge_prob: Optional[float] = None
    copies: int = 3
    # topology "external": CSV whose sibling <stem>.edges.txt holds the true edges
    external_path: Optional[str] = None

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology '{self.topology}'; expected one of {TOPOLOGIES}")
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"unknown mechanism '{self.mechanism}'; expected one of {MECHANISMS}")
        if self.noise not in NOISE_FAMILIES:
            raise ConfigError(f"unknown noise '{self.noise}'; expected one of {NOISE_FAMILIES}")
        if self.post_transform not in POST_TRANSFORMS:
            raise ConfigError(f"unknown post_transform '{self.post_transform}'")
        if self.topology == "external" and not self.external_path:
            raise ConfigError("topology 'external' requires external_path")

    def generate(self, n: int, seed: RngLike = None) -> Tuple[Dataset, UndirectedGraph]:
        if self.topology == "small":
            data, graph = generate_small_network(self.mechanism, self.noise, n, seed)
        elif self.topology == "replicated-small":
            data, graph = generate_replicated_network(self.copies, self.mechanism, self.noise, n, seed)
        elif self.topology == "random":
            return generate_random_network(self.p, self.edge_prob, n, seed, self.post_transform)
        else:
            return load_external(self.external_path)
        if self.post_transform == "cube":
            data = Dataset(np.asarray(data.values) ** 3, data.names)
        return data, graph


def truth_path_for(data_path) -> Path:
    path = Path(data_path)
    return path.with_name(path.stem + ".edges.txt")


def load_external(data_path) -> Tuple[Dataset, UndirectedGraph]:
    data = load_dataset(data_path)
    return data, read_edge_list(truth_path_for(data_path), data.names)
