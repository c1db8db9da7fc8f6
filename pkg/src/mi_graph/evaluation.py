"""Scoring learned graphs and running seeded benchmark sweeps.

Every (n, rep) cell generates one dataset from a seed derived from the run
seed, and every method is scored on that same dataset. Results are written as
a flat CSV plus a JSON summary; neither contains timing or worker information,
so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dataclasses_json import dataclass_json
from joblib import Parallel, delayed
from loguru import logger

from .core import UndirectedGraph, write_edge_list
from .errors import ConfigError, GraphError, MiGraphError
from .structure import LearnerConfig, learn_structure
from .synthdata import SMALL_NETWORK_NODES, GeneratorSpec, ecdf_transform, load_external

RESULT_COLUMNS = [
    "method", "topology", "mechanism", "noise", "post_transform", "ecdf",
    "p", "copies", "edge_prob", "n", "rep", "hamming", "error",
]


def hamming_distance(estimated: UndirectedGraph, truth: UndirectedGraph) -> int:
    """False positive plus false negative edges."""
    if estimated.node_count != truth.node_count:
        raise GraphError(f"node counts differ: {estimated.node_count} vs {truth.node_count}")
    return len(estimated.edges ^ truth.edges)


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass_json
@dataclass
class BenchmarkResult:
    method: str
    topology: str
    mechanism: str
    noise: str
    post_transform: str
    ecdf: bool
    p: Optional[int]
    copies: Optional[int]
    edge_prob: Optional[float]
    n: int
    repetitions: int
    distances: List[int] = field(default_factory=list)
    mean: Optional[float] = None
    sem: float = 0.0
    sem_defined: bool = False
    failures: int = 0


@dataclass
class BenchmarkRun:
    results: List[BenchmarkResult]
    cells: pd.DataFrame

    def write(self, results_csv, summary_json) -> None:
        results_csv, summary_json = Path(results_csv), Path(summary_json)
        for path in (results_csv, summary_json):
            path.parent.mkdir(parents=True, exist_ok=True)
        self.cells.to_csv(results_csv, index=False, lineterminator="\n")
        payload = [r.to_dict() for r in self.results]
        summary_json.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("Wrote {} and {}", results_csv, summary_json)


def generator_fields(spec: GeneratorSpec) -> dict:
    """Topology parameters that distinguish one benchmark setting from another.

    ``p`` is the nominal variable count (None for external data until it is
    loaded); ``copies`` and ``edge_prob`` are only set for the topologies that
    use them, with ``edge_prob`` resolved to its 3/p default.
    """
    p: Optional[int] = None
    copies: Optional[int] = None
    edge_prob: Optional[float] = None
    if spec.topology == "small":
        p = SMALL_NETWORK_NODES
    elif spec.topology == "replicated-small":
        p, copies = SMALL_NETWORK_NODES * spec.copies, spec.copies
    elif spec.topology == "random":
        p = spec.p
        edge_prob = 3.0 / spec.p if spec.edge_prob is None else spec.edge_prob
    return {"p": p, "copies": copies, "edge_prob": edge_prob}


def aggregate(
    method: str,
    spec: GeneratorSpec,
    n: int,
    reps: int,
    distances: Sequence[int],
    failures: int,
    ecdf: bool = False,
    p: Optional[int] = None,
) -> BenchmarkResult:
    distances = [int(d) for d in distances]
    fields = generator_fields(spec)
    result = BenchmarkResult(
        method=method,
        topology=spec.topology,
        mechanism=spec.mechanism,
        noise=spec.noise,
        post_transform=spec.post_transform,
        ecdf=ecdf,
        p=fields["p"] if p is None else p,
        copies=fields["copies"],
        edge_prob=fields["edge_prob"],
        n=n,
        repetitions=reps,
        distances=distances,
        failures=failures,
    )
    if distances:
        result.mean = float(np.mean(distances))
    if len(distances) >= 2:
        result.sem = float(np.std(distances, ddof=1) / math.sqrt(len(distances)))
        result.sem_defined = True
    return result


def _with_seed(cfg: LearnerConfig, seed: int) -> LearnerConfig:
    test = cfg.test
    return replace(cfg, test=replace(test, config=replace(test.config, seed=seed, workers=1)))


def _run_cell(
    spec: GeneratorSpec,
    methods: Dict[str, LearnerConfig],
    n: int,
    rep: int,
    seed: int,
    ecdf: bool,
    external_path: Optional[str],
    dump_dir: Optional[Path],
) -> List[dict]:
    data_seed = derive_seed(seed, n, rep, 0)
    learn_seed = derive_seed(seed, n, rep, 1)
    base = {
        "topology": spec.topology,
        "mechanism": spec.mechanism,
        "noise": spec.noise,
        "post_transform": spec.post_transform,
        "ecdf": ecdf,
        **generator_fields(spec),
        "n": n,
        "rep": rep,
    }
    logger.info("cell n={} rep={}: data_seed={} learn_seed={}", n, rep, data_seed, learn_seed)
    try:
        if external_path is not None:
            data, truth = load_external(external_path)
            base["n"] = n = data.n
            base["p"] = data.p
        else:
            data, truth = spec.generate(n, data_seed)
        if ecdf:
            data = ecdf_transform(data)
    except (MiGraphError, OSError) as exc:
        logger.error("cell n={} rep={}: data generation failed: {}", n, rep, exc)
        return [{**base, "method": m, "hamming": None, "error": str(exc)} for m in methods]

    if dump_dir is not None:
        write_edge_list(truth, data.names, dump_dir / f"truth_n{n}_rep{rep}.txt")

    rows = []
    for name, cfg in methods.items():
        try:
            learned = learn_structure(data, _with_seed(cfg, learn_seed))
            distance = hamming_distance(learned.graph, truth)
            rows.append({**base, "method": name, "hamming": distance, "error": ""})
            if dump_dir is not None:
                write_edge_list(learned.graph, data.names, dump_dir / f"{name}_n{n}_rep{rep}.txt")
            logger.info("cell n={} rep={} method={}: hamming={}", n, rep, name, distance)
        except MiGraphError as exc:
            logger.error("cell n={} rep={} method={} failed: {}", n, rep, name, exc)
            rows.append({**base, "method": name, "hamming": None, "error": str(exc)})
    return rows


def _cells(sample_sizes: Sequence[int], reps: int, external_paths: Optional[Sequence[str]]) -> List[Tuple[int, int, Optional[str]]]:
    if external_paths:
        return [(0, rep, str(path)) for rep, path in enumerate(external_paths)]
    return [(n, rep, None) for n in sample_sizes for rep in range(reps)]


def run_benchmark(
    spec: GeneratorSpec,
    methods: Dict[str, LearnerConfig],
    sample_sizes: Sequence[int],
    reps: int,
    seed: int = 0,
    workers: int = 1,
    ecdf: bool = False,
    external_paths: Optional[Sequence[str]] = None,
    dump_dir=None,
) -> BenchmarkRun:
    """Generate, learn and score every (method, n, rep) cell.

    With ``external_paths`` each CSV (plus its ``.edges.txt`` truth) is one
    repetition, ``sample_sizes``/``reps`` are ignored and n is read from the data.
    """
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if not methods:
        raise ConfigError("at least one method is required")
    dump_dir = Path(dump_dir) if dump_dir is not None else None
    cells = _cells(sample_sizes, reps, external_paths)
    logger.info("Benchmark: {} cells x {} methods (workers={})", len(cells), len(methods), workers)
    per_cell = Parallel(n_jobs=workers, prefer="threads")(
        delayed(_run_cell)(spec, methods, n, rep, seed, ecdf, path, dump_dir)
        for n, rep, path in cells
    )
    rows = [row for cell in per_cell for row in cell]
    frame = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    for column in ("hamming", "p", "copies"):
        frame[column] = frame[column].astype("Int64")
    frame["edge_prob"] = frame["edge_prob"].astype(float)
    frame = frame.sort_values(["method", "n", "rep"], kind="stable").reset_index(drop=True)

    results = []
    for (method, n), group in frame.groupby(["method", "n"], sort=True):
        ok = group["hamming"].dropna()
        p = group["p"].dropna()
        results.append(
            aggregate(
                method, spec, int(n), len(group), ok.tolist(), int(group["hamming"].isna().sum()),
                ecdf=ecdf, p=int(p.iloc[0]) if len(p) else None,
            )
        )
    return BenchmarkRun(results=results, cells=frame)

