"""Command-line entry point: learn, estimate, citest, generate, benchmark.

Exit status: 0 success, 1 computation error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from loguru import logger

from .citest_base import TEST_METHODS, TestSpec
from .citests import build_test
from .core import EstimatorConfig, edge_list_lines, load_dataset, save_dataset, write_edge_list
from .errors import ConfigError, DatasetError, MiGraphError
from .estimators import conditional_mutual_information, entropy
from .evaluation import run_benchmark
from .structure import LearnerConfig, learn_structure
from .synthdata import (
    MECHANISMS,
    NOISE_FAMILIES,
    POST_TRANSFORMS,
    GeneratorSpec,
    ecdf_transform,
    truth_path_for,
)
from .utils import default_workers, load_config, pick, setup_logging

LEARNING_METHODS = ("knnmi-and", "fisherz-and")
DEFAULT_SAMPLE_SIZES = (125, 250, 500, 1000, 2000)

EXIT_OK, EXIT_COMPUTATION, EXIT_USAGE = 0, 1, 2


@dataclass
class CliConfig:
    subcommand: str
    estimator: EstimatorConfig
    method: str = "knnmi-and"
    shortcut: bool = True
    workers: int = 1
    log_level: str = "INFO"
    options: Dict[str, object] = field(default_factory=dict)

    def resolved(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "estimator": self.estimator.to_dict(),
            "method": self.method,
            "shortcut": self.shortcut,
            "workers": self.workers,
            **{k: v for k, v in self.options.items() if k not in {"func", "config"}},
        }


def learner_config(
    method: str,
    estimator: EstimatorConfig,
    shortcut: bool = True,
    max_blanket_size: Optional[int] = None,
    parallel_nodes: bool = False,
) -> LearnerConfig:
    if method == "knnmi-and":
        spec = TestSpec(method="hybrid" if shortcut else "permutation-mi", config=estimator)
    elif method == "fisherz-and":
        spec = TestSpec(method="fisher-z", config=estimator)
    else:
        raise ConfigError(f"unknown method '{method}'; expected one of {LEARNING_METHODS}")
    return LearnerConfig(test=spec, max_blanket_size=max_blanket_size, parallel_nodes=parallel_nodes)


def resolve_config(args: argparse.Namespace) -> CliConfig:
    file_cfg = load_config(getattr(args, "config", None))
    est_cfg = file_cfg.get("estimator", {}) or {}
    learner_cfg = file_cfg.get("learner", {}) or {}

    workers = pick(args.workers, file_cfg.get("workers"))
    if workers is None:
        workers = default_workers()
    estimator = EstimatorConfig(
        k=int(pick(args.k, est_cfg.get("k"), default=3)),
        permutations=int(pick(args.permutations, est_cfg.get("permutations"), default=200)),
        alpha=float(pick(args.alpha, est_cfg.get("alpha"), default=0.05)),
        shortcut_threshold=float(pick(args.shortcut_threshold, est_cfg.get("shortcut_threshold"), default=0.001)),
        seed=int(pick(args.seed, est_cfg.get("seed"), default=0)),
        jitter=float(pick(args.jitter, est_cfg.get("jitter"), default=1e-10)),
        workers=int(workers),
    )
    method = pick(getattr(args, "method", None), learner_cfg.get("method"), default="knnmi-and")
    if method not in LEARNING_METHODS:
        raise ConfigError(f"unknown method '{method}'; expected one of {LEARNING_METHODS}")
    shortcut = pick(getattr(args, "shortcut", None), learner_cfg.get("shortcut"), default=True)
    options = dict(vars(args))
    options["_file"] = file_cfg
    return CliConfig(
        subcommand=args.command,
        estimator=estimator,
        method=method,
        shortcut=bool(shortcut),
        workers=int(workers),
        log_level=str(pick(args.log_level, file_cfg.get("log_level"), default="INFO")),
        options=options,
    )


def _log_resolved(config: CliConfig, **derived) -> None:
    resolved = config.resolved()
    resolved.pop("_file", None)
    resolved.update(derived)
    logger.info("Resolved configuration: {}", json.dumps(resolved, sort_keys=True, default=str))


def _columns(data, names: Optional[List[str]]) -> List[int]:
    return [data.index_of(name) for name in (names or [])]


def cmd_learn(config: CliConfig) -> int:
    opts = config.options
    learner_file = opts["_file"].get("learner", {}) or {}
    data = load_dataset(opts["input"])
    if opts.get("ecdf"):
        data = ecdf_transform(data)
    cfg = learner_config(
        config.method,
        config.estimator,
        shortcut=config.shortcut,
        max_blanket_size=pick(opts.get("max_blanket_size"), learner_file.get("max_blanket_size")),
        parallel_nodes=bool(opts.get("parallel_nodes") or learner_file.get("parallel_nodes", False)),
    )
    _log_resolved(config, test=cfg.test.method)
    started = time.perf_counter()
    result = learn_structure(data, cfg)
    elapsed = time.perf_counter() - started
    out = opts.get("out")
    if out:
        write_edge_list(result.graph, data.names, out)
    else:
        for line in edge_list_lines(result.graph, data.names):
            print(line)
    print(
        f"p={data.p} n={data.n} edges={result.graph.edge_count} "
        f"tests={result.tests_performed} wall_time={elapsed:.2f}s",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_estimate(config: CliConfig) -> int:
    opts = config.options
    data = load_dataset(opts["input"])
    est = config.estimator
    _log_resolved(config)
    x = data.columns(_columns(data, opts["x"]))
    if not opts.get("y"):
        value = entropy(x, k=est.k, jitter=est.jitter, seed=est.seed)
    else:
        y = data.columns(_columns(data, opts["y"]))
        z = data.columns(_columns(data, opts.get("z")))
        value = conditional_mutual_information(x, y, z, k=est.k, jitter=est.jitter, seed=est.seed)
    print(f"{value:.6f}")
    return EXIT_OK


def cmd_citest(config: CliConfig) -> int:
    opts = config.options
    data = load_dataset(opts["input"])
    test = build_test(TestSpec(method=opts["test"], config=config.estimator))
    _log_resolved(config)
    x = data.columns(_columns(data, [opts["x"]]))
    y = data.columns(_columns(data, [opts["y"]]))
    z = data.columns(_columns(data, opts.get("z")))
    result = test.test(x, y, z)
    print(json.dumps(result.to_dict(), sort_keys=True))
    return EXIT_OK


def _generator_spec(opts: dict) -> GeneratorSpec:
    gen_file = opts["_file"].get("generator", {}) or {}
    return GeneratorSpec(
        topology=pick(opts.get("topology"), gen_file.get("topology"), default="small"),
        mechanism=pick(opts.get("mechanism"), gen_file.get("mechanism"), default="nonlinear"),
        noise=pick(opts.get("noise"), gen_file.get("noise"), default="gaussian"),
        post_transform=pick(opts.get("post_transform"), gen_file.get("post_transform"), default="none"),
        p=int(pick(opts.get("p"), gen_file.get("p"), default=10)),
        edge_prob=pick(opts.get("edge_prob"), gen_file.get("edge_prob")),
        copies=int(pick(opts.get("copies"), gen_file.get("copies"), default=3)),
    )


def cmd_generate(config: CliConfig) -> int:
    opts = config.options
    spec = _generator_spec(opts)
    if spec.topology == "external":
        raise ConfigError("generate does not support topology 'external'")
    n = int(opts.get("n") or 1000)
    _log_resolved(config, generator=asdict(spec))
    data, truth = spec.generate(n, config.estimator.seed)
    prefix = Path(opts["out"])
    csv_path = prefix if prefix.suffix == ".csv" else prefix.with_name(prefix.name + ".csv")
    save_dataset(data, csv_path)
    write_edge_list(truth, data.names, truth_path_for(csv_path))
    logger.info("Wrote {} ({}x{}) and {} ({} edges)", csv_path, data.n, data.p, truth_path_for(csv_path), truth.edge_count)
    return EXIT_OK


def cmd_benchmark(config: CliConfig) -> int:
    opts = config.options
    bench_file = opts["_file"].get("benchmark", {}) or {}
    learner_file = opts["_file"].get("learner", {}) or {}
    inputs = opts.get("inputs") or []
    if inputs:
        spec = GeneratorSpec(topology="external", external_path=str(inputs[0]))
    else:
        spec = _generator_spec(opts)
    method_names = pick(opts.get("methods"), bench_file.get("methods"), default=list(LEARNING_METHODS))
    sample_sizes = [int(n) for n in pick(opts.get("sample_sizes"), bench_file.get("sample_sizes"), default=list(DEFAULT_SAMPLE_SIZES))]
    reps = int(pick(opts.get("reps"), bench_file.get("reps"), default=5))
    methods = {
        name: learner_config(
            name,
            config.estimator,
            shortcut=config.shortcut,
            max_blanket_size=learner_file.get("max_blanket_size"),
        )
        for name in method_names
    }
    _log_resolved(
        config,
        generator=asdict(spec),
        methods=list(methods),
        sample_sizes=sample_sizes,
        reps=reps,
    )
    run = run_benchmark(
        spec,
        methods,
        sample_sizes,
        reps,
        seed=config.estimator.seed,
        workers=config.workers,
        ecdf=bool(opts.get("ecdf")),
        external_paths=inputs or None,
        dump_dir=opts.get("dump_edges"),
    )
    out_dir = Path(opts.get("out_dir") or "results")
    run.write(out_dir / "results.csv", out_dir / "summary.json")
    for r in run.results:
        logger.info("{} n={}: mean hamming {} (sem {:.2f}, failures {})", r.method, r.n, r.mean, r.sem, r.failures)
    return EXIT_OK


COMMANDS = {
    "learn": cmd_learn,
    "estimate": cmd_estimate,
    "citest": cmd_citest,
    "generate": cmd_generate,
    "benchmark": cmd_benchmark,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="YAML file with defaults (flags override it)")
    p.add_argument("--log-level", dest="log_level", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="neighbour count (default 3)")
    p.add_argument("--permutations", "-T", type=int, default=None, help="permutation count (default 200)")
    p.add_argument("--alpha", type=float, default=None, help="significance level (default 0.05)")
    p.add_argument("--shortcut-threshold", dest="shortcut_threshold", type=float, default=None)
    p.add_argument("--jitter", type=float, default=None)
    p.add_argument("--workers", type=int, default=None, help="defaults to $MI_GRAPH_WORKERS or 1")


def _add_generator(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology", choices=("small", "random", "replicated-small"), default=None)
    p.add_argument("--mechanism", choices=MECHANISMS, default=None)
    p.add_argument("--noise", choices=NOISE_FAMILIES, default=None)
    p.add_argument("--post-transform", dest="post_transform", choices=POST_TRANSFORMS, default=None)
    p.add_argument("--p", type=int, default=None, help="variables of a random network")
    p.add_argument("--edge-prob", dest="edge_prob", type=float, default=None, help="default 3/p")
    p.add_argument("--copies", type=int, default=None)


def _add_method(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=LEARNING_METHODS, default=None)
    p.add_argument("--shortcut", dest="shortcut", action="store_true", default=None)
    p.add_argument("--no-shortcut", dest="shortcut", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mi_graph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a Markov network from a CSV")
    _add_common(p)
    _add_method(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None, help="edge list path (stdout when omitted)")
    p.add_argument("--max-blanket-size", dest="max_blanket_size", type=int, default=None)
    p.add_argument("--parallel-nodes", dest="parallel_nodes", action="store_true")
    p.add_argument("--ecdf", action="store_true", help="apply the nonparanormal transform first")

    p = sub.add_parser("estimate", help="entropy, MI or CMI of named columns")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--x", nargs="+", required=True)
    p.add_argument("--y", nargs="+", default=None)
    p.add_argument("--z", nargs="*", default=None)

    p = sub.add_parser("citest", help="conditional independence test of two columns")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", nargs="*", default=None)
    p.add_argument("--test", choices=TEST_METHODS, default="hybrid")

    p = sub.add_parser("generate", help="write a synthetic dataset and its true edge list")
    _add_common(p)
    _add_generator(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True, help="output prefix; writes <prefix>.csv and <prefix>.edges.txt")

    p = sub.add_parser("benchmark", help="Hamming-distance benchmark over sample sizes and repetitions")
    _add_common(p)
    _add_generator(p)
    p.add_argument("--shortcut", dest="shortcut", action="store_true", default=None)
    p.add_argument("--no-shortcut", dest="shortcut", action="store_false")
    p.add_argument("--methods", nargs="+", choices=LEARNING_METHODS, default=None)
    p.add_argument("--sample-sizes", dest="sample_sizes", nargs="+", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--ecdf", action="store_true")
    p.add_argument("--inputs", nargs="+", default=None, help="external CSVs, each with a sibling .edges.txt")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--dump-edges", dest="dump_edges", default=None, help="directory for per-cell edge lists")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or "INFO")
    try:
        config = resolve_config(args)
        setup_logging(config.log_level)
        return COMMANDS[config.subcommand](config)
    except (FileNotFoundError, DatasetError, ConfigError) as exc:
        logger.error("{}", exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("I/O error: {}", exc)
        return EXIT_USAGE
    except MiGraphError as exc:
        logger.error("{}: {}", type(exc).__name__, exc)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
