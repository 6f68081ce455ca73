"""Command-line front end for kernel searches and benchmark runs.

Exit codes: 0 success, 2 config error, 3 data error, 4 compute failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench, circuit_search, kernel_search
from .bench import (ComputeError, ConfigError, ExperimentConfig, ResultTable,
                    emit_reports, load_dataset, run_extrapolation,
                    run_interpolation, summarize)
from .circuit_search import CircuitSearchConfig, search_circuit, trace_to_csv
from .data import DataError, split_random
from .kernel_search import ClassicalSearchConfig, search_classical
from .kernels import serialize
from .nngp import NNGPSearchConfig, search_depth

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_COMPUTE = 4


def _common_flags(p):
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None,
                   help="override: use this single seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="override worker thread count")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.out is not None:
        cfg.out_dir = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    return cfg


def _train_subset(cfg: ExperimentConfig):
    data = load_dataset(cfg.dataset)
    seed = cfg.seeds[0]
    n_train = cfg.n_train[0]
    if n_train >= data.n:
        raise ConfigError(f"n_train={n_train} too large for dataset of {data.n}")
    split = split_random(data, n_train, seed=seed)
    return data.subset(split.train), data.subset(split.test), seed


def cmd_fit(args):
    cfg = _load_config(args)
    data = load_dataset(cfg.dataset)
    family, seed, n_train = cfg.families[0], cfg.seeds[0], cfg.n_train[0]
    if n_train >= data.n:
        raise ConfigError(f"n_train={n_train} too large for dataset of {data.n}")
    split = split_random(data, n_train, seed=seed)
    row, _, _ = bench._run_cell(family, data, split, n_train, seed, cfg)
    print(f"family={family} rmse={row.rmse:.4f} criterion={row.criterion:.4f} "
          f"M={row.M}")
    return EXIT_OK


def cmd_search_classical(args):
    cfg = _load_config(args)
    train, _, seed = _train_subset(cfg)
    scfg = ClassicalSearchConfig(budget=cfg.classical_budget,
                                 final_budget=cfg.final_budget,
                                 max_depth=cfg.max_depth, seed=seed,
                                 sigma_n=cfg.sigma_n, jitter=cfg.jitter)
    expr, params, trace = search_classical(train, scfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out / f"trace_composite_{seed}.csv")
    (out / "winner_composite.txt").write_text(serialize(expr) + "\n")
    print(serialize(expr))
    return EXIT_OK


def cmd_search_quantum(args):
    cfg = _load_config(args)
    train, test, seed = _train_subset(cfg)
    qcfg = CircuitSearchConfig(refine_budget=cfg.refine_budget,
                               final_budget=cfg.final_budget,
                               eps_beta=cfg.eps_beta, max_depth=cfg.max_depth,
                               seed=seed, sigma_n=cfg.sigma_n,
                               jitter=cfg.jitter, holdout=(test.X, test.y))
    spec, params, trace = search_circuit(train, cfg.beam_width, qcfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_to_csv(trace, out / f"trace_quantum-variable_{seed}.csv")
    (out / "winner_quantum-variable.json").write_text(spec.to_json() + "\n")
    print(spec.to_json())
    return EXIT_OK


def cmd_search_nngp(args):
    cfg = _load_config(args)
    train, _, seed = _train_subset(cfg)
    ncfg = NNGPSearchConfig(budget=cfg.nngp_budget,
                            max_depth=cfg.nngp_max_depth, seed=seed,
                            sigma_n=cfg.sigma_n, jitter=cfg.jitter)
    kernel, params, trace = search_depth(train, ncfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bench._write_trace(trace, out / f"trace_nngp_{seed}.csv")
    doc = {"depth": kernel.depth, "params": params.values.tolist()}
    (out / "winner_nngp.json").write_text(json.dumps(doc) + "\n")
    print(json.dumps(doc))
    return EXIT_OK


def cmd_bench_interp(args):
    cfg = _load_config(args)
    table, artifacts = run_interpolation(cfg)
    emit_reports(table, artifacts, cfg.out_dir)
    print(summarize(table), end="")
    return EXIT_OK


def cmd_bench_extrap(args):
    cfg = _load_config(args)
    table, artifacts = run_extrapolation(cfg)
    emit_reports(table, artifacts, cfg.out_dir)
    print(summarize(table), end="")
    return EXIT_OK


def cmd_report(args):
    results = Path(args.out or "results") / "results.csv"
    if args.config:
        cfg = _load_config(args)
        results = Path(cfg.out_dir) / "results.csv"
    if not results.exists():
        raise DataError(f"no results table at {results}")
    table = ResultTable.from_csv(results)
    summary = summarize(table)
    (results.parent / "summary.txt").write_text(summary)
    print(summary, end="")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="peskit",
        description="GP regression benchmarks on potential energy surfaces "
                    "with classical, NNGP, and quantum fidelity kernels")
    sub = p.add_subparsers(dest="command", required=True)
    handlers = {
        "fit": cmd_fit,
        "search-classical": cmd_search_classical,
        "search-quantum": cmd_search_quantum,
        "search-nngp": cmd_search_nngp,
        "bench-interp": cmd_bench_interp,
        "bench-extrap": cmd_bench_extrap,
    }
    for name, fn in handlers.items():
        sp = sub.add_parser(name)
        _common_flags(sp)
        sp.set_defaults(handler=fn)
    sp = sub.add_parser("report")
    sp.add_argument("--config", default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(handler=cmd_report)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"compute failure: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
