"""Command-line runner for the experiment harness and the elicitation service.

Subcommands: ``correlation``, ``al``, ``bootstrap``, ``serve``.  A JSON config
file mirrors :class:`dmaware.experiments.ExperimentConfig`; flags override the
fields they name.  Exit status is 0 on success, 1 on configuration or I/O
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .experiments import (
    ExperimentConfig,
    bootstrap_ci,
    run_al,
    run_correlation,
    write_outputs,
)


def _load_config(args, default_kind: str) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig(kind=default_kind)
    overrides = {}
    if getattr(args, "kind", None):
        overrides["kind"] = args.kind
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        key = "outer_repetitions" if cfg.kind == "correlation" else "repetitions"
        overrides[key] = args.reps
    if getattr(args, "queries", None) is not None:
        overrides["n_queries"] = args.queries
    if getattr(args, "criteria", None):
        overrides["criteria"] = tuple(args.criteria.split(","))
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "knn", None) is not None:
        overrides["knn_k"] = args.knn
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "models", None) is not None:
        overrides["n_models"] = args.models
    return dataclasses.replace(cfg, **overrides)


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring ExperimentConfig")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--jobs", type=int, default=None, help="concurrent repetitions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmaware")
    sub = parser.add_subparsers(dest="command", required=True)

    p_corr = sub.add_parser("correlation", help="imbalance vs Type S error study")
    _common_flags(p_corr)
    p_corr.add_argument("--models", type=int, default=None, help="number of outcome models")

    p_al = sub.add_parser("al", help="elicitation experiment")
    _common_flags(p_al)
    p_al.add_argument("--kind", choices=("al_binary", "al_continuous", "al_comparative"))
    p_al.add_argument("--queries", type=int, default=None)
    p_al.add_argument("--criteria", help="comma-separated criterion names")
    p_al.add_argument("--knn", type=int, default=None, help="restrict scoring to k nearest pool units")

    p_boot = sub.add_parser("bootstrap", help="percentile bootstrap CI of the mean")
    p_boot.add_argument("--values", required=True, help="file with one number per line")
    p_boot.add_argument("--resamples", type=int, default=2000)
    p_boot.add_argument("--seed", type=int, default=0)

    p_serve = sub.add_parser("serve", help="run the elicitation HTTP service")
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "correlation":
            cfg = _load_config(args, "correlation")
            result = run_correlation(cfg)
            if cfg.out_dir:
                write_outputs(cfg.out_dir, result, cfg)
            print(json.dumps(result["summary"], indent=2, sort_keys=True))
            return 0
        if args.command == "al":
            cfg = _load_config(args, "al_binary")
            result = run_al(cfg)
            if cfg.out_dir:
                write_outputs(cfg.out_dir, result, cfg)
            print(json.dumps(result["summaries"], indent=2, sort_keys=True))
            return 0
        if args.command == "bootstrap":
            values = [
                float(line)
                for line in Path(args.values).read_text(encoding="utf-8").split()
                if line.strip()
            ]
            summary = bootstrap_ci(values, args.resamples, args.seed)
            print(json.dumps(dataclasses.asdict(summary), indent=2, sort_keys=True))
            return 0
        if args.command == "serve":
            import uvicorn

            from .service import create_app

            host = args.host or os.environ.get("DMAWARE_HOST", "127.0.0.1")
            port = args.port or int(os.environ.get("DMAWARE_PORT", "8711"))
            uvicorn.run(create_app(), host=host, port=port)
            return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
