"""``deeplit`` command line: one verb per pipeline stage plus ``run-all``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from ..errors import ConfigError, MissingArtifacts
from .config import load_config
from .pipeline import STAGES, run_pipeline
from .reports import emit_reports

VERB_STAGES = {
    "search": ("search",),
    "expand": ("expand",),
    "rerank": ("rerank",),
    "judge": ("judge",),
    "coauthor": ("coauthor",),
    "eval": ("eval",),
    "run-all": STAGES,
}


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for dest, key in (("run_dir", "run_dir"), ("cache_dir", "cache_dir"), ("manifest", "benchmark_manifest")):
        v = getattr(args, dest)
        if v is not None:
            out[key] = str(Path(v).resolve())
    simple = {
        "max_depth": "expansion.max_depth",
        "max_papers": "expansion.max_papers",
        "k_max": "judge.k_max",
        "alpha": "metrics.alpha",
        "workers": "max_parallel_queries",
        "min_success": "min_success_fraction",
    }
    for dest, key in simple.items():
        v = getattr(args, dest)
        if v is not None:
            out[key] = v
    if args.offline:
        out["offline"] = True
    if args.rerankers:
        out["rerankers"] = [m.strip() for m in args.rerankers.split(",") if m.strip()]
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deeplit", description="Batch literature search and evaluation.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in [*VERB_STAGES, "report"]:
        sp = sub.add_parser(verb)
        sp.add_argument("-c", "--config", required=verb != "report", help="YAML run configuration")
        sp.add_argument("--run-dir")
        if verb == "report":
            continue
        sp.add_argument("--cache-dir")
        sp.add_argument("--manifest", help="benchmark manifest (JSONL)")
        sp.add_argument("--offline", action="store_true", help="serve every request from the cache")
        sp.add_argument("--force", action="store_true", help="recompute artifacts that already exist")
        sp.add_argument("--rerankers", help="comma list of none, qwen_embed, debate, ensemble")
        sp.add_argument("--max-depth", type=int)
        sp.add_argument("--max-papers", type=int)
        sp.add_argument("--k-max", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--workers", type=int, help="query papers processed in parallel")
        sp.add_argument("--min-success", type=float, help="fraction of queries that must succeed")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "report":
            if args.run_dir:
                run_dir = Path(args.run_dir)
            elif args.config:
                run_dir = load_config(args.config).run_dir
            else:
                print("report needs --run-dir or --config", file=sys.stderr)
                return 2
            for name, path in emit_reports(run_dir).items():
                print(f"{name}\t{path}")
            return 0
        cfg = load_config(args.config, _overrides(args))
        result = run_pipeline(cfg, VERB_STAGES[args.verb], resume=not args.force)
    except (ConfigError, MissingArtifacts) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for qid, status in sorted(result.statuses.items()):
        print(f"{qid}\t{status}")
    print(f"succeeded {result.success_fraction:.0%} of queries; network calls: {result.network_calls}")
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
