"""Aggregate per-query artifacts into the run's tables and curve files."""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from ..coauthor import CLASS_ORDER, DistanceClass, PairDistance, distance_distribution, mean_sr_by_distance
from ..core import Method, read_jsonl
from ..errors import MissingArtifacts
from ..judge import JudgeVerdict, read_verdicts
from ..metrics.sr import cumulative_sr_curve, matched_np_distribution, topk_mean_sr
from .layout import HUMAN, RunLayout, read_json, safe_name, write_json

METHOD_ORDER = [m.value for m in Method]


def _f(x: float | None, digits: int = 4) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _load_evals(layout: RunLayout) -> list[dict[str, Any]]:
    d = layout.root / "eval"
    files = sorted(p for p in d.glob("*.json")) if d.is_dir() else []
    if not files:
        raise MissingArtifacts("eval", f"no per-query evaluations under {d}")
    return [read_json(p) for p in files]


def _load_verdicts(layout: RunLayout, qids: Sequence[str]) -> dict[str, dict[str, list[JudgeVerdict]]]:
    """source -> query_id -> verdicts in rank order, for queries that have them."""
    root = layout.root / "judge"
    out: dict[str, dict[str, list[JudgeVerdict]]] = {}
    if not root.is_dir():
        return out
    for src_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        by_q = {}
        for qid in qids:
            path = src_dir / f"{safe_name(qid)}.jsonl"
            if path.exists():
                by_q[qid] = read_verdicts(path)
        if by_q:
            out[src_dir.name] = by_q
    return out


def _source_order(sources) -> list[str]:
    rank = {s: i for i, s in enumerate([HUMAN, *METHOD_ORDER])}
    return sorted(sources, key=lambda s: (rank.get(s, len(rank)), s))


def emit_reports(run_dir: str | Path) -> dict[str, Path]:
    """Write CSV tables, curve files and a JSON summary into ``<run_dir>/reports``."""
    layout = RunLayout(Path(run_dir))
    evals = _load_evals(layout)
    qids = [e["query_id"] for e in evals]
    n_p = {e["query_id"]: e["n_p"] for e in evals}
    methods = [m for m in METHOD_ORDER if any(m in e["methods"] for e in evals)]
    out_dir = layout.reports
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    summary: dict[str, Any] = {"queries": qids}

    # precision / recall, macro-averaged over queries
    ks = [p[0] for p in evals[0]["methods"][methods[0]]["pr"]] if methods else []
    pr_rows, curve_rows, pr_summary = [], [], {}
    for m in methods:
        curves = [e["methods"][m]["pr"] for e in evals if m in e["methods"]]
        means = []
        for i, k in enumerate(ks):
            prec = sum(c[i][1] for c in curves) / len(curves)
            rec = sum(c[i][2] for c in curves) / len(curves)
            means.append((k, prec, rec))
            curve_rows.append([m, k, _f(prec), _f(rec)])
        pr_rows.append([m, len(curves)] + [_f(v) for _, p, r in means for v in (p, r)])
        pr_summary[m] = {str(k): {"precision": p, "recall": r} for k, p, r in means}
    header = ["method", "n_queries"] + [f"{x}@{k}" for k in ks for x in ("P", "R")]
    _write_csv(out_dir / "table1_precision_recall.csv", header, pr_rows)
    _write_csv(out_dir / "pr_curve.csv", ["method", "k", "precision", "recall"], curve_rows)
    written["table1"] = out_dir / "table1_precision_recall.csv"
    written["pr_curve"] = out_dir / "pr_curve.csv"
    summary["precision_recall"] = pr_summary

    verdicts = _load_verdicts(layout, qids)
    ndcg_ks = sorted({int(k) for e in evals for r in e["methods"].values() for k in r.get("alpha_ndcg", {})})
    sr_ks = ndcg_ks or [10, 100, 1000]

    # alpha-nDCG and SR at K
    t2_rows, t2_summary = [], {}
    rows_for = _source_order([*methods, *([HUMAN] if HUMAN in verdicts else [])])
    for src in rows_for:
        row: list[Any] = [src]
        entry: dict[str, Any] = {}
        for k in ndcg_ks:
            vals = [e["methods"][src]["alpha_ndcg"][str(k)] for e in evals
                    if src in e["methods"] and "alpha_ndcg" in e["methods"][src]]
            v = sum(vals) / len(vals) if vals else None
            row.append(_f(v))
            entry[f"alpha_ndcg@{k}"] = v
        if verdicts:
            for k in sr_ks:
                by_q = verdicts.get(src, {})
                v = topk_mean_sr(by_q, k) if any(by_q.values()) else None
                row.append(_f(v, 2))
                entry[f"sr@{k}"] = v
        t2_rows.append(row)
        t2_summary[src] = entry
    header = ["method"] + [f"alpha_ndcg@{k}" for k in ndcg_ks] + ([f"sr@{k}" for k in sr_ks] if verdicts else [])
    _write_csv(out_dir / "table2_diversity_sr.csv", header, t2_rows)
    written["table2"] = out_dir / "table2_diversity_sr.csv"
    summary["diversity_sr"] = t2_summary

    if verdicts:
        t3_rows, t3_summary, sr_curve_rows = [], {}, []
        for src in _source_order(verdicts):
            by_q = verdicts[src]
            if not any(by_q.values()):
                continue
            dist = matched_np_distribution(by_q, None if src == HUMAN else n_p, src)
            t3_rows.append([src, dist.n, _f(dist.mean, 2), _f(dist.frac_le_40), _f(dist.frac_ge_60)])
            t3_summary[src] = {"n": dist.n, "mean": dist.mean, "frac_le_40": dist.frac_le_40,
                               "frac_ge_60": dist.frac_ge_60}
            k_max = max(len(v) for v in by_q.values())
            for k, mean in cumulative_sr_curve(by_q, k_max):
                sr_curve_rows.append([src, k, _f(mean, 4)])
        _write_csv(out_dir / "table3_matched_np.csv", ["source", "n", "mean_sr", "frac_le_40", "frac_ge_60"],
                   t3_rows)
        _write_csv(out_dir / "sr_curve.csv", ["source", "k", "mean_sr"], sr_curve_rows)
        written["table3"] = out_dir / "table3_matched_np.csv"
        written["sr_curve"] = out_dir / "sr_curve.csv"
        summary["matched_np"] = t3_summary

    pairs_by_source: dict[str, list[PairDistance]] = {}
    for qid in qids:
        path = layout.coauthor(qid)
        if not path.exists():
            continue
        for r in read_jsonl(path):
            d = DistanceClass(r["d_class"]) if r["d_class"] else None
            pairs_by_source.setdefault(r["source"], []).append(
                PairDistance(r["query_id"], r["candidate_id"], d, r["resolvable"]))
    if pairs_by_source:
        t4_rows, t4_summary = [], {}
        for src in _source_order(pairs_by_source):
            dist = distance_distribution(pairs_by_source[src], src)
            pct = dist.percentages()
            row = [src, dist.n, dist.excluded] + [_f(pct[c], 2) for c in CLASS_ORDER]
            entry: dict[str, Any] = {"n": dist.n, "excluded": dist.excluded,
                                     "percent": {c.value: pct[c] for c in CLASS_ORDER}}
            if verdicts:
                flat = [v for vs in verdicts.get(src, {}).values() for v in vs]
                cond = mean_sr_by_distance(pairs_by_source[src], flat)
                row += [_f(cond[c], 2) for c in CLASS_ORDER]
                entry["mean_sr"] = {c.value: cond[c] for c in CLASS_ORDER}
            t4_rows.append(row)
            t4_summary[src] = entry
        header = ["source", "n_resolvable", "n_excluded"] + [c.value for c in CLASS_ORDER]
        if verdicts:
            header += [f"mean_sr_{c.value}" for c in CLASS_ORDER]
        _write_csv(out_dir / "table4_coauthor_distance.csv", header, t4_rows)
        written["table4"] = out_dir / "table4_coauthor_distance.csv"
        summary["coauthor_distance"] = t4_summary

    write_json(out_dir / "summary.json", summary)
    written["summary"] = out_dir / "summary.json"
    return written
