"""Semantic Relevance aggregation. All aggregates are micro-averages over pooled pairs."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

from ..errors import EmptySlice
from ..judge import JudgeVerdict

LOW_CUT = 40
HIGH_CUT = 60

ByQuery = Mapping[str, Sequence[JudgeVerdict]]  # query_id -> verdicts in rank order


class SRMode(str, Enum):
    MATCHED_NP = "matched_np"
    CUMULATIVE_CURVE = "cumulative_curve"
    TOPK_MEAN = "topk_mean"


@dataclass(frozen=True)
class SRDistribution:
    source: str
    mean: float
    frac_le_40: float
    frac_ge_60: float
    n: int


def sr_distribution(scores: Iterable[int], source: str = "") -> SRDistribution:
    scores = list(scores)
    if not scores:
        raise EmptySlice(f"{source or 'slice'}: no verdicts to aggregate")
    n = len(scores)
    return SRDistribution(
        source=source,
        mean=sum(scores) / n,
        frac_le_40=sum(s <= LOW_CUT for s in scores) / n,
        frac_ge_60=sum(s >= HIGH_CUT for s in scores) / n,
        n=n,
    )


def matched_np_pool(by_query: ByQuery, n_p: Mapping[str, int] | None) -> list[JudgeVerdict]:
    """Truncate each query's list to its N_P before pooling; ``n_p=None`` keeps everything."""
    pooled = []
    for qid in sorted(by_query):
        verdicts = by_query[qid]
        if n_p is not None:
            if qid not in n_p:
                raise KeyError(f"no N_P for query {qid}")
            verdicts = verdicts[:n_p[qid]]
        pooled.extend(verdicts)
    return pooled


def matched_np_distribution(by_query: ByQuery, n_p: Mapping[str, int] | None,
                            source: str = "") -> SRDistribution:
    return sr_distribution((v.sr_score for v in matched_np_pool(by_query, n_p)), source)


def topk_mean_sr(by_query: ByQuery, k: int) -> float:
    if k < 1:
        raise ValueError("k must be positive")
    scores = [v.sr_score for qid in sorted(by_query) for v in by_query[qid][:k]]
    if not scores:
        raise EmptySlice(f"no verdicts in any top-{k}")
    return sum(scores) / len(scores)


def cumulative_sr_curve(by_query: ByQuery, k_max: int, ks: Sequence[int] | None = None) -> list[tuple[int, float]]:
    """Mean SR over pooled top-K prefixes for each K up to ``k_max``."""
    if k_max < 1:
        raise ValueError("k_max must be positive")
    grid = sorted({k for k in (ks or range(1, k_max + 1)) if 1 <= k <= k_max})
    lists = [by_query[q] for q in sorted(by_query)]
    if not any(lists):
        raise EmptySlice("no verdicts for the curve")
    # running sums along rank, so the whole curve is linear in the pooled size
    longest = min(k_max, max(len(v) for v in lists))
    total = [0] * (longest + 1)
    count = [0] * (longest + 1)
    for verdicts in lists:
        for r in range(1, longest + 1):
            total[r] += verdicts[r - 1].sr_score if r <= len(verdicts) else 0
            count[r] += r <= len(verdicts)
    curve, s, c = [], 0, 0
    prefix = {}
    for r in range(1, longest + 1):
        s += total[r]
        c += count[r]
        prefix[r] = s / c
    for k in grid:
        curve.append((k, prefix[min(k, longest)]))
    return curve


def sr_aggregate(by_query: ByQuery, mode: SRMode | str, **params):
    mode = SRMode(mode)
    if mode is SRMode.MATCHED_NP:
        return matched_np_distribution(by_query, params.get("n_p"), params.get("source", ""))
    if mode is SRMode.TOPK_MEAN:
        return topk_mean_sr(by_query, params["k"])
    return cumulative_sr_curve(by_query, params["k_max"], params.get("ks"))
