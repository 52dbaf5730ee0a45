from __future__ import annotations

from collections.abc import Mapping

from ..core import Method, RankedList
from ..errors import CandidateSetMismatch

NORMALIZATIONS = ("minmax", "rank")


def minmax_normalize(scores: Mapping[str, float]) -> dict[str, float]:
    """Scale into [0, 1] within the list; a constant list maps to 0.5 everywhere."""
    lo, hi = min(scores.values()), max(scores.values())
    if hi == lo:
        return {k: 0.5 for k in scores}
    span = hi - lo
    return {k: (v - lo) / span for k, v in scores.items()}


def rank_normalize(scores: Mapping[str, float]) -> dict[str, float]:
    """Average-rank position scaled into [0, 1]; 1 is best, tied scores share a value."""
    n = len(scores)
    if n == 1:
        return {k: 0.5 for k in scores}
    ordered = sorted(scores.items(), key=lambda kv: -kv[1])
    out: dict[str, float] = {}
    i = 0
    while i < n:
        j = i
        while j + 1 < n and ordered[j + 1][1] == ordered[i][1]:
            j += 1
        avg = (i + j) / 2
        for k in range(i, j + 1):
            out[ordered[k][0]] = 1.0 - avg / (n - 1)
        i = j + 1
    return out


def ensemble_rank(a: RankedList, b: RankedList, normalization: str = "minmax") -> RankedList:
    """Average the two lists' normalized scores, rescaled to 0-100."""
    if a.query_id != b.query_id:
        raise CandidateSetMismatch(f"query ids differ: {a.query_id} vs {b.query_id}")
    sa, sb = a.scores(), b.scores()
    if set(sa) != set(sb):
        raise CandidateSetMismatch(
            f"candidate sets differ ({len(set(sa) ^ set(sb))} ids in only one list)")
    if not sa:
        return RankedList(a.query_id, Method.ENSEMBLE, ())
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}; choose from {NORMALIZATIONS}")
    norm = minmax_normalize if normalization == "minmax" else rank_normalize
    na, nb = norm(sa), norm(sb)
    papers = {e.canonical_id: e.paper for e in a.entries}
    flags = {e.canonical_id: tuple(dict.fromkeys(e.flags)) for e in a.entries}
    for e in b.entries:
        flags[e.canonical_id] = tuple(dict.fromkeys(flags[e.canonical_id] + e.flags))
    return RankedList.build(
        a.query_id, Method.ENSEMBLE,
        ((papers[cid], 50.0 * (na[cid] + nb[cid]), flags[cid]) for cid in sa),
    )
