from __future__ import annotations

from collections.abc import Collection, Iterable, Sequence
from dataclasses import dataclass

from ..core import RankedList
from ..errors import EmptyGroundTruth

DEFAULT_KS = (10, 20, 50, 100, 200, 500, 1000)


@dataclass(frozen=True)
class PRPoint:
    k: int
    precision: float
    recall: float
    hits: int


@dataclass(frozen=True)
class PRCurve:
    query_id: str
    method: str
    points: tuple[PRPoint, ...]
    n_truth: int

    def at(self, k: int) -> PRPoint:
        for p in self.points:
            if p.k == k:
                return p
        raise KeyError(k)


def precision_recall_at_k(ranked: RankedList | Sequence[str], truth: Collection[str],
                          ks: Iterable[int] = DEFAULT_KS, *, query_id: str = "",
                          method: str = "") -> PRCurve:
    """Precision and recall of each top-k prefix against ``truth``.

    When k exceeds the list length the whole list is evaluated and precision
    divides by the list length, not by k.
    """
    if isinstance(ranked, RankedList):
        query_id = query_id or ranked.query_id
        method = method or ranked.method.value
        ids = ranked.ids()
    else:
        ids = list(ranked)
    g = set(truth)
    if not g:
        raise EmptyGroundTruth(f"{query_id or '<query>'}: ground truth is empty")
    ks = sorted(set(ks))
    if any(k < 1 for k in ks):
        raise ValueError("every k must be positive")

    # hits[i] = |top-i ∩ G|; ids are unique in a RankedList, but stay safe for raw lists
    hits = [0]
    seen: set[str] = set()
    for cid in ids:
        new = cid in g and cid not in seen
        seen.add(cid)
        hits.append(hits[-1] + new)
    points = []
    for k in ks:
        n = min(k, len(ids))
        h = hits[n]
        points.append(PRPoint(k, h / n if n else 0.0, h / len(g), h))
    return PRCurve(query_id, method, tuple(points), len(g))


def macro_average(curves: Sequence[PRCurve]) -> list[tuple[int, float, float]]:
    """Per-k mean precision and recall across queries (equal weight per query)."""
    if not curves:
        return []
    ks = [p.k for p in curves[0].points]
    if any([p.k for p in c.points] != ks for c in curves):
        raise ValueError("curves disagree on their k grid")
    n = len(curves)
    return [
        (k, sum(c.points[i].precision for c in curves) / n, sum(c.points[i].recall for c in curves) / n)
        for i, k in enumerate(ks)
    ]
