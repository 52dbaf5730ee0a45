"""Cluster-novelty ranking quality (alpha-nDCG) and a fallback embedding clusterer."""

from __future__ import annotations

import heapq
import math
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..core import RankedList, read_jsonl, write_jsonl
from ..errors import MissingClusterLabel

NOISE = -1
DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class ClusterAssignment:
    labels: Mapping[str, int] = field(default_factory=dict)

    def __contains__(self, cid: str) -> bool:
        return cid in self.labels

    def key(self, cid: str) -> tuple:
        """Grouping key; every noise-labeled document is its own cluster."""
        label = self.labels[cid]
        return ("noise", cid) if label == NOISE else ("c", label)

    def write(self, path: str | Path) -> None:
        write_jsonl(path, ({"id": cid, "cluster": int(c)} for cid, c in sorted(self.labels.items())))

    @classmethod
    def read(cls, path: str | Path) -> ClusterAssignment:
        return cls({r["id"]: int(r["cluster"]) for r in read_jsonl(path)})


def _gain(alpha: float, n_c: int, rank: int) -> float:
    return (1.0 - alpha) * alpha ** n_c / math.log2(rank + 1)


def alpha_dcg(ids: Sequence[str], relevant: Collection[str], clusters: ClusterAssignment,
              alpha: float, k: int) -> float:
    counts: dict[tuple, int] = {}
    total = 0.0
    for rank, cid in enumerate(ids[:k], start=1):
        if cid not in relevant:
            continue
        if cid not in clusters:
            raise MissingClusterLabel(cid)
        c = clusters.key(cid)
        n_c = counts.get(c, 0)
        total += _gain(alpha, n_c, rank)
        counts[c] = n_c + 1
    return total


def ideal_order(relevant: Collection[str], clusters: ClusterAssignment, k: int) -> list[str]:
    """Greedy ideal: each rank takes a document from the least-used cluster.

    With one label per document the marginal gain at a rank depends only on the
    chosen cluster's running count, so this greedy choice is the best possible
    ordering. Relevant documents lacking a label count as singleton clusters.
    """
    groups: dict[tuple, list[str]] = {}
    for cid in sorted(relevant):
        c = clusters.key(cid) if cid in clusters else ("noise", cid)
        groups.setdefault(c, []).append(cid)
    heap = [(0, c) for c in sorted(groups)]
    heapq.heapify(heap)
    pos = {c: 0 for c in groups}
    order: list[str] = []
    while heap and len(order) < k:
        n, c = heapq.heappop(heap)
        order.append(groups[c][pos[c]])
        pos[c] += 1
        if pos[c] < len(groups[c]):
            heapq.heappush(heap, (n + 1, c))
    return order


def alpha_ndcg(ranked: RankedList | Sequence[str], relevant: Collection[str], clusters: ClusterAssignment,
               alpha: float = DEFAULT_ALPHA, k: int | None = None) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    ids = ranked.ids() if isinstance(ranked, RankedList) else list(ranked)
    k = len(ids) if k is None else k
    if k < 1:
        raise ValueError("k must be positive")
    rel = set(relevant)
    if not rel:
        return 0.0
    dcg = alpha_dcg(ids, rel, clusters, alpha, k)
    full = _with_singletons(clusters, rel)
    # same expression and summation order as the DCG, so the ideal ordering scores exactly 1
    idcg = alpha_dcg(ideal_order(rel, full, k), rel, full, alpha, k)
    return dcg / idcg if idcg > 0 else 0.0


def _with_singletons(clusters: ClusterAssignment, relevant: set[str]) -> ClusterAssignment:
    missing = relevant.difference(clusters.labels)
    if not missing:
        return clusters
    return ClusterAssignment({**clusters.labels, **{cid: NOISE for cid in missing}})


def baseline_cluster(embeddings: Mapping[str, Sequence[float] | np.ndarray], distance_threshold: float,
                     block: int = 1024) -> ClusterAssignment:
    """Single-linkage clusters: connected components of the graph joining pairs
    whose cosine distance is at most ``distance_threshold``.

    Labels are numbered by first appearance in sorted-id order. Zero vectors
    have no defined direction and stay singletons.
    """
    ids = sorted(embeddings)
    if not ids:
        return ClusterAssignment({})
    x = np.asarray([np.asarray(embeddings[i], dtype=float) for i in ids])
    if x.ndim != 2:
        raise ValueError("embeddings must share one dimension")
    norms = np.linalg.norm(x, axis=1)
    ok = norms > 0
    x[ok] /= norms[ok, None]
    rows, cols = [], []
    n = len(ids)
    for start in range(0, n, block):
        sims = x[start:start + block] @ x.T
        r, c = np.nonzero(1.0 - sims <= distance_threshold)
        keep = ok[start + r] & ok[c]
        rows.append(start + r[keep])
        cols.append(c[keep])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    relabel: dict[int, int] = {}
    labels = {}
    for cid, raw in zip(ids, comp):
        labels[cid] = relabel.setdefault(int(raw), len(relabel))
    return ClusterAssignment(labels)
