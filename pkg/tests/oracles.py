"""Deliberately naive reference implementations used as test oracles."""

from __future__ import annotations

import math
from collections import deque


def bfs_oracle(graph, seeds, max_depth, max_papers, unavailable=frozenset()):
    """Level-by-level BFS with a visited set and a global size budget.

    Returns (order, depth). Nodes in ``unavailable`` contribute no neighbours.
    """
    order = []
    depth = {}
    for s in seeds:
        if s not in depth:
            depth[s] = 0
            order.append(s)
    level = [s for s in order]
    d = 0
    full = len(order) >= max_papers
    while level and d < max_depth and not full:
        nxt = []
        for u in level:
            if full:
                break
            if u in unavailable:
                continue
            for v in graph.get(u, []):
                if v == u or v in depth:
                    continue
                depth[v] = d + 1
                order.append(v)
                nxt.append(v)
                if len(order) >= max_papers:
                    full = True
                    break
        level = nxt
        d += 1
    return order, depth


def brute_pr(ids, truth, k):
    top = ids[:k]
    hits = len(set(top) & set(truth))
    return hits / len(top) if top else 0.0, hits / len(truth)


def plain_ndcg(ids, relevant, k):
    dcg = sum(1 / math.log2(r + 1) for r, d in enumerate(ids[:k], start=1) if d in relevant)
    idcg = sum(1 / math.log2(r + 1) for r in range(1, min(k, len(relevant)) + 1))
    return dcg / idcg if idcg else 0.0


def union_find_clusters(vectors: dict, threshold: float) -> list[frozenset]:
    ids = sorted(vectors)
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def cos(a, b):
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(x * x for x in b))
        if na == 0 or nb == 0:
            return None
        return sum(x * y for x, y in zip(a, b)) / (na * nb)

    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            c = cos(vectors[a], vectors[b])
            if c is not None and 1 - c <= threshold:
                parent[find(a)] = find(b)
    groups: dict = {}
    for i in ids:
        groups.setdefault(find(i), set()).add(i)
    return sorted((frozenset(g) for g in groups.values()), key=lambda g: min(g))


def min_hop_distance(adj, sources, targets):
    """Multi-source BFS; returns the shortest distance from any source to any target, or None."""
    targets = set(targets)
    seen = {s: 0 for s in sources}
    q = deque(sources)
    while q:
        u = q.popleft()
        if u in targets:
            return seen[u]
        for v in adj.get(u, ()):
            if v not in seen:
                seen[v] = seen[u] + 1
                q.append(v)
    return None


def distance_class_oracle(adj, a_q, a_c):
    d = min_hop_distance(adj, sorted(a_q), a_c)
    if d is None or d >= 4:
        return "d4plus"
    return f"d{d}"
