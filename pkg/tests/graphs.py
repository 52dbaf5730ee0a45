"""Random graph generators shared by property and acceptance tests."""

from __future__ import annotations

import random

from deeplit.core import PaperRecord
from deeplit.expansion import CandidatePool, ExpansionConfig, expand
from deeplit.providers import Incomplete


def random_citation_graph(rng: random.Random, max_nodes: int = 200) -> dict[str, list[str]]:
    n = rng.randint(1, max_nodes)
    nodes = [f"p{i:03d}" for i in range(n)]
    graph = {}
    for u in nodes:
        k = min(n, rng.choice([0, 1, 2, 3, 5, 8]))
        graph[u] = rng.sample(nodes, k)  # cycles and self-loops allowed
    return graph


def node(cid: str) -> PaperRecord:
    return PaperRecord(canonical_id=cid, title=cid)


def refs_fn(graph, unavailable=frozenset(), delay=None):
    async def refs(p: PaperRecord):
        if delay is not None:
            await delay(p.canonical_id)
        if p.canonical_id in unavailable:
            return Incomplete(p.canonical_id)
        return [node(v) for v in graph.get(p.canonical_id, []) if v != p.canonical_id]
    return refs


async def run_expand(graph, seeds, max_depth, max_papers, unavailable=frozenset(), prefetch=16,
                     delay=None) -> CandidatePool:
    cfg = ExpansionConfig(max_depth=max_depth, max_papers=max_papers, prefetch=prefetch)
    return await expand([node(s) for s in seeds], cfg, refs_fn(graph, unavailable, delay), query_id="q")


def random_coauthor_graph(rng: random.Random, max_nodes: int = 300) -> dict[str, set[str]]:
    n = rng.randint(2, max_nodes)
    nodes = [f"A{i:03d}" for i in range(n)]
    adj: dict[str, set[str]] = {u: set() for u in nodes}
    m = rng.randint(0, int(n * rng.choice([0.5, 1.0, 1.5, 2.5])))
    for _ in range(m):
        u, v = rng.sample(nodes, 2)
        adj[u].add(v)
        adj[v].add(u)
    return adj


def works_fetch(adj: dict[str, set[str]]):
    """Author-works function where every edge is one two-author paper."""
    from deeplit.providers import AuthorWork

    async def fetch(author_id: str):
        return [AuthorWork(f"W-{author_id}-{v}", (author_id, v)) for v in sorted(adj.get(author_id, ()))]
    return fetch


async def classify_all(adj, pairs, query_id="q"):
    """Classify (A_Q, A_C) pairs through the lazy analyzer, one analyzer per query set."""
    from deeplit.coauthor import NeighborhoodStore, QueryDistanceAnalyzer

    store = NeighborhoodStore(works_fetch(adj), cap=10 ** 9)
    out = []
    for a_q, a_c in pairs:
        analyzer = QueryDistanceAnalyzer(query_id, a_q, store)
        out.append(await analyzer.classify("c", a_c))
    return out
