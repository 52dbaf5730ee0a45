"""Co-authorship-graph hop distance between a query paper's authors and a candidate's.

Neighborhoods come from each author's most recent works (bounded degree), so
missing edges can only push a pair to a larger distance class.
"""

from __future__ import annotations

import asyncio
import logging
from collections import Counter
from collections.abc import Awaitable, Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from .cache import DiskCache
from .core import arxiv_doi, normalize_arxiv_id, normalize_doi, normalize_openalex_id
from .errors import NotFound, Unresolvable, UpstreamError
from .judge import JudgeVerdict
from .providers.openalex import AuthorWork, OpenAlexClient

logger = logging.getLogger(__name__)

DEFAULT_MAX_PAGES = 5
DEFAULT_PER_PAGE = 200

WorksFn = Callable[[str], Awaitable[Sequence[AuthorWork]]]


class DistanceClass(str, Enum):
    D0 = "d0"
    D1 = "d1"
    D2 = "d2"
    D3 = "d3"
    D4PLUS = "d4plus"


CLASS_ORDER = tuple(DistanceClass)


@dataclass(frozen=True)
class AuthorNeighborhood:
    author_id: str
    coauthors: frozenset[str]
    truncated: bool = False
    works_fetched: int = 0

    def __post_init__(self) -> None:
        if self.author_id in self.coauthors:
            raise ValueError(f"{self.author_id} listed as its own co-author")


@dataclass(frozen=True)
class PairDistance:
    query_id: str
    candidate_id: str
    d_class: DistanceClass | None
    resolvable: bool = True

    def __post_init__(self) -> None:
        if self.resolvable != (self.d_class is not None):
            raise ValueError("d_class is set exactly when the pair is resolvable")


def neighborhood_from_works(author_id: str, works: Iterable[AuthorWork], cap: int) -> AuthorNeighborhood:
    works = list(works)
    co = {a for w in works for a in w.author_ids}
    co.discard(author_id)
    return AuthorNeighborhood(author_id, frozenset(co), truncated=len(works) >= cap, works_fetched=len(works))


class NeighborhoodStore:
    """Memoized per-author co-author sets; concurrent requests for one author share a fetch."""

    def __init__(self, fetch: WorksFn, cap: int = DEFAULT_MAX_PAGES * DEFAULT_PER_PAGE,
                 cache: DiskCache | None = None) -> None:
        self.fetch = fetch
        self.cap = cap
        self.cache = cache
        self._tasks: dict[str, asyncio.Task] = {}
        self.unresolved: set[str] = set()

    @classmethod
    def for_openalex(cls, client: OpenAlexClient, max_pages: int = DEFAULT_MAX_PAGES,
                     per_page: int = DEFAULT_PER_PAGE, cache: DiskCache | None = None) -> NeighborhoodStore:
        async def fetch(author_id: str) -> list[AuthorWork]:
            return await client.fetch_author_works(author_id, max_pages=max_pages, per_page=per_page)
        return cls(fetch, cap=max_pages * per_page, cache=cache)

    async def _load(self, author_id: str) -> AuthorNeighborhood:
        key = {"author": author_id, "cap": self.cap}
        if self.cache is not None and (hit := self.cache.get_json("neighborhood", key)) is not None:
            return AuthorNeighborhood(author_id, frozenset(hit["coauthors"]), hit["truncated"], hit["works_fetched"])
        try:
            works = await self.fetch(author_id)
        except (NotFound, UpstreamError) as exc:
            logger.warning("no co-author list for %s: %s", author_id, exc)
            self.unresolved.add(author_id)
            return AuthorNeighborhood(author_id, frozenset())
        nb = neighborhood_from_works(author_id, works, self.cap)
        if self.cache is not None:
            self.cache.put_json("neighborhood", key, {"coauthors": sorted(nb.coauthors),
                                                      "truncated": nb.truncated,
                                                      "works_fetched": nb.works_fetched})
        return nb

    async def get(self, author_id: str) -> AuthorNeighborhood:
        author_id = normalize_openalex_id(author_id)
        task = self._tasks.get(author_id)
        if task is None:
            task = self._tasks[author_id] = asyncio.ensure_future(self._load(author_id))
        return await task

    async def many(self, author_ids: Iterable[str]) -> dict[str, AuthorNeighborhood]:
        ids = sorted(set(author_ids))
        got = await asyncio.gather(*(self.get(a) for a in ids))
        return dict(zip(ids, got))

    async def union(self, author_ids: Iterable[str]) -> frozenset[str]:
        out: set[str] = set()
        for nb in (await self.many(author_ids)).values():
            out |= nb.coauthors
        return frozenset(out)


async def build_neighborhoods(authors: Iterable[str], fetch: WorksFn,
                              cap: int = DEFAULT_MAX_PAGES * DEFAULT_PER_PAGE) -> dict[str, AuthorNeighborhood]:
    return await NeighborhoodStore(fetch, cap).many(authors)


def classify_distance(a_q: frozenset[str] | set[str], a_c: frozenset[str] | set[str],
                      l1_q: frozenset[str] | set[str], l2_q: frozenset[str] | set[str],
                      l1_c: frozenset[str] | set[str], *, query_id: str = "",
                      candidate_id: str = "") -> PairDistance:
    """First passing level wins: shared author, one hop, two hops (a shared
    collaborator or a second-hop reach), three hops, else four or more."""
    if not a_q or not a_c:
        raise Unresolvable(f"{query_id or '<query>'} / {candidate_id or '<candidate>'}: empty author set")
    if not a_q.isdisjoint(a_c):
        d = DistanceClass.D0
    elif not l1_q.isdisjoint(a_c):
        d = DistanceClass.D1
    elif not l1_q.isdisjoint(l1_c) or not l2_q.isdisjoint(a_c):
        d = DistanceClass.D2
    elif not l2_q.isdisjoint(l1_c):
        d = DistanceClass.D3
    else:
        d = DistanceClass.D4PLUS
    return PairDistance(query_id, candidate_id, d)


class QueryDistanceAnalyzer:
    """Distance classes for every candidate of one query.

    L1 of the query side is built once, the second hop only when a pair first
    needs it, and candidate-side neighborhoods only for pairs that get past the
    one-hop test (so authors already within one hop of the query are never
    fetched).
    """

    def __init__(self, query_id: str, query_authors: Iterable[str], store: NeighborhoodStore) -> None:
        self.query_id = query_id
        self.a_q = frozenset(normalize_openalex_id(a) for a in query_authors)
        self.store = store
        self._l1: asyncio.Task | None = None
        self._l2: asyncio.Task | None = None

    async def l1(self) -> frozenset[str]:
        if self._l1 is None:
            self._l1 = asyncio.ensure_future(self.store.union(self.a_q))
        return await self._l1

    async def _second_hop(self) -> frozenset[str]:
        return await self.store.union(await self.l1())

    async def l2(self) -> frozenset[str]:
        if self._l2 is None:
            self._l2 = asyncio.ensure_future(self._second_hop())
        return await self._l2

    async def classify(self, candidate_id: str, candidate_authors: Iterable[str]) -> PairDistance:
        a_c = frozenset(normalize_openalex_id(a) for a in candidate_authors)
        if not self.a_q or not a_c:
            return PairDistance(self.query_id, candidate_id, None, resolvable=False)
        l1_q = await self.l1()
        empty: frozenset[str] = frozenset()
        if not self.a_q.isdisjoint(a_c) or not l1_q.isdisjoint(a_c):
            return classify_distance(self.a_q, a_c, l1_q, empty, empty,
                                     query_id=self.query_id, candidate_id=candidate_id)
        l1_c = await self.store.union(a_c)
        l2_q = await self.l2() if l1_q.isdisjoint(l1_c) else empty
        return classify_distance(self.a_q, a_c, l1_q, l2_q, l1_c,
                                 query_id=self.query_id, candidate_id=candidate_id)

    async def classify_many(self, candidates: Sequence[tuple[str, Iterable[str]]]) -> list[PairDistance]:
        return list(await asyncio.gather(*(self.classify(cid, authors) for cid, authors in candidates)))


@dataclass(frozen=True)
class ResolvedWork:
    work_id: str
    author_ids: tuple[str, ...]


@dataclass
class Reconciliation:
    resolved: dict[str, ResolvedWork] = field(default_factory=dict)
    unresolved: list[str] = field(default_factory=list)


async def reconcile_arxiv_to_openalex(arxiv_ids: Sequence[str], client: OpenAlexClient) -> Reconciliation:
    """Map arXiv ids to OpenAlex works through their arXiv-issued DOIs."""
    ids = list(dict.fromkeys(normalize_arxiv_id(a) for a in arxiv_ids))
    if not ids:
        return Reconciliation()
    doi_of = {a: normalize_doi(arxiv_doi(a)) for a in ids}
    found = await client.resolve_ids_batched(list(doi_of.values()), "doi")
    out = Reconciliation()
    for a in ids:
        rec = found.get(doi_of[a])
        if rec is None or not rec.openalex_id:
            out.unresolved.append(a)
            continue
        out.resolved[a] = ResolvedWork(rec.openalex_id, tuple(sorted(rec.author_ids)))
    return out


@dataclass(frozen=True)
class DistanceDistribution:
    source: str
    counts: Mapping[DistanceClass, int]
    excluded: int = 0

    @property
    def n(self) -> int:
        return sum(self.counts.values())

    def percentages(self) -> dict[DistanceClass, float]:
        n = self.n
        return {c: (100.0 * self.counts.get(c, 0) / n if n else 0.0) for c in CLASS_ORDER}


def distance_distribution(pairs: Iterable[PairDistance], source: str = "") -> DistanceDistribution:
    """Class shares over resolvable pairs; unresolvable pairs are only counted as excluded."""
    counts: Counter[DistanceClass] = Counter()
    excluded = 0
    for p in pairs:
        if p.resolvable:
            counts[p.d_class] += 1
        else:
            excluded += 1
    return DistanceDistribution(source, {c: counts.get(c, 0) for c in CLASS_ORDER}, excluded)


def mean_sr_by_distance(pairs: Iterable[PairDistance],
                        verdicts: Iterable[JudgeVerdict]) -> dict[DistanceClass, float | None]:
    """Mean judge score per class, joined on (query_id, candidate_id); None for empty classes."""
    sr = {(v.query_id, v.candidate_id): v.sr_score for v in verdicts}
    buckets: dict[DistanceClass, list[int]] = {c: [] for c in CLASS_ORDER}
    for p in pairs:
        if p.resolvable and (p.query_id, p.candidate_id) in sr:
            buckets[p.d_class].append(sr[(p.query_id, p.candidate_id)])
    return {c: (sum(v) / len(v) if v else None) for c, v in buckets.items()}
