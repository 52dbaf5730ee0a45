import asyncio
import math

import httpx
import pytest

from deeplit.cache import DiskCache
from deeplit.core import PaperRecord, Provider, arxiv_doi
from deeplit.errors import NotFound
from deeplit.providers import (
    ArxivClient,
    Incomplete,
    OpenAlexClient,
    ProviderConfig,
    ReferenceFetcher,
    SemanticScholarClient,
)
from deeplit.query_gen import translate_query
from fakeworld import ARXIV, OPENALEX, S2, FakePaper, FakeWorld


def fast(base, **kw):
    return ProviderConfig(base, max_concurrent=8, requests_per_second=1e6, backoff_base_ms=1, **kw)


def clients(world, cache=None, offline=False):
    http = httpx.AsyncClient(transport=world.transport())
    return (ArxivClient.from_config(fast(ARXIV), http, cache, offline),
            OpenAlexClient.from_config(fast(OPENALEX), http, cache, offline),
            SemanticScholarClient.from_config(fast(S2), http, cache, offline))


def arx(aid):
    return PaperRecord(canonical_id=f"arxiv:{aid}", arxiv_id=aid)


def paper(aid, refs=(), authors=("A1",), **kw):
    return FakePaper(aid, f"Paper {aid}", f"Abstract {aid}.", list(authors), list(refs), "retrieval", **kw)


def world_of(papers, **kw):
    return FakeWorld({p.arxiv_id: p for p in papers}, **kw)


class TestSearch:
    @pytest.mark.parametrize("which", ["arxiv", "openalex", "s2"])
    def test_search_and_cache(self, tmp_path, which):
        world = FakeWorld()
        cache = DiskCache(tmp_path)
        idx = ["arxiv", "openalex", "s2"].index(which)
        pq = translate_query("dense retrieval rerank", which, page_size=5)
        first = asyncio.run(clients(world, cache)[idx].search(pq))
        n = world.total_calls
        second = asyncio.run(clients(world, cache, offline=True)[idx].search(pq))
        assert 0 < len(first) <= 5
        assert first == second
        assert world.total_calls == n
        assert all(r.arxiv_id for r in first)
        assert {r.source_provider for r in first} == {Provider(which)}

    @pytest.mark.parametrize("which", [0, 1, 2])
    def test_zero_hits_is_empty(self, which):
        pq = translate_query("zzzz qqqq", ["arxiv", "openalex", "s2"][which])
        assert asyncio.run(clients(FakeWorld())[which].search(pq)) == []

    def test_429_then_success(self):
        world = FakeWorld()
        world.fail["openalex.search"] = 2
        _, oa, _ = clients(world)
        asyncio.run(oa.search(translate_query("graph node", "openalex")))
        assert world.calls["openalex.search"] == 3


class TestReferences:
    def test_union_prefers_openalex_order(self):
        refs = [paper(f"2001.{i:05d}") for i in range(1, 39)]
        target = paper("2301.00001", refs=[r.arxiv_id for r in refs[:30]],
                       s2_missing_refs=[r.arxiv_id for r in refs[20:30]],
                       s2_only_refs=[r.arxiv_id for r in refs[30:]])
        world = world_of([target, *refs])
        _, oa, s2 = clients(world)
        oa_refs = asyncio.run(oa.fetch_references(arx(target.arxiv_id)))
        s2_refs = asyncio.run(s2.fetch_references(arx(target.arxiv_id)))
        assert (len(oa_refs), len(s2_refs)) == (30, 28)
        merged = asyncio.run(ReferenceFetcher(oa, s2).fetch_references(target_id := f"arxiv:{target.arxiv_id}"))
        ids = [r.canonical_id for r in merged]
        assert len(ids) == len(set(ids)) == 38 <= 58
        assert ids[:30] == [r.canonical_id for r in oa_refs]
        assert target_id not in ids
        # merged records carry both providers' fields
        assert merged[0].openalex_id and merged[0].s2_id

    def test_no_bibliography_anywhere_is_incomplete(self):
        world = world_of([paper("2301.00001")])
        _, oa, s2 = clients(world)
        out = asyncio.run(ReferenceFetcher(oa, s2).fetch_references("arxiv:2301.00001"))
        assert isinstance(out, Incomplete)

    def test_fallback_resolver_fills_gap(self):
        world = world_of([paper("2301.00001")])
        _, oa, s2 = clients(world)

        async def fallback(p):
            return [arx("1111.22222"), arx("1111.22222")]
        out = asyncio.run(ReferenceFetcher(oa, s2, fallback).fetch_references("arxiv:2301.00001"))
        assert [r.canonical_id for r in out] == ["arxiv:1111.22222"]

    def test_only_at_s2(self):
        refs = [paper("2001.00001"), paper("2001.00002")]
        target = paper("2301.00001", refs=["2001.00001", "2001.00002"])
        world = world_of([target, *refs])
        world.hidden["openalex"].add(target.arxiv_id)
        _, oa, s2 = clients(world)
        out = asyncio.run(ReferenceFetcher(oa, s2).fetch_references("arxiv:2301.00001"))
        assert [r.canonical_id for r in out] == ["arxiv:2001.00001", "arxiv:2001.00002"]
        assert all(r.source_provider is Provider.S2 for r in out)

    def test_unknown_everywhere(self):
        _, oa, s2 = clients(world_of([paper("2301.00001")]))
        with pytest.raises(NotFound):
            asyncio.run(ReferenceFetcher(oa, s2).fetch_references("arxiv:9999.99999"))

    def test_title_only_id_cannot_be_fetched(self):
        _, oa, s2 = clients(world_of([paper("2301.00001")]))
        with pytest.raises(NotFound):
            asyncio.run(ReferenceFetcher(oa, s2).fetch_references("title:abc"))


def prolific_world(n_works, author="AZ"):
    return world_of([paper(f"20{i // 1000:02d}.{i % 1000 + 1:05d}", authors=(author, f"C{i}"))
                     for i in range(n_works)])


class TestAuthorWorks:
    def test_three_works_one_page(self):
        world = prolific_world(3)
        _, oa, _ = clients(world)
        works = asyncio.run(oa.fetch_author_works("https://openalex.org/AZ"))
        assert len(works) == 3
        assert world.calls["openalex.works.author"] == 1
        assert all("AZ" in w.author_ids for w in works)

    def test_cap_at_1000_most_recent(self):
        world = prolific_world(1200)
        _, oa, _ = clients(world)
        works = asyncio.run(oa.fetch_author_works("AZ", max_pages=5, per_page=200))
        assert len(works) == 1000
        assert world.calls["openalex.works.author"] == 5
        dates = [w.publication_date for w in works]
        assert dates == sorted(dates, reverse=True)
        newest = {p.work_id for p in world.works_of("AZ")[:1000]}
        assert {w.work_id for w in works} == newest

    def test_per_page_capped_at_provider_max(self):
        world = prolific_world(450)
        _, oa, _ = clients(world)
        works = asyncio.run(oa.fetch_author_works("AZ", max_pages=2, per_page=500))
        assert len(works) == 400


def doi_world(n):
    return world_of([paper(f"2201.{i:05d}") for i in range(1, n + 1)])


class TestBatchedResolution:
    @pytest.mark.parametrize("n", [1, 50, 51, 120, 500])
    def test_request_count(self, n):
        world = doi_world(n)
        _, oa, _ = clients(world)
        ids = [arxiv_doi(f"2201.{i:05d}") for i in range(1, n + 1)]
        out = asyncio.run(oa.resolve_ids_batched(ids, "doi"))
        assert world.calls["openalex.works.doi"] == math.ceil(n / 50)
        assert len(out) == n

    def test_partial_resolution(self):
        world = doi_world(872)
        _, oa, _ = clients(world)
        ids = [arxiv_doi(f"2201.{i:05d}") for i in range(1, 1001)]
        out = asyncio.run(oa.resolve_ids_batched(ids, "doi"))
        assert len(out) == 872
        assert world.calls["openalex.works.doi"] == 20
        assert list(out) == ids[:872]

    def test_all_unknown(self):
        _, oa, _ = clients(doi_world(3))
        assert asyncio.run(oa.resolve_ids_batched(["10.1/none", "10.1/nada"], "doi")) == {}

    def test_authors(self):
        world = prolific_world(3)
        _, oa, _ = clients(world)
        out = asyncio.run(oa.resolve_ids_batched(["AZ", "C1", "NOPE"], "author"))
        assert set(out) == {"AZ", "C1"}

    def test_empty_and_bad_kind(self):
        _, oa, _ = clients(doi_world(1))
        with pytest.raises(ValueError):
            asyncio.run(oa.resolve_ids_batched([], "doi"))
        with pytest.raises(ValueError):
            asyncio.run(oa.resolve_ids_batched(["x"], "venue"))
