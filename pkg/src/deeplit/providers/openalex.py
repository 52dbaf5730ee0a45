from __future__ import annotations

import asyncio
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

from ..core import (
    PaperRecord,
    Provider,
    arxiv_doi,
    dedupe,
    normalize_doi,
    normalize_openalex_id,
)
from ..errors import MalformedPayload, NotFound
from ..query_gen import ProviderQuery
from .arxiv import records_from_payloads
from .base import BATCH_LIMIT, ProviderClient, chunked

MAX_PER_PAGE = 200


@dataclass(frozen=True)
class AuthorWork:
    work_id: str
    author_ids: tuple[str, ...]
    publication_date: str | None = None


def _results(data: Any) -> list[dict]:
    if not isinstance(data, dict) or not isinstance(data.get("results"), list):
        raise MalformedPayload("OpenAlex list response lacks 'results'")
    return data["results"]


class OpenAlexClient(ProviderClient):
    name = "openalex"

    async def search(self, pq: ProviderQuery) -> list[PaperRecord]:
        per_page = min(pq.page_size, MAX_PER_PAGE)
        params = self._params({**pq.params(), "per-page": per_page})
        data, entry = await self.gateway.request_json("openalex.search", f"{self.base_url}/works", params=params)
        return records_from_payloads(_results(data)[:pq.page_size], Provider.OPENALEX, entry.created_at)

    def _work_key(self, paper: PaperRecord) -> str:
        if paper.openalex_id:
            return paper.openalex_id
        if paper.doi:
            return f"doi:{paper.doi}"
        if paper.arxiv_id:
            return f"doi:{arxiv_doi(paper.arxiv_id)}"
        raise NotFound(f"{paper.canonical_id}: no identifier OpenAlex can resolve")

    async def get_work(self, paper: PaperRecord) -> dict:
        data, _ = await self.gateway.request_json(
            "openalex.work", f"{self.base_url}/works/{self._work_key(paper)}", params=self._params({}))
        if not isinstance(data, dict):
            raise MalformedPayload("OpenAlex work response is not an object")
        return data

    async def works_by_openalex_ids(self, work_ids: Sequence[str]) -> list[PaperRecord]:
        """Resolve OpenAlex work ids in batches of 50; output follows input order."""
        ids = list(dict.fromkeys(normalize_openalex_id(w) for w in work_ids if w))
        if not ids:
            return []

        async def one(batch: list[str]):
            params = self._params({"filter": "openalex:" + "|".join(batch), "per-page": BATCH_LIMIT})
            data, entry = await self.gateway.request_json("openalex.works_batch", f"{self.base_url}/works",
                                                          params=params)
            return records_from_payloads(_results(data), Provider.OPENALEX, entry.created_at)

        batches = await asyncio.gather(*(one(b) for b in chunked(ids)))
        by_oa = {r.openalex_id: r for batch in batches for r in batch}
        return [by_oa[i] for i in ids if i in by_oa]

    async def fetch_references(self, paper: PaperRecord) -> list[PaperRecord]:
        work = await self.get_work(paper)
        refs = await self.works_by_openalex_ids(work.get("referenced_works") or [])
        return [r for r in refs if r.canonical_id != paper.canonical_id]

    async def fetch_author_works(self, author_id: str, max_pages: int = 5,
                                 per_page: int = MAX_PER_PAGE) -> list[AuthorWork]:
        """Most recent works first, at most ``max_pages * per_page`` of them."""
        author_id = normalize_openalex_id(author_id)
        per_page = min(per_page, MAX_PER_PAGE)
        works: list[AuthorWork] = []
        for page in range(1, max_pages + 1):
            params = self._params({
                "filter": f"author.id:{author_id}",
                "sort": "publication_date:desc",
                "per-page": per_page,
                "page": page,
            })
            data, _ = await self.gateway.request_json("openalex.author_works", f"{self.base_url}/works",
                                                      params=params)
            results = _results(data)
            for w in results:
                coauthors = tuple(dict.fromkeys(
                    normalize_openalex_id((a.get("author") or {}).get("id"))
                    for a in w.get("authorships") or ()
                    if (a.get("author") or {}).get("id")
                ))
                works.append(AuthorWork(normalize_openalex_id(w.get("id")), coauthors,
                                        w.get("publication_date")))
            if len(results) < per_page:
                break
        return works[:max_pages * per_page]

    async def resolve_ids_batched(self, ids: Sequence[str], kind: str) -> dict[str, Any]:
        """Resolve DOIs to PaperRecords or author ids to author objects, 50 ids per request.

        Ids that do not resolve are simply absent from the returned map.
        """
        if not ids:
            raise ValueError("ids must be non-empty")
        if kind == "doi":
            norm = list(dict.fromkeys(normalize_doi(i) for i in ids))
            endpoint, prefix = "works", "doi:"
        elif kind == "author":
            norm = list(dict.fromkeys(normalize_openalex_id(i) for i in ids))
            endpoint, prefix = "authors", "openalex:"
        else:
            raise ValueError(f"unknown id kind {kind!r}")

        async def one(batch: list[str]) -> dict[str, Any]:
            params = self._params({"filter": prefix + "|".join(batch), "per-page": BATCH_LIMIT})
            data, entry = await self.gateway.request_json(f"openalex.{endpoint}_batch",
                                                          f"{self.base_url}/{endpoint}", params=params)
            results = _results(data)
            if kind == "doi":
                recs = records_from_payloads(results, Provider.OPENALEX, entry.created_at)
                return {r.doi: r for r in dedupe(recs) if r.doi in wanted}
            return {normalize_openalex_id(a.get("id")): a for a in results
                    if normalize_openalex_id(a.get("id")) in wanted}

        wanted = set(norm)
        found: dict[str, Any] = {}
        for part in await asyncio.gather(*(one(b) for b in chunked(norm))):
            found.update(part)
        return {i: found[i] for i in norm if i in found}
