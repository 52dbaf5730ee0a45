from __future__ import annotations

from ..core import PaperRecord, Provider
from ..errors import MalformedPayload, NotFound
from ..query_gen import ProviderQuery
from .arxiv import records_from_payloads
from .base import ProviderClient

PAPER_FIELDS = "paperId,externalIds,title,abstract,authors"
MAX_SEARCH_LIMIT = 100
MAX_REFERENCES = 1000


class SemanticScholarClient(ProviderClient):
    name = "s2"

    async def search(self, pq: ProviderQuery) -> list[PaperRecord]:
        params = self._params({**pq.params(), "limit": min(pq.page_size, MAX_SEARCH_LIMIT),
                               "fields": PAPER_FIELDS})
        data, entry = await self.gateway.request_json("s2.search", f"{self.base_url}/paper/search",
                                                      params=params)
        if not isinstance(data, dict):
            raise MalformedPayload("S2 search response is not an object")
        return records_from_payloads((data.get("data") or [])[:pq.page_size], Provider.S2, entry.created_at)

    @staticmethod
    def paper_key(paper: PaperRecord) -> str:
        if paper.s2_id:
            return paper.s2_id
        if paper.arxiv_id:
            return f"arXiv:{paper.arxiv_id}"
        if paper.doi:
            return f"DOI:{paper.doi}"
        raise NotFound(f"{paper.canonical_id}: no identifier Semantic Scholar can resolve")

    async def fetch_references(self, paper: PaperRecord) -> list[PaperRecord]:
        params = self._params({"fields": PAPER_FIELDS, "limit": MAX_REFERENCES})
        data, entry = await self.gateway.request_json(
            "s2.references", f"{self.base_url}/paper/{self.paper_key(paper)}/references", params=params)
        if not isinstance(data, dict):
            raise MalformedPayload("S2 references response is not an object")
        cited = [row.get("citedPaper") for row in data.get("data") or [] if row.get("citedPaper")]
        refs = records_from_payloads(cited, Provider.S2, entry.created_at)
        return [r for r in refs if r.canonical_id != paper.canonical_id]
