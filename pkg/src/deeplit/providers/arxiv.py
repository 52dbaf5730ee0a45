from __future__ import annotations

import xml.etree.ElementTree as ET
from datetime import datetime

from ..core import PaperRecord, Provider, canonicalize
from ..errors import MalformedPayload, MissingIdentity
from ..query_gen import ProviderQuery
from .base import ProviderClient

ATOM = "{http://www.w3.org/2005/Atom}"
ARXIV_NS = "{http://arxiv.org/schemas/atom}"


def parse_atom(xml_bytes: bytes) -> list[dict]:
    """Flatten an arXiv Atom feed into one dict per entry."""
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise MalformedPayload("arXiv response is not valid Atom XML") from exc
    entries = []
    for entry in root.findall(f"{ATOM}entry"):
        entries.append({
            "id": entry.findtext(f"{ATOM}id", default=""),
            "title": entry.findtext(f"{ATOM}title", default=""),
            "summary": entry.findtext(f"{ATOM}summary", default=""),
            "doi": entry.findtext(f"{ARXIV_NS}doi"),
            "authors": [{"name": a.findtext(f"{ATOM}name", default="")}
                        for a in entry.findall(f"{ATOM}author")],
        })
    return entries


def records_from_payloads(payloads, provider: Provider, fetched_at: datetime) -> list[PaperRecord]:
    out = []
    for p in payloads:
        try:
            out.append(canonicalize(p, provider, fetched_at))
        except MissingIdentity:
            continue
    return out


class ArxivClient(ProviderClient):
    name = "arxiv"

    async def search(self, pq: ProviderQuery) -> list[PaperRecord]:
        params = self._params({**pq.params(), "start": 0, "max_results": pq.page_size})
        entry = await self.gateway.request("arxiv.search", f"{self.base_url}/query", params=params)
        # arXiv error feeds come back as a single entry whose id points at /api/errors
        payloads = [p for p in parse_atom(entry.payload) if "/api/errors" not in p["id"]]
        return records_from_payloads(payloads[:pq.page_size], Provider.ARXIV, entry.created_at)
