from __future__ import annotations

import asyncio
import logging
from collections.abc import Awaitable, Callable, Sequence
from dataclasses import dataclass

from ..core import PaperRecord, Provider, dedupe
from ..errors import NotFound, OfflineCacheMiss, UpstreamError
from .openalex import OpenAlexClient
from .s2 import SemanticScholarClient

logger = logging.getLogger(__name__)

ReferenceResolver = Callable[[PaperRecord], Awaitable[Sequence[PaperRecord]]]


@dataclass(frozen=True)
class Incomplete:
    """No provider produced a bibliography for ``paper_id``."""

    paper_id: str
    reason: str = "no references at any provider"


def record_from_canonical_id(canonical_id: str) -> PaperRecord:
    prefix, _, rest = canonical_id.partition(":")
    field = {"arxiv": "arxiv_id", "doi": "doi", "openalex": "openalex_id", "s2": "s2_id"}.get(prefix)
    if field is None or not rest:
        raise NotFound(f"{canonical_id}: cannot be looked up by identifier")
    return PaperRecord(canonical_id=canonical_id, source_provider=Provider.MANUAL, **{field: rest})


class ReferenceFetcher:
    """Union of OpenAlex and Semantic Scholar bibliographies.

    OpenAlex ordering comes first, S2-only references are appended. When both
    providers are empty the result is ``Incomplete``; a ``fallback`` resolver
    (e.g. a PDF bibliography parser) is then consulted if one is plugged in.
    """

    def __init__(self, openalex: OpenAlexClient | None, s2: SemanticScholarClient | None,
                 fallback: ReferenceResolver | None = None) -> None:
        self.openalex = openalex
        self.s2 = s2
        self.fallback = fallback

    async def _one(self, client, paper: PaperRecord):
        if client is None:
            return NotFound("provider disabled")
        try:
            return await client.fetch_references(paper)
        except OfflineCacheMiss:
            raise
        except (NotFound, UpstreamError) as exc:
            return exc

    async def fetch_references(self, paper: PaperRecord | str) -> list[PaperRecord] | Incomplete:
        if isinstance(paper, str):
            paper = record_from_canonical_id(paper)
        oa, s2 = await asyncio.gather(self._one(self.openalex, paper), self._one(self.s2, paper))
        if isinstance(oa, NotFound) and isinstance(s2, NotFound):
            raise NotFound(f"{paper.canonical_id}: unknown to every reference provider")
        for name, res in (("openalex", oa), ("s2", s2)):
            if isinstance(res, UpstreamError):
                logger.warning("%s references for %s failed: %s", name, paper.canonical_id, res)
        merged = [
            r for r in dedupe([*(oa if isinstance(oa, list) else []), *(s2 if isinstance(s2, list) else [])])
            if r.canonical_id != paper.canonical_id
        ]
        if merged:
            return merged
        if self.fallback is not None:
            extra = [r for r in dedupe(await self.fallback(paper)) if r.canonical_id != paper.canonical_id]
            if extra:
                return extra
        return Incomplete(paper.canonical_id)

    __call__ = fetch_references
