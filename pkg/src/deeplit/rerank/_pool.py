from __future__ import annotations

from ..core import PaperRecord, dedupe


def pool_papers(pool) -> list[PaperRecord]:
    """Accept a CandidatePool or any iterable of PaperRecords."""
    papers = getattr(pool, "papers", pool)
    return dedupe(papers)
