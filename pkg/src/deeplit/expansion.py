"""Breadth-first citation-graph expansion of a seed set under depth and size budgets."""

from __future__ import annotations

import asyncio
import inspect
import itertools
import json
import logging
from collections import Counter, deque
from collections.abc import Awaitable, Callable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Union

from .core import PaperRecord, dedupe, read_jsonl, write_jsonl
from .errors import NotFound, UpstreamError
from .providers.references import Incomplete

logger = logging.getLogger(__name__)

RefsResult = Union[Sequence[PaperRecord], Incomplete]
RefsFn = Callable[[PaperRecord], Union[Awaitable[RefsResult], RefsResult]]


@dataclass(frozen=True)
class ExpansionConfig:
    max_depth: int = 3
    max_papers: int = 100_000
    prefetch: int = 16  # queued papers whose bibliographies are fetched ahead of time; 0 disables

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.max_papers < 1:
            raise ValueError("max_papers must be >= 1")
        if self.prefetch < 0:
            raise ValueError("prefetch must be >= 0")


@dataclass
class CandidatePool:
    query_id: str
    papers: list[PaperRecord] = field(default_factory=list)
    depth_of: dict[str, int] = field(default_factory=dict)
    seed_ids: frozenset[str] = frozenset()
    skipped: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.papers)

    def ids(self) -> list[str]:
        return [p.canonical_id for p in self.papers]

    def depth_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.depth_of.values()).items()))

    def summary(self) -> dict[str, Any]:
        return {
            "query_id": self.query_id,
            "n_papers": len(self.papers),
            "n_seeds": len(self.seed_ids),
            "depth_histogram": {str(k): v for k, v in self.depth_histogram().items()},
            "skipped": list(self.skipped),
        }

    def write(self, path: str | Path) -> None:
        path = Path(path)
        write_jsonl(path, (
            {**p.to_dict(), "depth": self.depth_of[p.canonical_id], "seed": p.canonical_id in self.seed_ids}
            for p in self.papers
        ))
        path.with_suffix(".summary.json").write_text(
            json.dumps(self.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path, query_id: str) -> CandidatePool:
        rows = read_jsonl(path)
        papers = [PaperRecord.from_dict(r) for r in rows]
        summary_path = Path(path).with_suffix(".summary.json")
        skipped = json.loads(summary_path.read_text())["skipped"] if summary_path.exists() else []
        return cls(
            query_id=query_id,
            papers=papers,
            depth_of={r["canonical_id"]: int(r["depth"]) for r in rows},
            seed_ids=frozenset(r["canonical_id"] for r in rows if r.get("seed")),
            skipped=skipped,
        )


async def _call(refs: RefsFn, paper: PaperRecord) -> RefsResult:
    result = refs(paper)
    if inspect.isawaitable(result):
        result = await result
    return result


async def expand(seeds: Sequence[PaperRecord], cfg: ExpansionConfig, refs: RefsFn,
                 query_id: str = "") -> CandidatePool:
    """Expand ``seeds`` along bibliographic references, breadth first.

    Papers are dequeued FIFO; one dequeued at depth >= ``cfg.max_depth``
    contributes nothing. Every unseen reference joins the pool at its parent's
    depth + 1, in provider order, and expansion stops the moment the pool
    reaches ``cfg.max_papers`` (even midway through a bibliography). Seeds are
    never truncated. Papers whose bibliography is unavailable are skipped.

    Bibliographies of upcoming queue entries may be fetched concurrently, but
    admission follows the sequential queue order, so the result only depends
    on what ``refs`` returns.
    """
    seeds = dedupe(seeds)
    final = list(seeds)
    index = {p.canonical_id: i for i, p in enumerate(final)}
    depth_of = {p.canonical_id: 0 for p in final}
    queue: deque[tuple[PaperRecord, int]] = deque((p, 0) for p in final)
    pending: dict[str, asyncio.Task] = {}
    skipped: list[str] = []

    def schedule_ahead() -> None:
        for nxt, d in itertools.islice(queue, cfg.prefetch):
            if d < cfg.max_depth and nxt.canonical_id not in pending:
                pending[nxt.canonical_id] = asyncio.ensure_future(_call(refs, nxt))

    try:
        while queue and len(final) < cfg.max_papers:
            current, depth = queue.popleft()
            if depth >= cfg.max_depth:
                continue
            if cfg.prefetch:
                schedule_ahead()
            task = pending.pop(current.canonical_id, None)
            try:
                result = await task if task is not None else await _call(refs, current)
            except (NotFound, UpstreamError) as exc:
                logger.warning("skipping %s: %s", current.canonical_id, exc)
                skipped.append(current.canonical_id)
                continue
            if isinstance(result, Incomplete):
                logger.warning("skipping %s: %s", current.canonical_id, result.reason)
                skipped.append(current.canonical_id)
                continue

            ref_ids = [r.canonical_id for r in result if r.canonical_id != current.canonical_id]
            slot = index[current.canonical_id]
            final[slot] = replace(final[slot], references=tuple(dict.fromkeys(ref_ids)))

            for new in result:
                cid = new.canonical_id
                if cid in depth_of:
                    continue
                depth_of[cid] = depth + 1
                index[cid] = len(final)
                final.append(new)
                queue.append((new, depth + 1))
                if len(final) >= cfg.max_papers:
                    break
    finally:
        for t in pending.values():
            t.cancel()
        if pending:
            await asyncio.gather(*pending.values(), return_exceptions=True)

    return CandidatePool(query_id=query_id, papers=final, depth_of=depth_of,
                         seed_ids=frozenset(p.canonical_id for p in seeds), skipped=skipped)
