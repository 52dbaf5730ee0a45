"""Pointwise LLM debate scoring: arguments for/against, then a 0-100 score per candidate."""

from __future__ import annotations

import asyncio
import logging
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .. import prompts
from ..cache import DiskCache, text_hash
from ..core import Method, PaperRecord, QueryDocument, RankedList
from ..llm import ChatEndpoint
from ._pool import pool_papers

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 10

_PROB_RE = re.compile(r"<probability>(.*?)(?:</probability>|(?=<probability>)|\Z)", re.S | re.I)
_FOR_RE = re.compile(r"<arguments_for>(.*?)</arguments_for>", re.S | re.I)
_AGAINST_RE = re.compile(r"<arguments_against>(.*?)</arguments_against>", re.S | re.I)
_ID_RE = re.compile(r"paper[_ ]?id\s*[:=]\s*(.+)", re.I)
_SCORE_LINE_RE = re.compile(r"score\s*[:=]\s*(.+)", re.I)
_SCORE_VALUE_RE = re.compile(r"^\[?\s*(\d{1,3})\s*\]?\s*(?:/\s*100)?\s*[.,;]?$")


@dataclass(frozen=True)
class DebateVerdict:
    paper_id: str
    arguments_for: str
    arguments_against: str
    score: int

    def __post_init__(self) -> None:
        if not 0 <= self.score <= 100:
            raise ValueError(f"debate score out of range: {self.score}")


@dataclass(frozen=True)
class MalformedBlock:
    index: int
    paper_id: str | None
    reason: str


@dataclass(frozen=True)
class DebateParseReport:
    missing: tuple[str, ...] = ()
    malformed: tuple[MalformedBlock, ...] = ()
    duplicates: tuple[str, ...] = ()
    unexpected: tuple[str, ...] = ()

    @property
    def clean(self) -> bool:
        return not (self.missing or self.malformed or self.duplicates or self.unexpected)


@dataclass(frozen=True)
class DebateParseResult:
    verdicts: list[DebateVerdict] = field(default_factory=list)
    report: DebateParseReport = field(default_factory=DebateParseReport)

    def by_id(self) -> dict[str, DebateVerdict]:
        return {v.paper_id: v for v in self.verdicts}


def _norm_id(raw: str) -> str:
    return raw.strip().strip("[]()\"'`*").strip().rstrip(",").strip()


def _last_before(matches: list[re.Match], lo: int, hi: int) -> str:
    text = ""
    for m in matches:
        if lo <= m.start() < hi:
            text = m.group(1).strip()
    return text


def parse_debate_response(text: str, expected_ids: Iterable[str],
                          aliases: Mapping[str, str] | None = None) -> DebateParseResult:
    """Extract one verdict per ``<probability>`` block.

    Never raises on content problems: malformed blocks, repeated ids (the last
    well-formed block wins), ids outside ``expected_ids`` and expected ids with
    no usable block all land in the report. ``aliases`` maps alternative labels
    (such as the candidate's list number) to expected ids.
    """
    expected = list(dict.fromkeys(expected_ids))
    lookup = {e.casefold(): e for e in expected}
    for alias, target in (aliases or {}).items():
        lookup.setdefault(alias.casefold(), target)

    fors = list(_FOR_RE.finditer(text))
    againsts = list(_AGAINST_RE.finditer(text))
    winners: dict[str, tuple[int, DebateVerdict]] = {}
    malformed: list[MalformedBlock] = []
    seen: dict[str, int] = {}
    unexpected: set[str] = set()
    prev_end = 0

    for i, m in enumerate(_PROB_RE.finditer(text)):
        body = m.group(1)
        lo, prev_end = prev_end, m.end()
        id_match = _ID_RE.search(body)
        if not id_match:
            malformed.append(MalformedBlock(i, None, "missing paper_id"))
            continue
        raw_id = _norm_id(id_match.group(1).splitlines()[0])
        pid = lookup.get(raw_id.casefold())
        if pid is None:
            unexpected.add(raw_id)
            continue
        seen[pid] = seen.get(pid, 0) + 1
        score_match = _SCORE_LINE_RE.search(body)
        if not score_match:
            malformed.append(MalformedBlock(i, pid, "missing score"))
            continue
        raw_score = score_match.group(1).splitlines()[0].strip()
        value = _SCORE_VALUE_RE.match(raw_score)
        if not value:
            malformed.append(MalformedBlock(i, pid, f"score not an integer: {raw_score!r}"))
            continue
        score = int(value.group(1))
        if score > 100:
            malformed.append(MalformedBlock(i, pid, f"score out of range: {score}"))
            continue
        verdict = DebateVerdict(
            paper_id=pid,
            arguments_for=_last_before(fors, lo, m.start()),
            arguments_against=_last_before(againsts, lo, m.start()),
            score=score,
        )
        winners[pid] = (m.start(), verdict)

    verdicts = [v for _, v in sorted(winners.values(), key=lambda item: item[0])]
    report = DebateParseReport(
        missing=tuple(e for e in expected if e not in winners),
        malformed=tuple(malformed),
        duplicates=tuple(sorted(pid for pid, n in seen.items() if n > 1)),
        unexpected=tuple(sorted(unexpected)),
    )
    return DebateParseResult(verdicts, report)


def format_candidates(papers: Sequence[PaperRecord]) -> str:
    blocks = []
    for i, p in enumerate(papers, start=1):
        lines = [f"[{i}] paper_id: {p.canonical_id}", f"Title: {p.title}"]
        lines.append(f"Abstract: {p.abstract or '(no abstract available)'}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


class DebateRanker:
    def __init__(self, llm: ChatEndpoint, batch_size: int = DEFAULT_BATCH_SIZE,
                 cache: DiskCache | None = None) -> None:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.llm = llm
        self.batch_size = batch_size
        self.cache = cache
        self.template = prompts.debate_template()
        self.calls = 0

    async def _ask(self, doc: QueryDocument, batch: Sequence[PaperRecord], attempt: str) -> DebateParseResult:
        messages = self.template.messages(query_full=doc.cleaned_text, reference_papers=format_candidates(batch))
        key = {"template": self.template.digest, "prompt": text_hash(messages[-1]["content"]),
               "model": self.llm.model_id, "attempt": attempt}
        text = self.cache.get_json("debate", key) if self.cache is not None else None
        if text is None:
            self.calls += 1
            text = await self.llm.complete(messages)
            if self.cache is not None:
                self.cache.put_json("debate", key, text)
        aliases = {str(i): p.canonical_id for i, p in enumerate(batch, start=1)}
        return parse_debate_response(text, [p.canonical_id for p in batch], aliases)

    async def _score_batch(self, doc: QueryDocument, batch: list[PaperRecord]) -> dict[str, tuple[int, tuple]]:
        parsed = await self._ask(doc, batch, "first")
        if not parsed.verdicts:
            logger.warning("debate batch unparseable (%s); retrying whole batch", parsed.report)
            parsed = await self._ask(doc, batch, "retry")
            if not parsed.verdicts:
                return {p.canonical_id: (0, ("malformed",)) for p in batch}
        scores = {v.paper_id: (v.score, ()) for v in parsed.verdicts}
        remainder = [p for p in batch if p.canonical_id not in scores]
        if remainder:
            again = await self._ask(doc, remainder, "remainder")
            for v in again.verdicts:
                scores[v.paper_id] = (v.score, ())
            for p in remainder:
                scores.setdefault(p.canonical_id, (0, ("unscored",)))
        return scores

    async def rank(self, doc: QueryDocument, pool) -> RankedList:
        papers = pool_papers(pool)
        batches = [papers[i:i + self.batch_size] for i in range(0, len(papers), self.batch_size)]
        results = await asyncio.gather(*(self._score_batch(doc, b) for b in batches))
        merged: dict[str, tuple[int, tuple]] = {}
        for r in results:
            merged.update(r)
        return RankedList.build(
            doc.query_id, Method.DEBATE,
            ((p, float(merged[p.canonical_id][0]), merged[p.canonical_id][1]) for p in papers),
        )


async def debate_rank(doc: QueryDocument, pool, llm: ChatEndpoint, batch_size: int = DEFAULT_BATCH_SIZE,
                      cache: DiskCache | None = None) -> RankedList:
    return await DebateRanker(llm, batch_size, cache).rank(doc, pool)
