"""LLM-as-a-judge Semantic Relevance: a 0-5 rubric grade scaled to 0-100."""

from __future__ import annotations

import asyncio
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import prompts
from .cache import DiskCache, text_hash
from .core import PaperRecord, QueryDocument, RankedList, read_jsonl, write_jsonl
from .errors import IncompleteJudging, MalformedResponse, UpstreamError
from .llm import ChatEndpoint, extract_json_object

logger = logging.getLogger(__name__)

SR_SCALE = 20
MAX_GRADE = 5
DEFAULT_K_MAX = 1000


@dataclass(frozen=True)
class JudgeVerdict:
    query_id: str
    candidate_id: str
    grade: int
    sr_score: int
    confidence: int
    summary: str
    model_id: str

    def __post_init__(self) -> None:
        if isinstance(self.grade, bool) or not isinstance(self.grade, int) or not 0 <= self.grade <= MAX_GRADE:
            raise ValueError(f"grade must be an integer in 0..{MAX_GRADE}, got {self.grade!r}")
        if self.sr_score != SR_SCALE * self.grade:
            raise ValueError(f"sr_score {self.sr_score} != {SR_SCALE} * grade {self.grade}")

    @classmethod
    def from_grade(cls, query_id: str, candidate_id: str, grade: int, confidence: int = 0,
                   summary: str = "", model_id: str = "") -> JudgeVerdict:
        return cls(query_id, candidate_id, grade, SR_SCALE * grade, confidence, summary, model_id)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> JudgeVerdict:
        return cls(**{k: d[k] for k in ("query_id", "candidate_id", "grade", "sr_score",
                                         "confidence", "summary", "model_id")})


def _as_int(value: Any, name: str) -> int:
    if isinstance(value, bool):
        raise MalformedResponse(f"{name} is a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and value.strip().lstrip("-").isdigit():
        return int(value.strip())
    raise MalformedResponse(f"{name} is not an integer: {value!r}")


def parse_judge_response(text: str) -> tuple[int, int, str]:
    """Return (grade, confidence, summary). Out-of-range grades are errors, never clamped."""
    obj = extract_json_object(text)
    body = obj.get("paper_to_paper_relevance", obj)
    if not isinstance(body, Mapping) or "relevanceScore" not in body:
        raise MalformedResponse("response has no relevanceScore")
    grade = _as_int(body["relevanceScore"], "relevanceScore")
    if not 0 <= grade <= MAX_GRADE:
        raise MalformedResponse(f"relevanceScore {grade} outside 0..{MAX_GRADE}")
    raw_conf = body.get("confidenceLevel", 0)
    try:
        confidence = _as_int(raw_conf, "confidenceLevel")
    except MalformedResponse:
        confidence = 0  # stored for audit only, so a bad value is not fatal
    summary = body.get("summaryStatement", "")
    return grade, confidence, summary if isinstance(summary, str) else str(summary)


def render_judge_messages(doc: QueryDocument, candidate: PaperRecord) -> list[dict[str, str]]:
    # candidate side is title + abstract only; the query side carries its cleaned full text
    q = doc.paper
    return prompts.judge_template().messages(
        query_title=q.title,
        query_abstract=q.abstract or "",
        query_full=doc.cleaned_text or "",
        candidate_title=candidate.title,
        candidate_abstract=candidate.abstract or "",
    )


class Judge:
    def __init__(self, llm: ChatEndpoint, cache: DiskCache | None = None, max_concurrency: int = 16) -> None:
        if max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        self.llm = llm
        self.cache = cache
        self.template = prompts.judge_template()
        self.max_concurrency = max_concurrency
        self.calls = 0

    def _key(self, doc: QueryDocument, candidate: PaperRecord) -> dict[str, str]:
        q = doc.paper
        query_hash = text_hash("\x00".join((q.title, q.abstract or "", doc.cleaned_text or "")))
        cand_hash = text_hash("\x00".join((candidate.title, candidate.abstract or "")))
        return {"template": self.template.digest, "query": query_hash,
                "candidate": cand_hash, "model": self.llm.model_id}

    async def judge_pair(self, doc: QueryDocument, candidate: PaperRecord) -> JudgeVerdict:
        if not candidate.title:
            raise ValueError(f"{candidate.canonical_id}: candidate has no title")
        key = self._key(doc, candidate)
        text = self.cache.get_json("judge", key) if self.cache is not None else None
        fresh = text is None
        if fresh:
            self.calls += 1
            text = await self.llm.complete(render_judge_messages(doc, candidate))
        grade, confidence, summary = parse_judge_response(text)
        # only responses that parse are cached, so a bad reply can be retried later
        if fresh and self.cache is not None:
            self.cache.put_json("judge", key, text)
        return JudgeVerdict.from_grade(doc.query_id, candidate.canonical_id, grade,
                                       confidence, summary, self.llm.model_id)

    async def judge_set(self, doc: QueryDocument, candidates: RankedList | Sequence[PaperRecord],
                        k_max: int = DEFAULT_K_MAX, min_completeness: float = 0.95) -> JudgeSetResult:
        if k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not 0.0 <= min_completeness <= 1.0:
            raise ValueError("min_completeness must be in [0, 1]")
        papers = _ranked_papers(candidates)[:k_max]
        sem = asyncio.Semaphore(self.max_concurrency)

        async def one(p: PaperRecord) -> JudgeVerdict | Exception:
            async with sem:
                try:
                    return await self.judge_pair(doc, p)
                except (MalformedResponse, UpstreamError, ValueError) as exc:
                    return exc

        outcomes = await asyncio.gather(*(one(p) for p in papers))
        verdicts, failures = [], {}
        for p, out in zip(papers, outcomes):
            if isinstance(out, Exception):
                failures[p.canonical_id] = f"{type(out).__name__}: {out}"
            else:
                verdicts.append(out)
        result = JudgeSetResult(doc.query_id, verdicts, failures, len(papers))
        if papers and result.completeness < min_completeness:
            raise IncompleteJudging(
                f"{doc.query_id}: judged {len(verdicts)}/{len(papers)} pairs "
                f"(< {min_completeness:.0%}); first failure: {next(iter(failures.values()))}")
        if failures:
            logger.warning("%s: %d judge failures", doc.query_id, len(failures))
        return result


@dataclass
class JudgeSetResult:
    query_id: str
    verdicts: list[JudgeVerdict]  # in input rank order
    failures: dict[str, str] = field(default_factory=dict)
    attempted: int = 0

    @property
    def completeness(self) -> float:
        return len(self.verdicts) / self.attempted if self.attempted else 1.0


def _ranked_papers(candidates: RankedList | Sequence[PaperRecord]) -> list[PaperRecord]:
    if isinstance(candidates, RankedList):
        return [e.paper for e in candidates.entries]
    return list(candidates)


async def judge_pair(doc: QueryDocument, candidate: PaperRecord, llm: ChatEndpoint,
                     cache: DiskCache | None = None) -> JudgeVerdict:
    return await Judge(llm, cache).judge_pair(doc, candidate)


async def judge_set(doc: QueryDocument, candidates: RankedList | Sequence[PaperRecord], llm: ChatEndpoint,
                    k_max: int = DEFAULT_K_MAX, cache: DiskCache | None = None,
                    min_completeness: float = 0.95, max_concurrency: int = 16) -> JudgeSetResult:
    return await Judge(llm, cache, max_concurrency).judge_set(doc, candidates, k_max, min_completeness)


def write_verdicts(path: str | Path, verdicts: Iterable[JudgeVerdict]) -> None:
    write_jsonl(path, (v.to_dict() for v in verdicts))


def read_verdicts(path: str | Path) -> list[JudgeVerdict]:
    return [JudgeVerdict.from_dict(r) for r in read_jsonl(path)]
