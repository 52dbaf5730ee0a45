"""Canonical paper records, ranked lists, identity normalization and dedup."""

from __future__ import annotations

import hashlib
import json
import math
import re
import unicodedata
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import InvalidRecord, MissingIdentity

UNKNOWN_FETCH_TIME = datetime(1970, 1, 1, tzinfo=timezone.utc)
ARXIV_DOI_PREFIX = "10.48550/arxiv."

_ARXIV_URL_RE = re.compile(r"^(?:https?://)?(?:www\.|export\.)?arxiv\.org/(?:abs|pdf)/", re.I)
_ARXIV_VERSION_RE = re.compile(r"v\d+$")
_DOI_URL_RE = re.compile(r"^(?:https?://)?(?:dx\.)?doi\.org/", re.I)
_OPENALEX_URL_RE = re.compile(r"^(?:https?://)?(?:api\.)?openalex\.org/(?:works/|authors/)?", re.I)


class Provider(str, Enum):
    ARXIV = "arxiv"
    OPENALEX = "openalex"
    S2 = "s2"
    MANUAL = "manual"


class Method(str, Enum):
    NONE = "none"
    QWEN_EMBED = "qwen_embed"
    DEBATE = "debate"
    ENSEMBLE = "ensemble"


@dataclass(frozen=True)
class AuthorRef:
    display_name: str
    openalex_author_id: str | None = None

    def __post_init__(self) -> None:
        if not self.display_name or not self.display_name.strip():
            raise InvalidRecord("author display_name must be non-empty")


@dataclass(frozen=True)
class PaperRecord:
    canonical_id: str
    title: str = ""
    arxiv_id: str | None = None
    doi: str | None = None
    openalex_id: str | None = None
    s2_id: str | None = None
    abstract: str | None = None
    full_text: str | None = None
    authors: tuple[AuthorRef, ...] = ()
    references: tuple[str, ...] | None = None
    source_provider: Provider = Provider.MANUAL
    fetched_at: datetime = UNKNOWN_FETCH_TIME

    def __post_init__(self) -> None:
        if not self.canonical_id:
            raise InvalidRecord("canonical_id must be non-empty")
        if not any((self.arxiv_id, self.doi, self.openalex_id, self.s2_id, self.title)):
            raise InvalidRecord(f"{self.canonical_id}: record has no identifier and no title")
        if self.references is not None:
            if len(set(self.references)) != len(self.references):
                raise InvalidRecord(f"{self.canonical_id}: duplicate references")
            if self.canonical_id in self.references:
                raise InvalidRecord(f"{self.canonical_id}: record references itself")

    @property
    def author_ids(self) -> frozenset[str]:
        return frozenset(a.openalex_author_id for a in self.authors if a.openalex_author_id)

    def text_for_ranking(self) -> str:
        """Title and abstract joined, the candidate-side text for every scorer."""
        parts = [self.title.strip()]
        if self.abstract and self.abstract.strip():
            parts.append(self.abstract.strip())
        return "\n".join(p for p in parts if p)

    def to_dict(self) -> dict[str, Any]:
        return {
            "canonical_id": self.canonical_id,
            "title": self.title,
            "arxiv_id": self.arxiv_id,
            "doi": self.doi,
            "openalex_id": self.openalex_id,
            "s2_id": self.s2_id,
            "abstract": self.abstract,
            "full_text": self.full_text,
            "authors": [
                {"display_name": a.display_name, "openalex_author_id": a.openalex_author_id}
                for a in self.authors
            ],
            "references": list(self.references) if self.references is not None else None,
            "source_provider": self.source_provider.value,
            "fetched_at": self.fetched_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> PaperRecord:
        refs = d.get("references")
        return cls(
            canonical_id=d["canonical_id"],
            title=d.get("title") or "",
            arxiv_id=d.get("arxiv_id"),
            doi=d.get("doi"),
            openalex_id=d.get("openalex_id"),
            s2_id=d.get("s2_id"),
            abstract=d.get("abstract"),
            full_text=d.get("full_text"),
            authors=tuple(AuthorRef(**a) for a in d.get("authors") or ()),
            references=tuple(refs) if refs is not None else None,
            source_provider=Provider(d.get("source_provider", "manual")),
            fetched_at=datetime.fromisoformat(d["fetched_at"]) if d.get("fetched_at") else UNKNOWN_FETCH_TIME,
        )


@dataclass(frozen=True)
class QueryDocument:
    paper: PaperRecord
    cleaned_text: str
    ground_truth_refs: tuple[str, ...] = ()

    @property
    def n_p(self) -> int:
        return len(self.ground_truth_refs)

    @property
    def query_id(self) -> str:
        return self.paper.canonical_id


@dataclass(frozen=True)
class ScoredCandidate:
    paper: PaperRecord
    score: float
    rank: int
    method: Method
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise InvalidRecord(f"rank must be >= 1, got {self.rank}")
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 100.0:
            raise InvalidRecord(f"score must be finite and within [0, 100], got {self.score}")

    @property
    def canonical_id(self) -> str:
        return self.paper.canonical_id


@dataclass(frozen=True)
class RankedList:
    query_id: str
    method: Method
    entries: tuple[ScoredCandidate, ...] = field(default_factory=tuple)

    @classmethod
    def build(
        cls,
        query_id: str,
        method: Method,
        scored: Iterable[tuple[PaperRecord, float] | tuple[PaperRecord, float, Sequence[str]]],
    ) -> RankedList:
        """Sort by score descending (ties by canonical_id ascending) and assign ranks 1..n."""
        rows = []
        for item in scored:
            paper, score = item[0], float(item[1])
            flags = tuple(item[2]) if len(item) > 2 else ()
            rows.append((paper, score, flags))
        rows.sort(key=lambda r: (-r[1], r[0].canonical_id))
        entries = tuple(
            ScoredCandidate(paper=p, score=s, rank=i, method=method, flags=f)
            for i, (p, s, f) in enumerate(rows, start=1)
        )
        ranked = cls(query_id=query_id, method=method, entries=entries)
        validate_ranked_list(ranked)
        return ranked

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ScoredCandidate]:
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [e.canonical_id for e in self.entries]

    def scores(self) -> dict[str, float]:
        return {e.canonical_id: e.score for e in self.entries}

    def top(self, n: int) -> list[ScoredCandidate]:
        return list(self.entries[:n])

    def to_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "query_id": self.query_id,
                "method": self.method.value,
                "rank": e.rank,
                "score": e.score,
                "flags": list(e.flags),
                "paper": e.paper.to_dict(),
            }
            for e in self.entries
        ]

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping[str, Any]], query_id: str | None = None,
                  method: Method | None = None) -> RankedList:
        rows = list(rows)
        if rows:
            query_id = rows[0]["query_id"]
            method = Method(rows[0]["method"])
        if query_id is None or method is None:
            raise InvalidRecord("empty ranked list needs explicit query_id and method")
        entries = tuple(
            ScoredCandidate(
                paper=PaperRecord.from_dict(r["paper"]),
                score=float(r["score"]),
                rank=int(r["rank"]),
                method=method,
                flags=tuple(r.get("flags") or ()),
            )
            for r in sorted(rows, key=lambda r: r["rank"])
        )
        ranked = cls(query_id=query_id, method=method, entries=entries)
        validate_ranked_list(ranked)
        return ranked


def validate_ranked_list(ranked: RankedList) -> None:
    """Raise InvalidRecord unless the list is sorted, rank-contiguous and duplicate-free."""
    seen: set[str] = set()
    prev: ScoredCandidate | None = None
    for i, e in enumerate(ranked.entries, start=1):
        if e.rank != i:
            raise InvalidRecord(f"rank gap: position {i} has rank {e.rank}")
        if e.canonical_id in seen:
            raise InvalidRecord(f"duplicate candidate {e.canonical_id}")
        seen.add(e.canonical_id)
        if prev is not None:
            if e.score > prev.score or (e.score == prev.score and e.canonical_id < prev.canonical_id):
                raise InvalidRecord(f"not sorted at rank {i}")
        prev = e


# -- identity normalization -------------------------------------------------------


def normalize_arxiv_id(raw: str | None) -> str | None:
    if not raw:
        return None
    s = raw.strip()
    s = _ARXIV_URL_RE.sub("", s)
    if s.lower().startswith("arxiv:"):
        s = s[6:]
    s = s.strip().lower()
    if s.endswith(".pdf"):
        s = s[:-4]
    s = _ARXIV_VERSION_RE.sub("", s)
    return s or None


def normalize_doi(raw: str | None) -> str | None:
    if not raw:
        return None
    s = _DOI_URL_RE.sub("", raw.strip())
    if s.lower().startswith("doi:"):
        s = s[4:]
    s = s.strip().lower()
    return s or None


def normalize_openalex_id(raw: str | None) -> str | None:
    if not raw:
        return None
    s = _OPENALEX_URL_RE.sub("", raw.strip()).strip()
    return s.upper() or None


def arxiv_from_doi(doi: str | None) -> str | None:
    if doi and doi.startswith(ARXIV_DOI_PREFIX):
        return normalize_arxiv_id(doi[len(ARXIV_DOI_PREFIX):])
    return None


def arxiv_doi(arxiv_id: str) -> str:
    return ARXIV_DOI_PREFIX + normalize_arxiv_id(arxiv_id)


def normalize_title(title: str) -> str:
    s = unicodedata.normalize("NFKC", title).casefold()
    s = re.sub(r"[^\w\s]|_", " ", s)
    return " ".join(s.split())


def title_hash(title: str) -> str:
    return hashlib.sha256(normalize_title(title).encode("utf-8")).hexdigest()[:16]


def canonical_id_for(arxiv_id=None, doi=None, openalex_id=None, s2_id=None, title=None) -> str:
    if arxiv_id:
        return f"arxiv:{arxiv_id}"
    if doi:
        return f"doi:{doi}"
    if openalex_id:
        return f"openalex:{openalex_id}"
    if s2_id:
        return f"s2:{s2_id}"
    if title and normalize_title(title):
        return f"title:{title_hash(title)}"
    raise MissingIdentity("payload has no identifier and no title")


def normalize_query_id(raw: str) -> str:
    """Accept a bare arXiv id, DOI or an already-canonical id and return the canonical form."""
    s = raw.strip()
    prefix, _, rest = s.partition(":")
    if prefix == "arxiv":
        return f"arxiv:{normalize_arxiv_id(rest)}"
    if prefix == "doi":
        doi = normalize_doi(rest)
        ax = arxiv_from_doi(doi)
        return f"arxiv:{ax}" if ax else f"doi:{doi}"
    if prefix in ("openalex", "s2", "title"):
        return s
    if s.startswith("10."):
        doi = normalize_doi(s)
        ax = arxiv_from_doi(doi)
        return f"arxiv:{ax}" if ax else f"doi:{doi}"
    return f"arxiv:{normalize_arxiv_id(s)}"


# -- canonicalize provider payloads ----------------------------------------------


def _clean(s: Any) -> str | None:
    if s is None:
        return None
    s = " ".join(str(s).split())
    return s or None


def _abstract_from_inverted_index(index: Mapping[str, Sequence[int]] | None) -> str | None:
    if not index:
        return None
    positions: dict[int, str] = {}
    for word, locs in index.items():
        for loc in locs:
            positions[loc] = word
    return " ".join(positions[i] for i in sorted(positions)) or None


def _authors(items: Iterable[tuple[str | None, str | None]]) -> tuple[AuthorRef, ...]:
    out = []
    for name, oa_id in items:
        name = _clean(name) or oa_id
        if name:
            out.append(AuthorRef(display_name=name, openalex_author_id=oa_id))
    return tuple(out)


def canonicalize(payload: Mapping[str, Any], provider: Provider | str,
                 fetched_at: datetime = UNKNOWN_FETCH_TIME) -> PaperRecord:
    """Build a PaperRecord from one parsed provider payload.

    Identifiers are normalized (arXiv id lowercased without version, DOI
    lowercased, OpenAlex id bare) and the canonical id follows the precedence
    arxiv > doi > openalex > s2 > title hash.
    """
    provider = Provider(provider)
    arxiv_id = doi = openalex_id = s2_id = None
    abstract = full_text = None
    authors: tuple[AuthorRef, ...] = ()
    references = None

    if provider is Provider.ARXIV:
        arxiv_id = normalize_arxiv_id(payload.get("id") or payload.get("arxiv_id"))
        doi = normalize_doi(payload.get("doi"))
        title = _clean(payload.get("title"))
        abstract = _clean(payload.get("summary") or payload.get("abstract"))
        authors = _authors((a.get("name"), None) for a in payload.get("authors") or ())
    elif provider is Provider.OPENALEX:
        ids = payload.get("ids") or {}
        openalex_id = normalize_openalex_id(payload.get("id") or ids.get("openalex"))
        doi = normalize_doi(payload.get("doi") or ids.get("doi"))
        title = _clean(payload.get("title") or payload.get("display_name"))
        abstract = _clean(payload.get("abstract")) or _abstract_from_inverted_index(
            payload.get("abstract_inverted_index"))
        authors = _authors(
            ((a.get("author") or {}).get("display_name"),
             normalize_openalex_id((a.get("author") or {}).get("id")))
            for a in payload.get("authorships") or ()
        )
    elif provider is Provider.S2:
        ext = payload.get("externalIds") or {}
        s2_id = _clean(payload.get("paperId"))
        arxiv_id = normalize_arxiv_id(ext.get("ArXiv"))
        doi = normalize_doi(ext.get("DOI"))
        title = _clean(payload.get("title"))
        abstract = _clean(payload.get("abstract"))
        authors = _authors((a.get("name"), None) for a in payload.get("authors") or ())
    else:
        arxiv_id = normalize_arxiv_id(payload.get("arxiv_id"))
        doi = normalize_doi(payload.get("doi"))
        openalex_id = normalize_openalex_id(payload.get("openalex_id"))
        s2_id = _clean(payload.get("s2_id"))
        title = _clean(payload.get("title"))
        abstract = _clean(payload.get("abstract"))
        full_text = payload.get("full_text") or None
        raw_authors = payload.get("authors") or ()
        authors = _authors(
            (a, None) if isinstance(a, str) else (a.get("display_name") or a.get("name"), a.get("openalex_author_id"))
            for a in raw_authors
        )
        if payload.get("references") is not None:
            references = list(payload["references"])

    if not arxiv_id:
        arxiv_id = arxiv_from_doi(doi)
    cid = canonical_id_for(arxiv_id, doi, openalex_id, s2_id, title)
    if references is not None:
        references = tuple(r for r in dict.fromkeys(references) if r != cid)
    return PaperRecord(
        canonical_id=cid,
        title=title or "",
        arxiv_id=arxiv_id,
        doi=doi,
        openalex_id=openalex_id,
        s2_id=s2_id,
        abstract=abstract,
        full_text=full_text,
        authors=authors,
        references=references,
        source_provider=provider,
        fetched_at=fetched_at,
    )


# -- dedupe --------------------------------------------------------------------------


def _is_empty(v: Any) -> bool:
    return v is None or v == "" or v == ()


def merge_records(first: PaperRecord, other: PaperRecord) -> PaperRecord:
    """Field-wise merge: non-empty beats empty; on conflict the newer fetch wins."""
    if first.canonical_id != other.canonical_id:
        raise InvalidRecord("cannot merge records with different canonical ids")
    newer, older = (other, first) if other.fetched_at > first.fetched_at else (first, other)
    changes = {}
    for f in fields(PaperRecord):
        if f.name in ("canonical_id", "fetched_at"):
            continue
        a, b = getattr(newer, f.name), getattr(older, f.name)
        changes[f.name] = b if _is_empty(a) else a
    changes["fetched_at"] = newer.fetched_at
    return replace(first, **changes)


def dedupe(pool: Iterable[PaperRecord]) -> list[PaperRecord]:
    merged: dict[str, PaperRecord] = {}
    for rec in pool:
        prev = merged.get(rec.canonical_id)
        merged[rec.canonical_id] = rec if prev is None else merge_records(prev, rec)
    return list(merged.values())


# -- JSONL interchange ------------------------------------------------------------


def write_jsonl(path: str | Path, rows: Iterable[Mapping[str, Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
    tmp.replace(path)


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_records(path: str | Path, records: Iterable[PaperRecord]) -> None:
    write_jsonl(path, (r.to_dict() for r in records))


def read_records(path: str | Path) -> list[PaperRecord]:
    return [PaperRecord.from_dict(d) for d in read_jsonl(path)]
