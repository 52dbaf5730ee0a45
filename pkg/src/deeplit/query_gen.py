"""Keyword-query generation: document cleaning, LLM query drafting, provider syntax."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from urllib.parse import parse_qsl, quote

from . import prompts
from .cache import DiskCache, text_hash
from .core import Provider, QueryDocument
from .errors import EmptyAfterCleaning, MalformedResponse
from .llm import ChatEndpoint, extract_json_object

logger = logging.getLogger(__name__)

_NUMERIC_CITATION = re.compile(r"\[\s*\d+(?:\s*[-–,;]\s*\d+)*\s*\]")

_NAME = r"(?:(?:van|von|de|der|den|del|la|le|di|da|du|dos)\s+)*[A-ZÀ-ſ][\w'’\-]*"
_NAMES = rf"{_NAME}(?:(?:\s*,\s*(?:and\s+|&\s*)?|\s+(?:and|&)\s+){_NAME})*(?:\s+et\s+al\.?)?"
_YEAR = r"(?:19|20)\d{2}[a-z]?"
_ONE_CITE = rf"{_NAMES}\s*,?\s*{_YEAR}(?:\s*,\s*{_YEAR})*"
_AUTHOR_YEAR_CITATION = re.compile(
    rf"\(\s*(?:(?:e\.g\.|i\.e\.|see|cf\.)\s*,?\s*)?{_ONE_CITE}(?:\s*;\s*{_ONE_CITE})*\s*\)"
)
_BIB_HEADING = re.compile(
    r"^[ \t]*#*[ \t]*(?:(?:\d+|[IVX]+)\.?[ \t]+)?(?:references|bibliography)[ \t]*:?[ \t]*$",
    re.IGNORECASE | re.MULTILINE,
)


def _clean_once(text: str) -> str:
    m = _BIB_HEADING.search(text)
    if m:
        text = text[:m.start()].rstrip()
    text = _NUMERIC_CITATION.sub("", text)
    return _AUTHOR_YEAR_CITATION.sub("", text)


def preprocess_document(full_text: str) -> str:
    """Strip inline citation markers and everything from the bibliography heading on.

    Numeric brackets (``[12]``, ``[1, 3-5]``) and parenthetical author-year
    citations (``(Smith et al., 2020)``) are removed; all other characters are
    kept as-is. Applied to a fixed point so the result is idempotent.
    """
    text = full_text
    while True:
        cleaned = _clean_once(text)
        if cleaned == text:
            break
        text = cleaned
    if not text.strip():
        raise EmptyAfterCleaning("document is blank after citation and bibliography removal")
    return text


@dataclass(frozen=True)
class KeywordQuerySet:
    query_id: str
    queries: tuple[str, ...]
    model_id: str
    prompt_hash: str

    def __post_init__(self) -> None:
        if not self.queries:
            raise ValueError("queries must be non-empty")
        folded = [q.casefold() for q in self.queries]
        if len(set(folded)) != len(folded) or any(not q.strip() for q in self.queries):
            raise ValueError("queries must be unique after case-folding and non-blank")

    def to_dict(self) -> dict:
        return {"query_id": self.query_id, "queries": list(self.queries),
                "model_id": self.model_id, "prompt_hash": self.prompt_hash}

    @classmethod
    def from_dict(cls, d: dict) -> KeywordQuerySet:
        return cls(d["query_id"], tuple(d["queries"]), d["model_id"], d["prompt_hash"])


def dedupe_queries(raw: list) -> list[str]:
    seen: set[str] = set()
    out = []
    for q in raw:
        if not isinstance(q, str):
            continue
        q = " ".join(q.split())
        if q and q.casefold() not in seen:
            seen.add(q.casefold())
            out.append(q)
    return out


def parse_keyword_response(text: str) -> list[str]:
    obj = extract_json_object(text)
    raw = obj.get("queries")
    if not isinstance(raw, list):
        raise MalformedResponse("response object has no 'queries' array")
    queries = dedupe_queries(raw)
    if not queries:
        raise MalformedResponse("'queries' array holds no non-empty strings")
    return queries


async def generate_keyword_queries(doc: QueryDocument, llm: ChatEndpoint,
                                   cache: DiskCache | None = None) -> KeywordQuerySet:
    if not doc.cleaned_text.strip():
        raise EmptyAfterCleaning("query document has no cleaned text")
    template = prompts.keyword_template()
    key = {"template": template.digest, "text": text_hash(doc.cleaned_text), "model": llm.model_id}
    cached = cache.get_json("keyword_queries", key) if cache is not None else None
    if cached is not None:
        queries = cached
    else:
        response = await llm.complete(template.messages(paper_text=doc.cleaned_text))
        queries = parse_keyword_response(response)
        if cache is not None:
            cache.put_json("keyword_queries", key, queries)
    return KeywordQuerySet(doc.query_id, tuple(queries), llm.model_id, template.digest)


@dataclass(frozen=True)
class ProviderQuery:
    provider: Provider
    raw_query: str
    translated: str
    page_size: int = 25

    def __post_init__(self) -> None:
        if self.page_size < 1:
            raise ValueError("page_size must be positive")

    def params(self) -> dict[str, str]:
        """Query-string parameters for the provider request (decoded)."""
        if self.provider is Provider.ARXIV:
            return {"search_query": self.translated}
        return dict(parse_qsl(self.translated))


_QUOTED = re.compile(r'"([^"]*)"')


def _arxiv_terms(q: str) -> list[str]:
    pieces: list[str] = []
    pos = 0
    for m in _QUOTED.finditer(q):
        pieces.append(q[pos:m.start()])
        pieces.append(m.group(1))
        pos = m.end()
    pieces.append(q[pos:])
    terms = []
    for piece in pieces:
        piece = " ".join(piece.replace('"', " ").split())
        if piece:
            terms.append(f'all:"{piece}"' if " " in piece else f"all:{piece}")
    return terms or ['all:""']


def translate_query(q: str, provider: Provider | str, page_size: int = 25) -> ProviderQuery:
    provider = Provider(provider)
    if not q.strip():
        raise ValueError("query must be non-empty")
    norm = " ".join(q.split())
    if provider is Provider.ARXIV:
        translated = " AND ".join(_arxiv_terms(norm))
    elif provider is Provider.OPENALEX:
        translated = "search=" + quote(norm, safe="")
    elif provider is Provider.S2:
        translated = "query=" + quote(norm, safe="")
    else:
        raise ValueError(f"no search syntax for provider {provider.value}")
    return ProviderQuery(provider=provider, raw_query=q, translated=translated, page_size=page_size)
