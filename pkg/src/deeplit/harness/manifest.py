"""Benchmark manifest: one JSON line per query paper."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..core import AuthorRef, PaperRecord, Provider, QueryDocument, normalize_arxiv_id, normalize_query_id, read_jsonl
from ..errors import ConfigError
from ..query_gen import preprocess_document


@dataclass(frozen=True)
class ManifestEntry:
    arxiv_id: str
    full_text: Path
    ground_truth: tuple[str, ...]
    title: str = ""
    abstract: str | None = None
    authors: tuple[AuthorRef, ...] = ()

    @property
    def query_id(self) -> str:
        return f"arxiv:{self.arxiv_id}"

    def paper(self) -> PaperRecord:
        return PaperRecord(canonical_id=self.query_id, title=self.title, arxiv_id=self.arxiv_id,
                           abstract=self.abstract, authors=self.authors, source_provider=Provider.MANUAL)

    def document(self, preprocess: bool = False) -> QueryDocument:
        text = self.full_text.read_text(encoding="utf-8")
        if preprocess:
            text = preprocess_document(text)
        return QueryDocument(self.paper(), text, self.ground_truth)


@dataclass(frozen=True)
class BenchmarkManifest:
    path: Path
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ConfigError(f"{self.path}: manifest has no entries")


def _entry(row: dict[str, Any], base: Path, lineno: int) -> ManifestEntry:
    where = f"manifest line {lineno}"
    try:
        arxiv_id = normalize_arxiv_id(row["arxiv_id"])
        text_path = Path(row["full_text"])
        truth = row["ground_truth"]
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc}") from exc
    if not arxiv_id:
        raise ConfigError(f"{where}: empty arxiv_id")
    truth = tuple(dict.fromkeys(normalize_query_id(t) for t in truth))
    if not truth:
        raise ConfigError(f"{where}: ground_truth is empty")
    authors = tuple(AuthorRef(a["display_name"], a.get("openalex_author_id")) for a in row.get("authors") or ())
    return ManifestEntry(arxiv_id, text_path if text_path.is_absolute() else base / text_path, truth,
                         row.get("title") or "", row.get("abstract"), authors)


def load_manifest(path: str | Path) -> BenchmarkManifest:
    path = Path(path)
    try:
        rows = read_jsonl(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    entries = tuple(_entry(r, path.parent, i) for i, r in enumerate(rows, start=1))
    ids = [e.query_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{path}: duplicate query papers")
    return BenchmarkManifest(path, entries)
