"""Content-addressed on-disk cache.

Each entry lives at ``<root>/<key[:2]>/<key>.entry``: one JSON header line
(kind, created_at) followed by the raw payload bytes. Writes go to a temp file
and are renamed into place, so concurrent writers of one key never expose a
partial entry.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any


def cache_key(kind: str, params: Any) -> str:
    """SHA-256 over a canonical JSON encoding of (kind, params)."""
    blob = json.dumps({"kind": kind, "params": params}, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    created_at: datetime
    payload: bytes

    def json(self) -> Any:
        return json.loads(self.payload)


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    writes: int = 0

    def as_dict(self) -> dict[str, int]:
        return {"hits": self.hits, "misses": self.misses, "writes": self.writes}


@dataclass
class DiskCache:
    root: Path
    stats: CacheStats = field(default_factory=CacheStats)

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.entry"

    def get(self, key: str) -> CacheEntry | None:
        path = self._path(key)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            self.stats.misses += 1
            return None
        header, _, payload = raw.partition(b"\n")
        meta = json.loads(header)
        self.stats.hits += 1
        return CacheEntry(key=key, created_at=datetime.fromisoformat(meta["created_at"]), payload=payload)

    def put(self, key: str, payload: bytes, kind: str = "", created_at: datetime | None = None) -> CacheEntry:
        created_at = created_at or datetime.now(timezone.utc)
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = json.dumps({"kind": kind, "created_at": created_at.isoformat()}).encode("utf-8")
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(header + b"\n" + payload)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        self.stats.writes += 1
        return CacheEntry(key=key, created_at=created_at, payload=payload)

    def get_json(self, kind: str, params: Any) -> Any | None:
        entry = self.get(cache_key(kind, params))
        return None if entry is None else entry.json()

    def put_json(self, kind: str, params: Any, value: Any) -> None:
        payload = json.dumps(value, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self.put(cache_key(kind, params), payload, kind=kind)
