"""Run directory layout: one subdirectory per stage, one file per query."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..core import Method

HUMAN = "human"


def safe_name(query_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", query_id)


@dataclass(frozen=True)
class RunLayout:
    root: Path

    def _p(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def query(self, qid: str) -> Path:
        return self._p("queries", f"{safe_name(qid)}.json")

    def seeds(self, qid: str) -> Path:
        return self._p("seeds", f"{safe_name(qid)}.jsonl")

    def pool(self, qid: str) -> Path:
        return self._p("expand", f"{safe_name(qid)}.jsonl")

    def ranked(self, method: Method, qid: str) -> Path:
        return self._p("rerank", method.value, f"{safe_name(qid)}.jsonl")

    def verdicts(self, source: str, qid: str) -> Path:
        return self._p("judge", source, f"{safe_name(qid)}.jsonl")

    def judge_failures(self, source: str, qid: str) -> Path:
        return self._p("judge", source, f"{safe_name(qid)}.failures.json")

    def human_records(self, qid: str) -> Path:
        return self._p("judge", HUMAN, f"{safe_name(qid)}.records.jsonl")

    def coauthor(self, qid: str) -> Path:
        return self._p("coauthor", f"{safe_name(qid)}.jsonl")

    def eval(self, qid: str) -> Path:
        return self._p("eval", f"{safe_name(qid)}.json")

    def clusters(self, qid: str) -> Path:
        return self._p("eval", f"{safe_name(qid)}.clusters.jsonl")

    @property
    def reports(self) -> Path:
        return self._p("reports")

    @property
    def manifest(self) -> Path:
        return self._p("run_manifest.json")


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    tmp.replace(path)


def read_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))
