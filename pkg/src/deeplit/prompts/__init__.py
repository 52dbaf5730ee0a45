"""Prompt templates shipped as text files.

Placeholders are ``{name}`` tokens replaced literally; templates contain JSON
braces, so ``str.format`` is never used on them.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@lru_cache(maxsize=None)
def load(name: str) -> str:
    return resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8").rstrip("\n")


def render(template: str, **values: str) -> str:
    # single pass, so placeholder-like text inside a value is never re-expanded
    return _PLACEHOLDER.sub(lambda m: values.get(m.group(1), m.group(0)), template)


@dataclass(frozen=True)
class ChatTemplate:
    system: str
    user: str

    @property
    def digest(self) -> str:
        return hashlib.sha256((self.system + "\x00" + self.user).encode("utf-8")).hexdigest()

    def messages(self, **values: str) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.system},
            {"role": "user", "content": render(self.user, **values)},
        ]


def keyword_template() -> ChatTemplate:
    return ChatTemplate(load("research_system"), load("keyword_user"))


def debate_template() -> ChatTemplate:
    return ChatTemplate(load("research_system"), load("debate_user"))


def judge_template() -> ChatTemplate:
    return ChatTemplate(load("judge_system"), load("judge_user"))


def embed_query_template() -> str:
    return load("embed_query")
