"""Chat and embedding endpoint handles.

Stages depend only on the two small protocols below, so tests can pass
in-process stubs while production uses the OpenAI-compatible HTTP clients
(vLLM and most hosted services speak this wire format).
"""

from __future__ import annotations

import json
import re
from collections.abc import Sequence
from typing import Any, Protocol, runtime_checkable

from .errors import MalformedPayload, MalformedResponse
from .http import HttpGateway

Message = dict[str, str]


@runtime_checkable
class ChatEndpoint(Protocol):
    model_id: str

    async def complete(self, messages: Sequence[Message]) -> str: ...


@runtime_checkable
class EmbeddingEndpoint(Protocol):
    model_id: str

    async def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


class OpenAIChatEndpoint:
    def __init__(self, gateway: HttpGateway, base_url: str, model_id: str,
                 temperature: float = 0.0, max_tokens: int | None = None) -> None:
        self.gateway = gateway
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.temperature = temperature
        self.max_tokens = max_tokens

    async def complete(self, messages: Sequence[Message]) -> str:
        body: dict[str, Any] = {"model": self.model_id, "messages": list(messages),
                                "temperature": self.temperature}
        if self.max_tokens:
            body["max_tokens"] = self.max_tokens
        # operation-level caches sit above this call; the gateway only guards offline mode
        data, _ = await self.gateway.request_json(
            "chat", f"{self.base_url}/chat/completions", method="POST", json_body=body, use_cache=False)
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedPayload("chat response lacks choices[0].message.content") from exc


class OpenAIEmbeddingEndpoint:
    def __init__(self, gateway: HttpGateway, base_url: str, model_id: str) -> None:
        self.gateway = gateway
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id

    async def embed(self, texts: Sequence[str]) -> list[list[float]]:
        body = {"model": self.model_id, "input": list(texts)}
        data, _ = await self.gateway.request_json(
            "embeddings", f"{self.base_url}/embeddings", method="POST", json_body=body, use_cache=False)
        try:
            rows = sorted(data["data"], key=lambda r: r["index"])
            vectors = [list(map(float, r["embedding"])) for r in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedPayload("embedding response lacks data[].embedding") from exc
        if len(vectors) != len(texts):
            raise MalformedPayload(f"asked for {len(texts)} embeddings, got {len(vectors)}")
        return vectors


_FENCE_RE = re.compile(r"^\s*```[a-zA-Z0-9_-]*\s*\n?|\n?\s*```\s*$")


def _first_json_object(text: str) -> str | None:
    """Return the first balanced ``{...}`` block, skipping braces inside strings."""
    start = text.find("{")
    while start != -1:
        depth, in_str, esc = 0, False, False
        for i in range(start, len(text)):
            ch = text[i]
            if in_str:
                if esc:
                    esc = False
                elif ch == "\\":
                    esc = True
                elif ch == '"':
                    in_str = False
            elif ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start:i + 1]
        start = text.find("{", start + 1)
    return None


def extract_json_object(text: str) -> dict[str, Any]:
    """Parse a JSON object from model output, with one repair attempt.

    The repair strips markdown code fences and takes the first ``{...}`` block.
    """
    try:
        value = json.loads(text)
        if isinstance(value, dict):
            return value
    except ValueError:
        pass
    stripped = _FENCE_RE.sub("", text.strip())
    block = _first_json_object(stripped)
    if block is not None:
        try:
            value = json.loads(block)
            if isinstance(value, dict):
                return value
        except ValueError:
            pass
    raise MalformedResponse("no JSON object found in model response")
