"""In-process endpoint stubs that count calls."""

from __future__ import annotations

from collections.abc import Callable, Sequence


class ScriptedChat:
    """Returns queued replies in order, or ``reply(messages)`` when given a function."""

    def __init__(self, replies: Sequence[str] | Callable[[list], str], model_id: str = "stub-chat") -> None:
        self.model_id = model_id
        self._fn = replies if callable(replies) else None
        self._queue = [] if callable(replies) else list(replies)
        self.calls = 0
        self.seen: list[list] = []

    async def complete(self, messages) -> str:
        self.calls += 1
        self.seen.append(list(messages))
        if self._fn is not None:
            return self._fn(list(messages))
        return self._queue.pop(0)


class TableEmbed:
    def __init__(self, table: dict[str, list[float]] | Callable[[str], list[float]], model_id: str = "stub-embed") -> None:
        self.model_id = model_id
        self._table = table
        self.calls = 0

    async def embed(self, texts):
        self.calls += 1
        f = self._table if callable(self._table) else self._table.__getitem__
        return [list(f(t)) for t in texts]
