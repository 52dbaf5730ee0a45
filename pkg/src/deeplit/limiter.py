from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager
from typing import AsyncIterator


class AdmissionLimiter:
    """Per-provider admission control: bounded in-flight slots plus a token-bucket rate.

    The rate side is a GCRA-style scheduler: every caller reserves the next
    emission time under a lock and then sleeps outside it, so waiters never
    serialize on the lock while sleeping. ``burst`` tokens may be spent back to
    back after an idle period.
    """

    def __init__(self, max_concurrent: int, requests_per_second: float, burst: int = 1) -> None:
        if max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")
        if requests_per_second <= 0:
            raise ValueError("requests_per_second must be > 0")
        if burst < 1:
            raise ValueError("burst must be >= 1")
        self.max_concurrent = max_concurrent
        self.requests_per_second = float(requests_per_second)
        self.burst = burst
        self._interval = 1.0 / self.requests_per_second
        self._slots = asyncio.Semaphore(max_concurrent)
        self._lock = asyncio.Lock()
        self._tat: float | None = None  # theoretical arrival time of the next token
        self.in_flight = 0
        self.peak_in_flight = 0
        self.granted = 0

    async def _take_token(self) -> None:
        async with self._lock:
            now = asyncio.get_running_loop().time()
            tat = now if self._tat is None else max(self._tat, now)
            wait = tat - (self.burst - 1) * self._interval - now
            self._tat = tat + self._interval
        if wait > 0:
            await asyncio.sleep(wait)

    async def acquire(self) -> None:
        await self._slots.acquire()
        try:
            await self._take_token()
        except BaseException:
            self._slots.release()
            raise
        self.in_flight += 1
        self.granted += 1
        self.peak_in_flight = max(self.peak_in_flight, self.in_flight)

    def release(self) -> None:
        self.in_flight -= 1
        self._slots.release()

    @asynccontextmanager
    async def slot(self) -> AsyncIterator[None]:
        await self.acquire()
        try:
            yield
        finally:
            self.release()
