"""Single choke point for outbound HTTP: cache, offline guard, limiter, retries."""

from __future__ import annotations

import asyncio
import json
import logging
import random
from collections.abc import Awaitable, Callable, Mapping
from datetime import datetime, timezone
from typing import Any

import httpx

from .cache import CacheEntry, DiskCache, cache_key
from .errors import MalformedPayload, NotFound, OfflineCacheMiss, RateLimited, UpstreamError
from .limiter import AdmissionLimiter

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class HttpGateway:
    """Issue requests for one remote service.

    Requests are identified by a descriptor ``(kind, method, url, params, body)``
    whose SHA-256 is the cache key. With ``cache`` set, the cache is consulted
    before any network traffic; with ``offline`` set, a miss raises
    OfflineCacheMiss instead of touching the network.
    """

    def __init__(
        self,
        client: httpx.AsyncClient,
        limiter: AdmissionLimiter,
        cache: DiskCache | None = None,
        *,
        offline: bool = False,
        max_retries: int = 4,
        backoff_base_ms: int = 500,
        headers: Mapping[str, str] | None = None,
        secret_params: Mapping[str, str] | None = None,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
        rng: random.Random | None = None,
    ) -> None:
        self.client = client
        self.limiter = limiter
        self.cache = cache
        self.offline = offline
        self.max_retries = max_retries
        self.backoff_base_ms = backoff_base_ms
        self.headers = dict(headers or {})
        # sent on the wire but kept out of cache keys
        self.secret_params = dict(secret_params or {})
        self._sleep = sleep
        self._rng = rng or random.Random(0)
        self.network_calls = 0

    def _backoff(self, attempt: int, retry_after: str | None) -> float:
        if retry_after:
            try:
                return max(0.0, float(retry_after))
            except ValueError:
                pass
        base = self.backoff_base_ms / 1000.0 * (2 ** attempt)
        return base * (0.5 + self._rng.random())

    async def request(
        self,
        kind: str,
        url: str,
        *,
        method: str = "GET",
        params: Mapping[str, Any] | None = None,
        json_body: Any = None,
        use_cache: bool = True,
    ) -> CacheEntry:
        params = dict(params or {})
        descriptor = {"method": method, "url": url, "params": params, "body": json_body}
        key = cache_key(kind, descriptor)
        # 404s are remembered too, so a cached replay reproduces them instead of missing
        missing_key = cache_key(kind + ":not_found", descriptor)
        cached = use_cache and self.cache is not None
        if cached:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
            if self.cache.get(missing_key) is not None:
                raise NotFound(f"{method} {url} params={params} (cached)")
        if self.offline:
            raise OfflineCacheMiss(f"{kind}: {method} {url} {params} not cached")

        try:
            payload = await self._send(method, url, params, json_body)
        except NotFound:
            if cached:
                self.cache.put(missing_key, b"", kind=kind + ":not_found")
            raise
        if cached:
            return self.cache.put(key, payload, kind=kind)
        return CacheEntry(key=key, created_at=datetime.now(timezone.utc), payload=payload)

    async def request_json(self, kind: str, url: str, **kw: Any) -> tuple[Any, CacheEntry]:
        entry = await self.request(kind, url, **kw)
        try:
            return json.loads(entry.payload), entry
        except ValueError as exc:
            raise MalformedPayload(f"{kind}: response is not JSON") from exc

    async def _send(self, method: str, url: str, params: dict, json_body: Any) -> bytes:
        attempt = 0
        while True:
            try:
                async with self.limiter.slot():
                    self.network_calls += 1
                    resp = await self.client.request(
                        method, url, params={**params, **self.secret_params} or None, json=json_body, headers=self.headers or None)
            except httpx.TransportError as exc:
                if attempt >= self.max_retries:
                    raise UpstreamError(f"{method} {url}: {exc}") from exc
                delay = self._backoff(attempt, None)
                logger.warning("transport error on %s (attempt %d): %s; retry in %.2fs", url, attempt + 1, exc, delay)
            else:
                if resp.status_code < 300:
                    return resp.content
                if resp.status_code == 404:
                    raise NotFound(f"{method} {url} params={params}")
                if resp.status_code not in RETRYABLE_STATUS:
                    raise UpstreamError(f"{method} {url}: HTTP {resp.status_code}")
                if attempt >= self.max_retries:
                    err = RateLimited if resp.status_code == 429 else UpstreamError
                    raise err(f"{method} {url}: HTTP {resp.status_code} after {attempt + 1} attempts")
                delay = self._backoff(attempt, resp.headers.get("Retry-After"))
                logger.info("HTTP %d on %s; retry %d in %.2fs", resp.status_code, url, attempt + 1, delay)
            attempt += 1
            await self._sleep(delay)

