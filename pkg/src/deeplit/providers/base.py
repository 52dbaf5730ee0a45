from __future__ import annotations

import os
from dataclasses import dataclass, field

import httpx

from ..cache import DiskCache
from ..http import HttpGateway
from ..limiter import AdmissionLimiter

BATCH_LIMIT = 50


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str
    max_concurrent: int = 4
    requests_per_second: float = 5.0
    page_size: int = 25
    max_retries: int = 4
    backoff_base_ms: int = 500
    api_key_env: str | None = None
    api_key_header: str | None = None
    extra_params: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")
        if self.requests_per_second <= 0:
            raise ValueError("requests_per_second must be > 0")
        if self.page_size < 1:
            raise ValueError("page_size must be >= 1")


# documented public limits: arXiv asks for one request every three seconds,
# OpenAlex allows 10/s, Semantic Scholar grants 1/s to keyed clients
DEFAULT_CONFIGS = {
    "arxiv": ProviderConfig("https://export.arxiv.org/api", max_concurrent=1,
                            requests_per_second=1 / 3, page_size=50),
    "openalex": ProviderConfig("https://api.openalex.org", max_concurrent=8,
                               requests_per_second=10.0, page_size=50,
                               api_key_env="OPENALEX_API_KEY"),
    "s2": ProviderConfig("https://api.semanticscholar.org/graph/v1", max_concurrent=1,
                         requests_per_second=1.0, page_size=50,
                         api_key_env="S2_API_KEY", api_key_header="x-api-key"),
}


def build_gateway(cfg: ProviderConfig, client: httpx.AsyncClient, cache: DiskCache | None,
                  offline: bool = False, **kw) -> HttpGateway:
    headers, secret_params = {}, {}
    key = os.environ.get(cfg.api_key_env) if cfg.api_key_env else None
    if key:
        if cfg.api_key_header:
            headers[cfg.api_key_header] = key
        else:
            secret_params["api_key"] = key
    limiter = AdmissionLimiter(cfg.max_concurrent, cfg.requests_per_second)
    return HttpGateway(client, limiter, cache, offline=offline, max_retries=cfg.max_retries,
                       backoff_base_ms=cfg.backoff_base_ms, headers=headers,
                       secret_params=secret_params, **kw)


def chunked(items: list, size: int = BATCH_LIMIT) -> list[list]:
    return [items[i:i + size] for i in range(0, len(items), size)]


class ProviderClient:
    name = ""

    def __init__(self, gateway: HttpGateway, cfg: ProviderConfig) -> None:
        self.gateway = gateway
        self.cfg = cfg
        self.base_url = cfg.base_url.rstrip("/")

    @classmethod
    def from_config(cls, cfg: ProviderConfig, client: httpx.AsyncClient,
                    cache: DiskCache | None = None, offline: bool = False, **kw):
        return cls(build_gateway(cfg, client, cache, offline, **kw), cfg)

    def _params(self, params: dict) -> dict:
        out = dict(self.cfg.extra_params)
        out.update(params)
        return out
