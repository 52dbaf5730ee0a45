"""YAML run configuration with command-line overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..core import Method
from ..errors import ConfigError
from ..expansion import ExpansionConfig
from ..metrics.diversity import DEFAULT_ALPHA
from ..providers.base import DEFAULT_CONFIGS, ProviderConfig
from ..rerank.debate import DEFAULT_BATCH_SIZE
from ..rerank.ensemble import NORMALIZATIONS

SEARCH_PROVIDERS = ("arxiv", "openalex", "s2")


@dataclass(frozen=True)
class EndpointConfig:
    """An OpenAI-compatible HTTP endpoint (chat or embeddings)."""

    base_url: str = "http://localhost:8000/v1"
    model_id: str = "default"
    api_key_env: str | None = None
    max_concurrent: int = 8
    requests_per_second: float = 50.0
    max_tokens: int | None = None
    max_retries: int = 4


@dataclass(frozen=True)
class JudgeSettings:
    enabled: bool = True
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    k_max: int = 1000
    min_completeness: float = 0.95
    max_concurrency: int = 16


@dataclass(frozen=True)
class MetricsSettings:
    alpha: float = DEFAULT_ALPHA
    ks: tuple[int, ...] = (10, 20, 50, 100, 200, 500, 1000)
    ndcg_ks: tuple[int, ...] = (10, 100, 1000)
    sr_ks: tuple[int, ...] = (10, 100, 1000)
    # path to a {id, cluster} JSONL file, "baseline" for embedding clusters, or "none"
    cluster_labels: str = "baseline"
    cluster_threshold: float = 0.25


@dataclass(frozen=True)
class RunConfig:
    benchmark_manifest: Path
    run_dir: Path = Path("runs/default")
    cache_dir: Path = Path(".deeplit-cache")
    offline: bool = False
    providers: dict[str, ProviderConfig] = field(default_factory=lambda: dict(DEFAULT_CONFIGS))
    search_providers: tuple[str, ...] = SEARCH_PROVIDERS
    expansion: ExpansionConfig = field(default_factory=ExpansionConfig)
    rerankers: tuple[Method, ...] = (Method.QWEN_EMBED, Method.DEBATE, Method.ENSEMBLE)
    ensemble_normalization: str = "minmax"
    debate_batch_size: int = DEFAULT_BATCH_SIZE
    chat: EndpointConfig = field(default_factory=EndpointConfig)
    embedding: EndpointConfig = field(default_factory=EndpointConfig)
    judge: JudgeSettings = field(default_factory=JudgeSettings)
    metrics: MetricsSettings = field(default_factory=MetricsSettings)
    coauthor: bool = True
    preprocess: bool = False  # manifest text is taken as already cleaned unless set
    max_parallel_queries: int = 4
    min_success_fraction: float = 1.0

    def __post_init__(self) -> None:
        unknown = set(self.search_providers) - set(SEARCH_PROVIDERS)
        if unknown:
            raise ConfigError(f"unknown search providers: {sorted(unknown)}")
        missing = {"openalex", "s2", *self.search_providers} - set(self.providers)
        if missing:
            raise ConfigError(f"no provider config for: {sorted(missing)}")
        if self.ensemble_normalization not in NORMALIZATIONS:
            raise ConfigError(f"ensemble_normalization must be one of {NORMALIZATIONS}")
        if self.max_parallel_queries < 1:
            raise ConfigError("max_parallel_queries must be >= 1")
        if not 0.0 <= self.min_success_fraction <= 1.0:
            raise ConfigError("min_success_fraction must be in [0, 1]")
        if not 0.0 < self.metrics.alpha < 1.0:
            raise ConfigError("metrics.alpha must lie in (0, 1)")
        if self.judge.k_max < 1:
            raise ConfigError("judge.k_max must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return _plain(dataclasses.asdict(self))

    def digest(self) -> str:
        """Hash of everything that can change results (run/cache locations excluded)."""
        d = self.to_dict()
        for k in ("run_dir", "cache_dir", "offline", "max_parallel_queries"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode("utf-8")).hexdigest()


def _plain(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, Path):
        return str(x)
    if isinstance(x, Method):
        return x.value
    return x


def _build(cls, data: Any, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    extra = set(data) - names
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        v = data[f.name]
        if f.name == "endpoint":
            v = _build(EndpointConfig, v, f"{where}.endpoint")
        elif isinstance(v, list):
            v = tuple(v)
        kwargs[f.name] = v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict[str, Any], base_dir: Path | None = None) -> RunConfig:
    data = dict(data)
    base = base_dir or Path.cwd()
    if "benchmark_manifest" not in data:
        raise ConfigError("benchmark_manifest is required")
    kw: dict[str, Any] = {}
    for key in ("benchmark_manifest", "run_dir", "cache_dir"):
        if key in data:
            p = Path(data.pop(key))
            kw[key] = p if p.is_absolute() else base / p
    providers = dict(DEFAULT_CONFIGS)
    for name, pdata in (data.pop("providers", None) or {}).items():
        merged = {**dataclasses.asdict(providers[name])} if name in providers else {}
        merged.update(pdata or {})
        providers[name] = _build(ProviderConfig, merged, f"providers.{name}")
    kw["providers"] = providers
    sections = {"expansion": ExpansionConfig, "chat": EndpointConfig, "embedding": EndpointConfig,
                "judge": JudgeSettings, "metrics": MetricsSettings}
    for key, cls in sections.items():
        if key in data:
            kw[key] = _build(cls, data.pop(key), key)
    if "rerankers" in data:
        try:
            kw["rerankers"] = tuple(Method(m) for m in data.pop("rerankers"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "search_providers" in data:
        kw["search_providers"] = tuple(data.pop("search_providers"))
    scalars = {"offline", "ensemble_normalization", "debate_batch_size", "coauthor", "preprocess",
               "max_parallel_queries", "min_success_fraction"}
    extra = set(data) - scalars
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    kw.update(data)
    mpath = kw["benchmark_manifest"]
    metrics = kw.get("metrics")
    if metrics and metrics.cluster_labels not in ("baseline", "none"):
        p = Path(metrics.cluster_labels)
        if not p.is_absolute():
            kw["metrics"] = dataclasses.replace(metrics, cluster_labels=str(base / p))
    try:
        return RunConfig(benchmark_manifest=mpath, **{k: v for k, v in kw.items() if k != "benchmark_manifest"})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read YAML from ``path``; dotted ``overrides`` (e.g. ``judge.k_max``) win over the file."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    for dotted, value in (overrides or {}).items():
        node = data
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return config_from_dict(data, base_dir=path.parent.resolve())
