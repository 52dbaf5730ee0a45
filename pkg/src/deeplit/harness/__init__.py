"""Configuration, orchestration, reports and the command line."""

from .config import EndpointConfig, JudgeSettings, MetricsSettings, RunConfig, config_from_dict, load_config
from .layout import RunLayout
from .manifest import BenchmarkManifest, ManifestEntry, load_manifest
from .pipeline import STAGES, RunResult, run_pipeline, run_pipeline_async
from .reports import emit_reports

__all__ = [
    "BenchmarkManifest",
    "EndpointConfig",
    "JudgeSettings",
    "ManifestEntry",
    "MetricsSettings",
    "RunConfig",
    "RunLayout",
    "RunResult",
    "STAGES",
    "config_from_dict",
    "emit_reports",
    "load_config",
    "load_manifest",
    "run_pipeline",
    "run_pipeline_async",
]
