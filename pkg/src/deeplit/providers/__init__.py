"""Rate-limited, cached clients for arXiv, OpenAlex and Semantic Scholar."""

from .arxiv import ArxivClient, parse_atom
from .base import BATCH_LIMIT, DEFAULT_CONFIGS, ProviderClient, ProviderConfig, build_gateway
from .openalex import AuthorWork, OpenAlexClient
from .references import Incomplete, ReferenceFetcher, ReferenceResolver
from .s2 import SemanticScholarClient

__all__ = [
    "ArxivClient",
    "AuthorWork",
    "BATCH_LIMIT",
    "DEFAULT_CONFIGS",
    "Incomplete",
    "OpenAlexClient",
    "ProviderClient",
    "ProviderConfig",
    "ReferenceFetcher",
    "ReferenceResolver",
    "SemanticScholarClient",
    "build_gateway",
    "parse_atom",
]
