"""Interchangeable candidate scorers: embedding similarity, LLM debate, and their ensemble."""

from .debate import (
    DebateParseReport,
    DebateParseResult,
    DebateRanker,
    DebateVerdict,
    MalformedBlock,
    debate_rank,
    parse_debate_response,
)
from .embed import cosine_to_score, embed_pool, embed_rank, embed_texts
from .ensemble import ensemble_rank, minmax_normalize, rank_normalize

__all__ = [
    "DebateParseReport",
    "DebateParseResult",
    "DebateRanker",
    "DebateVerdict",
    "MalformedBlock",
    "cosine_to_score",
    "debate_rank",
    "embed_pool",
    "embed_rank",
    "embed_texts",
    "ensemble_rank",
    "minmax_normalize",
    "parse_debate_response",
    "rank_normalize",
]
