"""Evaluation mathematics: P/R@K, Semantic Relevance aggregates, alpha-nDCG."""

from .diversity import DEFAULT_ALPHA, NOISE, ClusterAssignment, alpha_dcg, alpha_ndcg, baseline_cluster, ideal_order
from .retrieval import DEFAULT_KS, PRCurve, PRPoint, macro_average, precision_recall_at_k
from .sr import (
    SRDistribution,
    SRMode,
    cumulative_sr_curve,
    matched_np_distribution,
    matched_np_pool,
    sr_aggregate,
    sr_distribution,
    topk_mean_sr,
)

__all__ = [
    "DEFAULT_ALPHA",
    "DEFAULT_KS",
    "NOISE",
    "ClusterAssignment",
    "PRCurve",
    "PRPoint",
    "SRDistribution",
    "SRMode",
    "alpha_dcg",
    "alpha_ndcg",
    "baseline_cluster",
    "cumulative_sr_curve",
    "ideal_order",
    "macro_average",
    "matched_np_distribution",
    "matched_np_pool",
    "precision_recall_at_k",
    "sr_aggregate",
    "sr_distribution",
    "topk_mean_sr",
]
