"""Literature search over scholarly indexes: keyword search, citation-graph
expansion, pluggable re-rankers and an evaluation suite (recall, judged
semantic relevance, alpha-nDCG and co-authorship distance)."""

from .core import AuthorRef, Method, PaperRecord, Provider, QueryDocument, RankedList, ScoredCandidate

__version__ = "0.1.0"

__all__ = ["AuthorRef", "Method", "PaperRecord", "Provider", "QueryDocument", "RankedList", "ScoredCandidate"]
