from __future__ import annotations

import asyncio
import math
from collections.abc import Sequence

import numpy as np

from .. import prompts
from ..cache import DiskCache, text_hash
from ..core import Method, PaperRecord, QueryDocument, RankedList
from ..errors import MalformedPayload
from ..llm import EmbeddingEndpoint
from ._pool import pool_papers


async def embed_texts(texts: Sequence[str], embed: EmbeddingEndpoint, cache: DiskCache | None = None,
                      batch_size: int = 32) -> list[np.ndarray]:
    """Embed ``texts``, reusing cached vectors keyed by (model_id, text hash)."""
    vectors: dict[str, np.ndarray] = {}
    todo: list[str] = []
    for t in dict.fromkeys(texts):
        key = {"model": embed.model_id, "text": text_hash(t)}
        hit = cache.get_json("embedding", key) if cache is not None else None
        if hit is not None:
            vectors[t] = np.asarray(hit, dtype=float)
        else:
            todo.append(t)

    async def run(batch: list[str]) -> None:
        out = await embed.embed(batch)
        if len(out) != len(batch):
            raise MalformedPayload(f"asked for {len(batch)} embeddings, got {len(out)}")
        for t, v in zip(batch, out):
            vec = np.asarray(v, dtype=float)
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise MalformedPayload("embedding has non-finite components")
            vectors[t] = vec
            if cache is not None:
                cache.put_json("embedding", {"model": embed.model_id, "text": text_hash(t)}, vec.tolist())

    await asyncio.gather(*(run(todo[i:i + batch_size]) for i in range(0, len(todo), batch_size)))
    dims = {v.shape[0] for v in vectors.values()}
    if len(dims) > 1:
        raise MalformedPayload(f"embeddings disagree on dimension: {sorted(dims)}")
    return [vectors[t] for t in texts]


def cosine_to_score(cos: float) -> float:
    """Map cosine similarity affinely from [-1, 1] onto [0, 100]."""
    return (min(1.0, max(-1.0, cos)) + 1.0) * 50.0


def query_embedding_text(doc: QueryDocument) -> str:
    return prompts.render(prompts.embed_query_template(), query_paper=doc.cleaned_text)


async def embed_pool(papers: Sequence[PaperRecord], embed: EmbeddingEndpoint,
                     cache: DiskCache | None = None, batch_size: int = 32) -> dict[str, np.ndarray]:
    """Bare (no-instruction) embeddings for every candidate with non-empty text."""
    usable = [p for p in papers if p.text_for_ranking()]
    vecs = await embed_texts([p.text_for_ranking() for p in usable], embed, cache, batch_size)
    return {p.canonical_id: v for p, v in zip(usable, vecs)}


async def embed_rank(doc: QueryDocument, pool, embed: EmbeddingEndpoint,
                     cache: DiskCache | None = None, batch_size: int = 32) -> RankedList:
    papers = pool_papers(pool)
    [qvec] = await embed_texts([query_embedding_text(doc)], embed, cache, batch_size)
    cand = await embed_pool(papers, embed, cache, batch_size)
    qnorm = float(np.linalg.norm(qvec))
    scored = []
    for p in papers:
        vec = cand.get(p.canonical_id)
        if vec is None:
            scored.append((p, 0.0, ("empty_text",)))
            continue
        if vec.shape != qvec.shape:
            raise MalformedPayload("query and candidate embeddings differ in dimension")
        denom = qnorm * float(np.linalg.norm(vec))
        if denom == 0.0 or not math.isfinite(denom):
            scored.append((p, 0.0, ("zero_vector",)))
            continue
        scored.append((p, cosine_to_score(float(np.dot(qvec, vec)) / denom), ()))
    return RankedList.build(doc.query_id, Method.QWEN_EMBED, scored)
