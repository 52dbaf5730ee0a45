"""End-to-end orchestration with one persisted artifact per (stage, query)."""

from __future__ import annotations

import asyncio
import dataclasses
import logging
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import httpx

from ..cache import DiskCache
from ..coauthor import NeighborhoodStore, PairDistance, QueryDistanceAnalyzer, reconcile_arxiv_to_openalex
from ..core import (
    Method,
    PaperRecord,
    QueryDocument,
    RankedList,
    arxiv_doi,
    dedupe,
    normalize_doi,
    read_jsonl,
    read_records,
    write_jsonl,
    write_records,
)
from ..errors import DeepLitError, MissingArtifacts, NotFound, OfflineCacheMiss, UpstreamError
from ..expansion import CandidatePool, expand
from ..http import HttpGateway
from ..judge import Judge, JudgeVerdict, read_verdicts, write_verdicts
from ..limiter import AdmissionLimiter
from ..llm import OpenAIChatEndpoint, OpenAIEmbeddingEndpoint
from ..metrics.diversity import NOISE, ClusterAssignment, alpha_ndcg, baseline_cluster
from ..metrics.retrieval import precision_recall_at_k
from ..providers import ArxivClient, OpenAlexClient, ReferenceFetcher, SemanticScholarClient, build_gateway
from ..query_gen import KeywordQuerySet, generate_keyword_queries, translate_query
from ..rerank import debate_rank, embed_pool, embed_rank, ensemble_rank
from .config import EndpointConfig, RunConfig
from .layout import HUMAN, RunLayout, read_json, write_json
from .manifest import ManifestEntry, load_manifest
from .reports import emit_reports

logger = logging.getLogger(__name__)

STAGES = ("search", "expand", "rerank", "judge", "coauthor", "eval", "report")


class Services:
    """Clients shared by every query of a run; all network access goes through them."""

    def __init__(self, cfg: RunConfig, client: httpx.AsyncClient) -> None:
        self.cfg = cfg
        self.cache = DiskCache(cfg.cache_dir)
        self.gateways: list[HttpGateway] = []

        def provider(cls, name):
            gw = build_gateway(cfg.providers[name], client, self.cache, cfg.offline)
            self.gateways.append(gw)
            return cls(gw, cfg.providers[name])

        self.arxiv = provider(ArxivClient, "arxiv")
        self.openalex = provider(OpenAlexClient, "openalex")
        self.s2 = provider(SemanticScholarClient, "s2")
        self.search_clients = {"arxiv": self.arxiv, "openalex": self.openalex, "s2": self.s2}
        self.refs = ReferenceFetcher(self.openalex, self.s2)
        self.chat = OpenAIChatEndpoint(self._endpoint(cfg.chat, client), cfg.chat.base_url,
                                       cfg.chat.model_id, max_tokens=cfg.chat.max_tokens)
        self.embed = OpenAIEmbeddingEndpoint(self._endpoint(cfg.embedding, client), cfg.embedding.base_url,
                                             cfg.embedding.model_id)
        je = cfg.judge.endpoint
        self.judge_llm = OpenAIChatEndpoint(self._endpoint(je, client), je.base_url, je.model_id,
                                            max_tokens=je.max_tokens)
        self.judge = Judge(self.judge_llm, self.cache, cfg.judge.max_concurrency)
        self.neighborhoods = NeighborhoodStore.for_openalex(self.openalex, cache=self.cache)
        self._labels: ClusterAssignment | None = None

    def _endpoint(self, ep: EndpointConfig, client: httpx.AsyncClient) -> HttpGateway:
        key = os.environ.get(ep.api_key_env) if ep.api_key_env else None
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        gw = HttpGateway(client, AdmissionLimiter(ep.max_concurrent, ep.requests_per_second), None,
                         offline=self.cfg.offline, max_retries=ep.max_retries, headers=headers)
        self.gateways.append(gw)
        return gw

    @property
    def network_calls(self) -> int:
        return sum(g.network_calls for g in self.gateways)

    def fixed_labels(self) -> ClusterAssignment:
        if self._labels is None:
            self._labels = ClusterAssignment.read(self.cfg.metrics.cluster_labels)
        return self._labels


async def resolve_records(ids: Sequence[str], known: dict[str, PaperRecord],
                          openalex: OpenAlexClient) -> tuple[list[PaperRecord], list[str]]:
    """Metadata for canonical ids: taken from ``known`` where possible, else via the DOI filter."""
    out: dict[str, PaperRecord] = {}
    by_doi: dict[str, str] = {}
    for cid in ids:
        if cid in known and known[cid].title:
            out[cid] = known[cid]
            continue
        prefix, _, rest = cid.partition(":")
        if prefix == "arxiv":
            by_doi[normalize_doi(arxiv_doi(rest))] = cid
        elif prefix == "doi":
            by_doi[rest] = cid
    if by_doi:
        found = await openalex.resolve_ids_batched(list(by_doi), "doi")
        for doi, rec in found.items():
            cid = by_doi[doi]
            out[cid] = rec if rec.canonical_id == cid else dataclasses.replace(rec, canonical_id=cid)
    return [out[c] for c in ids if c in out], [c for c in ids if c not in out]


def none_ranking(query_id: str, seeds: Sequence[PaperRecord]) -> RankedList:
    """Plain search output: seeds in retrieval order, scores falling linearly from 100."""
    n = len(seeds)
    return RankedList.build(query_id, Method.NONE, ((p, 100.0 * (1 - i / n)) for i, p in enumerate(seeds)))


class QueryRun:
    def __init__(self, entry: ManifestEntry, cfg: RunConfig, services: Services, layout: RunLayout,
                 stages: frozenset[str], resume: bool) -> None:
        self.entry = entry
        self.cfg = cfg
        self.s = services
        self.layout = layout
        self.stages = stages
        self.resume = resume
        self.qid = entry.query_id
        self._doc: QueryDocument | None = None

    def _reuse(self, stage: str, path: Path) -> bool:
        if path.exists() and (self.resume or stage not in self.stages):
            return True
        if stage not in self.stages:
            raise MissingArtifacts(stage, f"{self.qid}: {path.relative_to(self.layout.root)}")
        return False

    # -- search ------------------------------------------------------------------

    async def document(self) -> QueryDocument:
        if self._doc is not None:
            return self._doc
        doc = self.entry.document(self.cfg.preprocess)
        path = self.layout.query(self.qid)
        if path.exists():
            paper = PaperRecord.from_dict(read_json(path)["paper"])
            doc = dataclasses.replace(doc, paper=paper)
        elif not doc.paper.title and "search" in self.stages:
            found, _ = await resolve_records([self.qid], {}, self.s.openalex)
            if found:
                meta = found[0]
                doc = dataclasses.replace(doc, paper=dataclasses.replace(
                    doc.paper, title=meta.title, abstract=doc.paper.abstract or meta.abstract,
                    authors=doc.paper.authors or meta.authors, openalex_id=meta.openalex_id))
        self._doc = doc
        return doc

    async def keyword_queries(self) -> KeywordQuerySet:
        path = self.layout.query(self.qid)
        if self._reuse("search", path):
            return KeywordQuerySet.from_dict(read_json(path)["keyword_queries"])
        doc = await self.document()
        kq = await generate_keyword_queries(doc, self.s.chat, self.s.cache)
        write_json(path, {"paper": doc.paper.to_dict(), "n_p": doc.n_p,
                          "ground_truth": list(doc.ground_truth_refs), "keyword_queries": kq.to_dict()})
        return kq

    async def seeds(self) -> list[PaperRecord]:
        path = self.layout.seeds(self.qid)
        if self._reuse("search", path):
            return read_records(path)
        kq = await self.keyword_queries()

        async def one(q: str, provider: str) -> list[PaperRecord]:
            pq = translate_query(q, provider, self.cfg.providers[provider].page_size)
            try:
                return await self.s.search_clients[provider].search(pq)
            except (NotFound, UpstreamError) as exc:
                logger.warning("%s: %s search for %r failed: %s", self.qid, provider, q, exc)
                return []

        jobs = [one(q, p) for q in kq.queries for p in self.cfg.search_providers]
        hits = [r for batch in await asyncio.gather(*jobs) for r in batch]
        seeds = [r for r in dedupe(hits) if r.canonical_id != self.qid]
        write_records(path, seeds)
        return seeds

    # -- expand ------------------------------------------------------------------

    async def pool(self) -> CandidatePool:
        path = self.layout.pool(self.qid)
        if self._reuse("expand", path):
            return CandidatePool.read(path, self.qid)
        seeds = await self.seeds()
        pool = await expand(seeds, self.cfg.expansion, self.s.refs, query_id=self.qid)
        pool.papers = [p for p in pool.papers if p.canonical_id != self.qid]
        pool.depth_of.pop(self.qid, None)
        pool.write(path)
        return pool

    # -- rerank ------------------------------------------------------------------

    async def ranked(self, method: Method) -> RankedList:
        path = self.layout.ranked(method, self.qid)
        if self._reuse("rerank", path):
            return RankedList.from_rows(read_jsonl(path), self.qid, method)
        doc = await self.document()
        if method is Method.NONE:
            ranked = none_ranking(self.qid, await self.seeds())
        elif method is Method.QWEN_EMBED:
            ranked = await embed_rank(doc, await self.pool(), self.s.embed, self.s.cache)
        elif method is Method.DEBATE:
            ranked = await debate_rank(doc, await self.pool(), self.s.chat, self.cfg.debate_batch_size, self.s.cache)
        else:
            a = await self.ranked(Method.QWEN_EMBED)
            b = await self.ranked(Method.DEBATE)
            ranked = ensemble_rank(a, b, self.cfg.ensemble_normalization)
        write_jsonl(path, ranked.to_rows())
        return ranked

    # -- judge -------------------------------------------------------------------

    async def human(self) -> list[PaperRecord]:
        # shared by judge, coauthor and eval; whichever of them runs may build it
        path = self.layout.human_records(self.qid)
        owner = next((st for st in ("judge", "coauthor", "eval") if st in self.stages), "judge")
        if self._reuse(owner, path):
            return read_records(path)
        doc = await self.document()
        known: dict[str, PaperRecord] = {}
        if self.layout.pool(self.qid).exists() or "expand" in self.stages:
            known = {p.canonical_id: p for p in (await self.pool()).papers}
        records, missing = await resolve_records(doc.ground_truth_refs, known, self.s.openalex)
        if missing:
            logger.info("%s: %d of %d human references unresolved", self.qid, len(missing), doc.n_p)
        write_records(path, records)
        return records

    async def verdicts(self, source: str) -> list[JudgeVerdict]:
        path = self.layout.verdicts(source, self.qid)
        if self._reuse("judge", path):
            return read_verdicts(path)
        doc = await self.document()
        if source == HUMAN:
            candidates = [p for p in await self.human() if p.title]
            k_max = max(1, len(candidates))
        else:
            candidates = await self.ranked(Method(source))
            k_max = self.cfg.judge.k_max
        result = await self.s.judge.judge_set(doc, candidates, k_max, self.cfg.judge.min_completeness)
        write_verdicts(path, result.verdicts)
        write_json(self.layout.judge_failures(source, self.qid), result.failures)
        return result.verdicts

    # -- coauthor ----------------------------------------------------------------

    async def distances(self) -> list[dict[str, Any]]:
        path = self.layout.coauthor(self.qid)
        if self._reuse("coauthor", path):
            return read_jsonl(path)
        doc = await self.document()
        lists: dict[str, list[PaperRecord]] = {}
        for m in self.cfg.rerankers:
            lists[m.value] = [e.paper for e in (await self.ranked(m)).top(doc.n_p)]
        lists[HUMAN] = await self.human()

        arxiv_ids = [doc.paper.arxiv_id] + [p.arxiv_id for ps in lists.values() for p in ps if p.arxiv_id]
        rec = await reconcile_arxiv_to_openalex([a for a in arxiv_ids if a], self.s.openalex)

        def authors_of(p: PaperRecord) -> tuple[str, ...]:
            if p.author_ids:
                return tuple(sorted(p.author_ids))
            hit = rec.resolved.get(p.arxiv_id) if p.arxiv_id else None
            return hit.author_ids if hit else ()

        analyzer = QueryDistanceAnalyzer(self.qid, authors_of(doc.paper), self.s.neighborhoods)
        rows = []
        for source in sorted(lists):
            pairs: list[PairDistance] = await analyzer.classify_many(
                [(p.canonical_id, authors_of(p)) for p in lists[source]])
            rows += [{"source": source, "query_id": pd.query_id, "candidate_id": pd.candidate_id,
                      "d_class": pd.d_class.value if pd.d_class else None, "resolvable": pd.resolvable}
                     for pd in pairs]
        write_jsonl(path, rows)
        return rows

    # -- eval --------------------------------------------------------------------

    async def clusters(self) -> ClusterAssignment | None:
        mode = self.cfg.metrics.cluster_labels
        if mode == "none":
            return None
        pool = await self.pool()
        if mode != "baseline":
            labels = dict(self.s.fixed_labels().labels)
        else:
            path = self.layout.clusters(self.qid)
            if self._reuse("eval", path):
                return ClusterAssignment.read(path)
            vecs = await embed_pool(pool.papers, self.s.embed, self.s.cache)
            labels = dict(baseline_cluster(vecs, self.cfg.metrics.cluster_threshold).labels)
        # papers with nothing to embed get singleton clusters rather than no label
        for p in pool.papers:
            labels.setdefault(p.canonical_id, NOISE)
        clusters = ClusterAssignment(labels)
        if mode == "baseline":
            clusters.write(self.layout.clusters(self.qid))
        return clusters

    async def evaluation(self) -> dict[str, Any]:
        path = self.layout.eval(self.qid)
        if self._reuse("eval", path):
            return read_json(path)
        doc = await self.document()
        truth = set(doc.ground_truth_refs)
        mcfg = self.cfg.metrics
        needs_clusters = any(m is not Method.NONE for m in self.cfg.rerankers)
        clusters = await self.clusters() if needs_clusters else None
        methods: dict[str, Any] = {}
        for m in self.cfg.rerankers:
            ranked = await self.ranked(m)
            curve = precision_recall_at_k(ranked, truth, mcfg.ks)
            row: dict[str, Any] = {"n": len(ranked),
                                   "pr": [[p.k, p.precision, p.recall, p.hits] for p in curve.points]}
            if clusters is not None and m is not Method.NONE:
                row["alpha_ndcg"] = {str(k): alpha_ndcg(ranked, truth, clusters, mcfg.alpha, k)
                                     for k in mcfg.ndcg_ks}
            methods[m.value] = row
        report = {"query_id": self.qid, "n_p": doc.n_p, "alpha": mcfg.alpha, "methods": methods}
        write_json(path, report)
        return report

    async def run(self) -> None:
        if "search" in self.stages:
            await self.seeds()
        if "expand" in self.stages:
            await self.pool()
        if "rerank" in self.stages:
            for m in self.cfg.rerankers:
                await self.ranked(m)
        if "judge" in self.stages and self.cfg.judge.enabled:
            for source in [m.value for m in self.cfg.rerankers] + [HUMAN]:
                await self.verdicts(source)
        if "coauthor" in self.stages and self.cfg.coauthor:
            await self.distances()
        if "eval" in self.stages:
            await self.evaluation()


@dataclass
class RunResult:
    run_dir: Path
    statuses: dict[str, str] = field(default_factory=dict)
    network_calls: int = 0
    success_fraction: float = 0.0
    ok: bool = False


async def run_pipeline_async(cfg: RunConfig, stages: Iterable[str] = STAGES,
                             transport: httpx.AsyncBaseTransport | None = None,
                             resume: bool = True) -> RunResult:
    stages = frozenset(stages)
    unknown = stages - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stages: {sorted(unknown)}")
    manifest = load_manifest(cfg.benchmark_manifest)
    layout = RunLayout(Path(cfg.run_dir))
    layout.root.mkdir(parents=True, exist_ok=True)
    result = RunResult(layout.root)

    async with httpx.AsyncClient(transport=transport, timeout=120.0, follow_redirects=True) as client:
        services = Services(cfg, client)
        sem = asyncio.Semaphore(cfg.max_parallel_queries)

        async def one(entry: ManifestEntry) -> None:
            async with sem:
                try:
                    await QueryRun(entry, cfg, services, layout, stages, resume).run()
                    result.statuses[entry.query_id] = "ok"
                except (DeepLitError, OSError, ValueError) as exc:
                    # one bad paper must not sink the batch
                    logger.error("%s failed: %s: %s", entry.query_id, type(exc).__name__, exc)
                    result.statuses[entry.query_id] = f"failed: {type(exc).__name__}: {exc}"
                    if isinstance(exc, OfflineCacheMiss):
                        result.statuses[entry.query_id] += " (offline)"

        await asyncio.gather(*(one(e) for e in manifest.entries))
        result.network_calls = services.network_calls
        cache_stats = services.cache.stats.as_dict()

    n_ok = sum(s == "ok" for s in result.statuses.values())
    result.success_fraction = n_ok / len(manifest.entries)
    result.ok = result.success_fraction >= cfg.min_success_fraction and (n_ok > 0)
    if "report" in stages and n_ok:
        emit_reports(layout.root)
    write_json(layout.manifest, {
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "stages": sorted(stages),
        "queries": dict(sorted(result.statuses.items())),
        "cache": cache_stats,
        "network_calls": result.network_calls,
    })
    return result


def run_pipeline(cfg: RunConfig, stages: Iterable[str] = STAGES,
                 transport: httpx.AsyncBaseTransport | None = None, resume: bool = True) -> RunResult:
    return asyncio.run(run_pipeline_async(cfg, stages, transport, resume))
