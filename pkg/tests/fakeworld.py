"""A small deterministic scholarly world served over httpx.MockTransport.

Covers the OpenAlex, Semantic Scholar and arXiv endpoints the clients use,
plus OpenAI-compatible chat and embedding endpoints whose answers depend only
on word overlap, so every run is reproducible.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from urllib.parse import unquote
from xml.sax.saxutils import escape

import httpx

TOPICS = {
    "retrieval": ["retrieval", "ranking", "query", "dense", "passage", "index", "rerank", "recall"],
    "graph": ["graph", "node", "edge", "message", "spectral", "embedding", "community", "walk"],
    "vision": ["image", "pixel", "convolution", "segmentation", "detection", "vision", "patch", "object"],
}
OPENALEX = "https://api.openalex.org"
S2 = "https://api.semanticscholar.org/graph/v1"
ARXIV = "https://export.arxiv.org/api"
LLM = "http://llm.test/v1"
EMBED_DIM = 32
_TOKEN = re.compile(r"[a-z]{3,}")


def tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass
class FakePaper:
    arxiv_id: str
    title: str
    abstract: str
    authors: list[str]
    refs: list[str] = field(default_factory=list)
    topic: str = ""
    s2_only_refs: list[str] = field(default_factory=list)
    s2_missing_refs: list[str] = field(default_factory=list)

    @property
    def work_id(self) -> str:
        return "W" + self.arxiv_id.replace(".", "")

    @property
    def doi(self) -> str:
        return f"10.48550/arxiv.{self.arxiv_id}"


def build_world(seed: int = 7, per_topic: int = 12) -> dict[str, FakePaper]:
    rng = random.Random(seed)
    papers: dict[str, FakePaper] = {}
    author_pool = {t: [f"A{i}{j}" for j in range(6)] for i, t in enumerate(TOPICS, start=1)}
    n = 0
    for topic, vocab in TOPICS.items():
        for _ in range(per_topic):
            n += 1
            aid = f"2101.{n:05d}"
            words = rng.sample(vocab, 3)
            title = f"{words[0].title()} {words[1]} for {words[2]} tasks"
            abstract = " ".join(rng.choice(vocab) for _ in range(12)) + "."
            authors = rng.sample(author_pool[topic], 2)
            if rng.random() < 0.2:  # cross-topic collaborations keep the graph connected
                other = rng.choice([t for t in TOPICS if t != topic])
                authors.append(rng.choice(author_pool[other]))
            earlier = [p for p in papers.values()]
            same = [p.arxiv_id for p in earlier if p.topic == topic]
            cross = [p.arxiv_id for p in earlier if p.topic != topic]
            refs = rng.sample(same, min(3, len(same)))
            if cross and rng.random() < 0.3:
                refs.append(rng.choice(cross))
            papers[aid] = FakePaper(aid, title, abstract, sorted(authors), refs, topic)
    # a few references only Semantic Scholar knows about
    ids = sorted(papers)
    for aid in ids[5::7]:
        cands = [r for r in ids if r < aid and r not in papers[aid].refs]
        if cands:
            papers[aid].s2_only_refs.append(rng.choice(cands))
    return papers


def add_query_papers(papers: dict[str, FakePaper]) -> dict[str, FakePaper]:
    """Two query papers; their references are the benchmark ground truth."""
    by_topic = {t: sorted(p.arxiv_id for p in papers.values() if p.topic == t) for t in TOPICS}
    q1 = FakePaper("2401.00001", "Dense passage retrieval with query rerank",
                   "We study dense retrieval and rerank passage index recall.",
                   ["A10", "A11", "A40"], by_topic["retrieval"][-4:] + [by_topic["vision"][0]], "retrieval")
    q2 = FakePaper("2401.00002", "Spectral graph message walk",
                   "Node embedding with spectral graph message passing and community walks.",
                   ["A20", "A41"], by_topic["graph"][-3:] + [by_topic["retrieval"][2]], "graph")
    out = dict(papers)
    out[q1.arxiv_id] = q1
    out[q2.arxiv_id] = q2
    return out


def query_full_text(p: FakePaper) -> str:
    body = " ".join(TOPICS[p.topic]) + " " + p.abstract
    return f"{p.title}\n\n{p.abstract}\n\nIntroduction. {body}\n"


class FakeWorld:
    def __init__(self, papers: dict[str, FakePaper] | None = None, page_size_cap: int = 200) -> None:
        self.papers = papers if papers is not None else add_query_papers(build_world())
        self.by_work = {p.work_id: p for p in self.papers.values()}
        self.by_doi = {p.doi: p for p in self.papers.values()}
        self.calls: Counter[str] = Counter()
        self.page_size_cap = page_size_cap
        self.fail: dict[str, int] = {}  # route -> number of 503s still to serve
        self.author_names = {a: f"Author {a}" for p in self.papers.values() for a in p.authors}
        self.hidden: dict[str, set[str]] = {"openalex": set(), "s2": set()}  # arXiv ids a provider lacks

    # -- payload shapes --------------------------------------------------------

    def work_json(self, p: FakePaper) -> dict:
        inv: dict[str, list[int]] = {}
        for i, w in enumerate(p.abstract.split()):
            inv.setdefault(w, []).append(i)
        return {
            "id": f"https://openalex.org/{p.work_id}",
            "doi": f"https://doi.org/{p.doi}",
            "title": p.title,
            "display_name": p.title,
            "publication_date": f"20{p.arxiv_id[:2]}-{p.arxiv_id[2:4]}-01",
            "abstract_inverted_index": inv,
            "authorships": [{"author": {"id": f"https://openalex.org/{a}", "display_name": self.author_names[a]}}
                            for a in p.authors],
            "referenced_works": [f"https://openalex.org/{self.papers[r].work_id}" for r in p.refs],
        }

    def s2_json(self, p: FakePaper) -> dict:
        return {"paperId": "s2" + p.work_id, "externalIds": {"ArXiv": p.arxiv_id}, "title": p.title,
                "abstract": p.abstract, "authors": [{"name": self.author_names[a]} for a in p.authors]}

    def atom(self, papers: list[FakePaper]) -> bytes:
        entries = "".join(
            f"<entry><id>http://arxiv.org/abs/{p.arxiv_id}v1</id><title>{escape(p.title)}</title>"
            f"<summary>{escape(p.abstract)}</summary>"
            + "".join(f"<author><name>{self.author_names[a]}</name></author>" for a in p.authors)
            + "</entry>"
            for p in papers
        )
        return (f'<?xml version="1.0" encoding="UTF-8"?><feed xmlns="http://www.w3.org/2005/Atom" '
                f'xmlns:arxiv="http://arxiv.org/schemas/atom">{entries}</feed>').encode()

    def search(self, text: str, limit: int) -> list[FakePaper]:
        terms = set(tokens(text))
        scored = []
        for p in self.papers.values():
            overlap = len(terms & set(tokens(p.title + " " + p.abstract)))
            if overlap:
                scored.append((-overlap, p.arxiv_id, p))
        return [p for _, _, p in sorted(scored)][:limit]

    def works_of(self, author: str) -> list[FakePaper]:
        return sorted((p for p in self.papers.values() if author in p.authors), key=lambda p: p.arxiv_id,
                      reverse=True)

    # -- routing ---------------------------------------------------------------

    def __call__(self, request: httpx.Request) -> httpx.Response:
        url = str(request.url)
        route = self._route(request)
        self.calls[route] += 1
        if self.fail.get(route, 0) > 0:
            self.fail[route] -= 1
            return httpx.Response(503)
        try:
            return self._handle(route, request)
        except KeyError:
            return httpx.Response(404, json={"error": f"not found: {url}"})

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self)

    @property
    def total_calls(self) -> int:
        return sum(self.calls.values())

    def _route(self, request: httpx.Request) -> str:
        host, path = request.url.host, request.url.path
        if host == "api.openalex.org":
            if path == "/works":
                f = request.url.params.get("filter", "")
                if f.startswith("doi:"):
                    return "openalex.works.doi"
                if f.startswith("openalex:"):
                    return "openalex.works.ids"
                if f.startswith("author.id:"):
                    return "openalex.works.author"
                return "openalex.search"
            if path == "/authors":
                return "openalex.authors"
            return "openalex.work"
        if host == "api.semanticscholar.org":
            return "s2.search" if path.endswith("/search") else "s2.references"
        if host == "export.arxiv.org":
            return "arxiv.search"
        if host == "llm.test":
            return "llm.embeddings" if path.endswith("/embeddings") else "llm.chat"
        return "unknown"

    def _handle(self, route: str, request: httpx.Request) -> httpx.Response:
        q = request.url.params
        if route == "openalex.search":
            per = int(q.get("per-page", 25))
            return httpx.Response(200, json={"results": [self.work_json(p) for p in self.search(q["search"], per)]})
        if route == "openalex.works.doi":
            dois = q["filter"][4:].split("|")
            assert len(dois) <= 50, "OpenAlex filters accept at most 50 ids"
            return httpx.Response(200, json={"results": [self.work_json(self.by_doi[d]) for d in dois
                                                         if d in self.by_doi]})
        if route == "openalex.works.ids":
            ids = q["filter"][9:].split("|")
            assert len(ids) <= 50
            return httpx.Response(200, json={"results": [self.work_json(self.by_work[w]) for w in ids
                                                         if w in self.by_work]})
        if route == "openalex.works.author":
            author = q["filter"][len("author.id:"):]
            per, page = min(int(q.get("per-page", 25)), self.page_size_cap), int(q.get("page", 1))
            works = self.works_of(author)[(page - 1) * per: page * per]
            return httpx.Response(200, json={"results": [self.work_json(p) for p in works]})
        if route == "openalex.authors":
            ids = q["filter"][9:].split("|")
            assert len(ids) <= 50
            return httpx.Response(200, json={"results": [{"id": f"https://openalex.org/{a}",
                                                          "display_name": self.author_names[a]}
                                                         for a in ids if a in self.author_names]})
        if route == "openalex.work":
            key = unquote(request.url.path.split("/works/", 1)[1])
            p = self.by_doi[key[4:]] if key.startswith("doi:") else self.by_work[key]
            if p.arxiv_id in self.hidden["openalex"]:
                raise KeyError(key)
            return httpx.Response(200, json=self.work_json(p))
        if route == "s2.search":
            limit = int(q.get("limit", 25))
            return httpx.Response(200, json={"data": [self.s2_json(p) for p in self.search(q["query"], limit)]})
        if route == "s2.references":
            key = unquote(request.url.path.split("/paper/", 1)[1].rsplit("/references", 1)[0])
            if key.startswith("arXiv:"):
                p = self.papers[key[6:]]
            elif key.startswith("s2W"):
                p = self.by_work[key[2:]]
            else:
                raise KeyError(key)
            if p.arxiv_id in self.hidden["s2"]:
                raise KeyError(key)
            refs = [r for r in p.refs if r not in p.s2_missing_refs] + p.s2_only_refs
            return httpx.Response(200, json={"data": [{"citedPaper": self.s2_json(self.papers[r])} for r in refs]})
        if route == "arxiv.search":
            limit = int(q.get("max_results", 25))
            text = re.sub(r"all:|AND|\"", " ", q["search_query"])
            return httpx.Response(200, content=self.atom(self.search(text, limit)),
                                  headers={"content-type": "application/atom+xml"})
        if route == "llm.embeddings":
            body = json.loads(request.content)
            data = [{"index": i, "embedding": embed_text(t)} for i, t in enumerate(body["input"])]
            return httpx.Response(200, json={"data": data})
        if route == "llm.chat":
            body = json.loads(request.content)
            return httpx.Response(200, json={"choices": [{"message": {"content": chat_reply(body["messages"])}}]})
        raise KeyError(route)


# -- stub models ---------------------------------------------------------------


def embed_text(text: str) -> list[float]:
    vec = [0.0] * EMBED_DIM
    for t in tokens(text):
        vec[int(hashlib.sha256(t.encode()).hexdigest(), 16) % EMBED_DIM] += 1.0
    return vec


VOCAB = {w for words in TOPICS.values() for w in words}


def _overlap(a: str, b: str) -> int:
    return len(set(tokens(a)) & set(tokens(b)) & VOCAB)


def chat_reply(messages: list[dict]) -> str:
    system, user = messages[0]["content"], messages[-1]["content"]
    if "semantic relevance" in system:
        return _judge_reply(user)
    if "<candidate_paper_abstracts>" in user:
        return _debate_reply(user)
    if "search queries" in user:
        return _keyword_reply(user)
    return "I cannot help with that."


def _keyword_reply(user: str) -> str:
    text = user.split("Here is the abstract:", 1)[1].split("\n\nInstructions.", 1)[0]
    common = [w for w, _ in Counter(tokens(text)).most_common(6)]
    queries = [" ".join(common[i:i + 2]) for i in range(0, len(common), 2)]
    return "```json\n" + json.dumps({"queries": queries}) + "\n```"


def _debate_reply(user: str) -> str:
    query = user.split("<query_paper>", 1)[1].split("</query_paper>", 1)[0]
    blocks = []
    for m in re.finditer(r"\[(\d+)\] paper_id: (\S+)\nTitle: (.*)\nAbstract: (.*)", user):
        _, pid, title, abstract = m.groups()
        score = min(100, 15 * _overlap(query, title + " " + abstract))
        blocks.append(
            f"<arguments_for>\n{pid}: shares vocabulary with the query.\n</arguments_for>\n"
            f"<arguments_against>\n{pid}: may be tangential.\n</arguments_against>\n"
            f"<probability>\npaper_id: {pid}\nscore: {score}/100\n</probability>"
        )
    return "\n".join(blocks)


def _judge_reply(user: str) -> str:
    q_title = re.search(r"Query Paper Details:\n\s*Title: (.*)", user).group(1)
    q_abs = re.search(r"\n\s*Abstract: (.*)", user).group(1)
    cand = user.split("Candidate Paper:", 1)[1].split("Instructions.", 1)[0]
    grade = max(0, min(5, _overlap(q_title + " " + q_abs, cand) - 1))
    return json.dumps({"paper_to_paper_relevance": {"relevanceScore": grade, "confidenceLevel": 4,
                                                    "summaryStatement": f"{grade} shared terms"}})
