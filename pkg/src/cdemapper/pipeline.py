"""The recommendation engine: expansion, hybrid retrieval, reciprocal rank
fusion, top-k selection, LLM-suggested promotion, manual search, and value
mapping.

BM25 and cosine scores live on incomparable scales, so the two result lists
are combined by reciprocal rank fusion; the raw scores stay on each
candidate for display. The re-ranker promotes exactly one candidate to rank
1 and flags it, leaving the relative order of the rest untouched.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .elements import SourceElement
from .errors import DataError
from .index.lexical import ScoredHit, search_lexical
from .index.persist import IndexBundle
from .index.vector import search_vector
from .llm.gateway import ExpandedQuery, LlmGateway, ValueMatch

LEXICAL_QUERY_MODES = ("name_only", "name_and_description")

# Method presets named after the benchmarked configurations.
PRESETS: dict[str, dict[str, bool]] = {
    "bm25": {},
    "bm25+emb": {"use_embedding": True},
    "bm25+rank": {"use_rerank": True},
    "bm25+emb+rank": {"use_embedding": True, "use_rerank": True},
}


class MissingVectorIndexError(DataError):
    """Embedding retrieval requested but the index bundle has no vectors."""


@dataclass(frozen=True)
class PipelineConfig:
    use_expansion: bool = False
    use_embedding: bool = False
    use_rerank: bool = False
    collections: frozenset[str] | None = None
    top_k: int = 10
    rrf_k: int = 60
    lexical_query_mode: str = "name_and_description"
    retrieval_depth_factor: int = 3
    expansion_lexical_only: bool = False  # ablation: leave the embedding query unexpanded

    def validate(self) -> None:
        if self.top_k < 1:
            raise DataError(f"top_k must be >= 1, got {self.top_k}")
        if self.rrf_k < 1:
            raise DataError(f"rrf_k must be >= 1, got {self.rrf_k}")
        if self.retrieval_depth_factor < 1:
            raise DataError("retrieval_depth_factor must be >= 1")
        if self.lexical_query_mode not in LEXICAL_QUERY_MODES:
            raise DataError(f"lexical_query_mode must be one of {LEXICAL_QUERY_MODES}")

    def to_dict(self) -> dict:
        return {
            "expansion": "on" if self.use_expansion else "off",
            "embedding": "on" if self.use_embedding else "off",
            "rerank": "on" if self.use_rerank else "off",
            "collections": ",".join(sorted(self.collections)) if self.collections else "",
            "top_k": self.top_k,
            "rrf_k": self.rrf_k,
            "lexical_query_mode": self.lexical_query_mode,
        }


def preset_config(
    name: str,
    collections: frozenset[str] | None = None,
    base: PipelineConfig | None = None,
) -> PipelineConfig:
    if name not in PRESETS:
        raise DataError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = base or PipelineConfig()
    return replace(cfg, collections=collections, **PRESETS[name])


def parse_flat_config(values: dict[str, str], base: PipelineConfig | None = None) -> PipelineConfig:
    """Build a config from a flat key-value document (file or query params).

    Recognized keys: expansion, embedding, rerank (on|off), collections
    (comma-separated), top_k, rrf_k, lexical_query_mode.
    """
    cfg = base or PipelineConfig()
    kwargs: dict = {}
    for key, raw in values.items():
        raw = raw.strip()
        if key in ("expansion", "embedding", "rerank"):
            if raw.lower() not in ("on", "off", "true", "false"):
                raise DataError(f"{key} must be on|off, got {raw!r}")
            kwargs[f"use_{key}"] = raw.lower() in ("on", "true")
        elif key == "collections":
            names = [c.strip() for c in raw.split(",") if c.strip()]
            kwargs["collections"] = frozenset(names) if names else None
        elif key in ("top_k", "rrf_k", "retrieval_depth_factor"):
            try:
                kwargs[key] = int(raw)
            except ValueError as exc:
                raise DataError(f"{key} must be an integer, got {raw!r}") from exc
        elif key == "lexical_query_mode":
            kwargs[key] = raw
        else:
            raise DataError(f"unknown config key {key!r}")
    cfg = replace(cfg, **kwargs)
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class Candidate:
    tiny_id: str
    rank: int
    fused_score: float
    lexical_score: float | None
    vector_score: float | None
    llm_suggested: bool
    name: str
    collection: str
    detail_url: str

    def to_dict(self) -> dict:
        return {
            "tiny_id": self.tiny_id,
            "rank": self.rank,
            "fused_score": self.fused_score,
            "lexical_score": self.lexical_score,
            "vector_score": self.vector_score,
            "llm_suggested": self.llm_suggested,
            "name": self.name,
            "collection": self.collection,
            "detail_url": self.detail_url,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Candidate":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


@dataclass
class CandidateList:
    element_id: str
    config: dict  # flat config snapshot, for reproducibility
    candidates: list[Candidate]
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "config": self.config,
            "candidates": [c.to_dict() for c in self.candidates],
            "timings": self.timings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CandidateList":
        return cls(
            element_id=d["element_id"],
            config=dict(d.get("config", {})),
            candidates=[Candidate.from_dict(c) for c in d.get("candidates", [])],
            timings=dict(d.get("timings", {})),
        )


def fuse(lexical: list[ScoredHit], vector: list[ScoredHit], rrf_k: int) -> list[tuple[str, float]]:
    """Reciprocal rank fusion: fused(d) = sum over lists of 1/(rrf_k + rank).

    Output sorted by fused score descending, ties by tiny_id ascending.
    Either list may be empty.
    """
    if rrf_k < 1:
        raise DataError(f"rrf_k must be >= 1, got {rrf_k}")
    fused: dict[str, float] = {}
    for hits in (lexical, vector):
        for rank, hit in enumerate(hits, start=1):
            fused[hit.tiny_id] = fused.get(hit.tiny_id, 0.0) + 1.0 / (rrf_k + rank)
    return sorted(fused.items(), key=lambda kv: (-kv[1], kv[0]))


def display_text(record, limit: int = 300) -> str:
    """Candidate serialization handed to the re-ranker: name, definition,
    collection, truncated to keep prompts inside context limits."""
    return f"{record.name} — {record.definition} ({record.collection})"[:limit]


def _query_text(term: str, description: str, mode: str) -> str:
    if mode == "name_only" or not description:
        return term
    return f"{term}\n{description}"


def recommend(
    element: SourceElement,
    config: PipelineConfig,
    bundle: IndexBundle,
    gateway: LlmGateway,
) -> CandidateList:
    """Recommend candidate CDEs for one source element.

    Stages: optional query expansion; lexical search at depth top_k x
    retrieval_depth_factor; optional embedding search at the same depth;
    reciprocal rank fusion; truncation to top_k; optional re-ranker
    promotion. Gateway degradation never fails the call.
    """
    config.validate()
    if not element.name:
        raise DataError("element name must be non-empty")
    timings: dict[str, float] = {}
    collections = set(config.collections) if config.collections is not None else None
    depth = config.top_k * config.retrieval_depth_factor

    t0 = time.perf_counter()
    if config.use_expansion:
        expanded = gateway.expand_query(element.name, element.description)
    else:
        expanded = ExpandedQuery(term=element.name, description=element.description)
    timings["expansion"] = time.perf_counter() - t0

    lex_query = _query_text(expanded.term, expanded.description, config.lexical_query_mode)
    t0 = time.perf_counter()
    lexical_hits = search_lexical(bundle.lexical, lex_query, collections, depth)
    timings["lexical"] = time.perf_counter() - t0

    vector_hits: list[ScoredHit] = []
    if config.use_embedding:
        if bundle.vectors is None:
            raise MissingVectorIndexError("index bundle was built without embeddings")
        if config.expansion_lexical_only:
            emb_query = _query_text(element.name, element.description, config.lexical_query_mode)
        else:
            emb_query = lex_query
        t0 = time.perf_counter()
        query_vec = gateway.embed([emb_query])[0]
        vector_hits = search_vector(bundle.vectors, query_vec, collections, depth)
        timings["vector"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fused = fuse(lexical_hits, vector_hits, config.rrf_k)[: config.top_k]
    timings["fusion"] = time.perf_counter() - t0

    lex_scores = {h.tiny_id: h.score for h in lexical_hits}
    vec_scores = {h.tiny_id: h.score for h in vector_hits}
    candidates = []
    for i, (tiny_id, fused_score) in enumerate(fused):
        record = bundle.records[tiny_id]
        candidates.append(
            Candidate(
                tiny_id=tiny_id,
                rank=i + 1,
                fused_score=fused_score,
                lexical_score=lex_scores.get(tiny_id),
                vector_score=vec_scores.get(tiny_id),
                llm_suggested=False,
                name=record.name,
                collection=record.collection,
                detail_url=record.detail_url,
            )
        )

    if config.use_rerank and candidates:
        t0 = time.perf_counter()
        displays = [(c.tiny_id, display_text(bundle.records[c.tiny_id])) for c in candidates]
        result = gateway.rerank(expanded.term, expanded.description, displays)
        candidates = promote(candidates, result.order[0])
        timings["rerank"] = time.perf_counter() - t0

    return CandidateList(
        element_id=element.element_id,
        config=config.to_dict(),
        candidates=candidates,
        timings=timings,
    )


def promote(candidates: list[Candidate], promoted_id: str) -> list[Candidate]:
    """Move the promoted candidate to rank 1 with the llm_suggested flag,
    shifting the others down without permuting them."""
    promoted = next(c for c in candidates if c.tiny_id == promoted_id)
    rest = [c for c in candidates if c.tiny_id != promoted_id]
    ordered = [replace(promoted, llm_suggested=True)] + rest
    return [replace(c, rank=i + 1) for i, c in enumerate(ordered)]


def manual_search(
    query: str,
    collections: set[str] | None,
    bundle: IndexBundle,
    config: PipelineConfig,
    gateway: LlmGateway,
) -> CandidateList:
    """Custom search across target collections: the recommend pipeline with
    the raw user query, no expansion, no rerank."""
    if not query:
        raise DataError("query must be non-empty")
    cfg = replace(
        config,
        use_expansion=False,
        use_rerank=False,
        collections=frozenset(collections) if collections else None,
    )
    element = SourceElement(element_id="__manual__", name=query, description="")
    return recommend(element, cfg, bundle, gateway)


def map_values(source_values: list[str], target, gateway: LlmGateway) -> list[ValueMatch] | None:
    """One ValueMatch per source value, in source order.

    Returns None when the target CDE has no permissible values (value
    mapping unavailable), never an exception.
    """
    if not target.permissible_values:
        return None
    value_set = list(target.permissible_values)
    return [gateway.map_value(v, value_set) for v in source_values]
