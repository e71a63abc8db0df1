"""BM25 inverted index with per-field boosts.

Scoring, for each field f with weight w_f:

    score_f = sum over query terms t of
              IDF(t) * tf_tf / (tf_tf + k1 * (1 - b + b * len_f / avglen_f))
    IDF(t)  = ln(1 + (N - df_t + 0.5) / (df_t + 0.5))
    total   = sum over fields of w_f * score_f

df_t counts documents containing t in any field. Query terms are the token
list of the query, duplicates included. Only documents with total > 0 are
hits; ties break by tiny_id ascending.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from ..corpus import FIELD_NAMES, IndexableDocument
from ..errors import DataError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DEFAULT_FIELD_WEIGHTS = {
    "name": 3.0,
    "designations": 2.0,
    "question_texts": 1.5,
    "definition": 1.0,
    "permissible_values": 1.0,
    "collection": 0.5,
}


class IndexBuildError(DataError):
    """The index cannot be built from the given documents."""


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of Unicode letters and digits, in order.

    No stemming, no stop words: "COVID-19 (Project 5)" tokenizes to
    ["covid", "19", "project", "5"].
    """
    return [t.lower() for t in _TOKEN_RE.findall(text)]


@dataclass(frozen=True)
class Bm25Params:
    """BM25 parameters: term-frequency saturation, length normalization, boosts."""

    k1: float = 1.2
    b: float = 0.75
    field_weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_FIELD_WEIGHTS))

    def validate(self) -> None:
        if self.k1 < 0:
            raise DataError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise DataError(f"b must be in [0, 1], got {self.b}")
        if any(w < 0 for w in self.field_weights.values()):
            raise DataError("field weights must be nonnegative")
        if not any(w > 0 for w in self.field_weights.values()):
            raise DataError("at least one field weight must be positive")
        unknown = set(self.field_weights) - set(FIELD_NAMES)
        if unknown:
            raise DataError(f"unknown field names in weights: {sorted(unknown)}")


@dataclass(frozen=True)
class SnapshotMeta:
    """Provenance of the indexed corpus."""

    corpus_date: str
    record_count: int


@dataclass(frozen=True)
class ScoredHit:
    tiny_id: str
    score: float
    source: str  # "lexical" or "vector"


@dataclass
class LexicalIndex:
    """Immutable-after-build inverted index.

    ``doc_ids`` is sorted ascending so positional ties resolve to tiny_id
    order. ``postings`` maps term -> doc position -> field -> tf (only
    nonzero tfs are stored).
    """

    doc_ids: list[str]
    doc_collections: list[str]
    postings: dict[str, dict[int, dict[str, int]]]
    doc_lengths: dict[str, list[int]]
    avg_lengths: dict[str, float]
    params: Bm25Params
    snapshot_meta: SnapshotMeta

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @classmethod
    def empty(cls, params: Bm25Params | None = None) -> "LexicalIndex":
        """A degenerate index over zero documents (every search is empty)."""
        p = params or Bm25Params()
        return cls(
            doc_ids=[],
            doc_collections=[],
            postings={},
            doc_lengths={f: [] for f in FIELD_NAMES},
            avg_lengths={f: 0.0 for f in FIELD_NAMES},
            params=p,
            snapshot_meta=SnapshotMeta(corpus_date="", record_count=0),
        )


def idf(n_docs: int, df: int) -> float:
    """ln(1 + (N - df + 0.5) / (df + 0.5)); positive for all 0 <= df <= N."""
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def build_lexical_index(
    docs: list[IndexableDocument],
    params: Bm25Params | None = None,
    snapshot: SnapshotMeta | None = None,
) -> LexicalIndex:
    """Build the inverted index. Rebuilding from equal docs scores identically."""
    params = params or Bm25Params()
    params.validate()
    if not docs:
        raise IndexBuildError("cannot build a lexical index from an empty corpus")
    seen = set()
    for d in docs:
        if d.tiny_id in seen:
            raise IndexBuildError(f"duplicate tiny_id in documents: {d.tiny_id!r}")
        seen.add(d.tiny_id)

    ordered = sorted(docs, key=lambda d: d.tiny_id)
    doc_ids = [d.tiny_id for d in ordered]
    doc_collections = [d.fielded_text.get("collection", "") for d in ordered]
    postings: dict[str, dict[int, dict[str, int]]] = {}
    doc_lengths: dict[str, list[int]] = {f: [] for f in FIELD_NAMES}

    for pos, doc in enumerate(ordered):
        for f in FIELD_NAMES:
            tokens = tokenize(doc.fielded_text.get(f, ""))
            doc_lengths[f].append(len(tokens))
            for t in tokens:
                postings.setdefault(t, {}).setdefault(pos, {})
                postings[t][pos][f] = postings[t][pos].get(f, 0) + 1

    n = len(ordered)
    avg_lengths = {f: sum(lengths) / n for f, lengths in doc_lengths.items()}
    meta = snapshot or SnapshotMeta(corpus_date="unknown", record_count=n)
    return LexicalIndex(
        doc_ids=doc_ids,
        doc_collections=doc_collections,
        postings=postings,
        doc_lengths=doc_lengths,
        avg_lengths=avg_lengths,
        params=params,
        snapshot_meta=meta,
    )


def search_lexical(
    index: LexicalIndex,
    query: str,
    collections: set[str] | None = None,
    k: int = 10,
) -> list[ScoredHit]:
    """Top-k documents by summed per-field weighted BM25 score.

    Restricted to ``collections`` when given. An empty or unmatched query
    returns an empty list.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    terms = tokenize(query)
    if not terms or index.n_docs == 0:
        return []

    # Candidates: documents containing at least one query term.
    candidates: set[int] = set()
    idfs: dict[str, float] = {}
    for t in set(terms):
        plist = index.postings.get(t)
        if plist is None:
            continue
        idfs[t] = idf(index.n_docs, len(plist))
        candidates.update(plist.keys())
    if not candidates:
        return []

    params = index.params
    scored: list[tuple[float, str]] = []
    for pos in candidates:
        if collections is not None and index.doc_collections[pos] not in collections:
            continue
        # Field-major, then query-term order: fixes the floating-point
        # summation order so an exhaustive rescorer reproduces scores exactly.
        total = 0.0
        for f in FIELD_NAMES:
            w = params.field_weights.get(f, 0.0)
            if w == 0.0:
                continue
            avglen = index.avg_lengths[f]
            field_score = 0.0
            for t in terms:
                if t not in idfs:
                    continue
                tf = index.postings[t].get(pos, {}).get(f, 0)
                if tf == 0:
                    continue
                denom = tf + params.k1 * (1.0 - params.b + params.b * index.doc_lengths[f][pos] / avglen)
                field_score += idfs[t] * tf / denom
            total += w * field_score
        if total > 0.0:
            scored.append((total, index.doc_ids[pos]))

    scored.sort(key=lambda s: (-s[0], s[1]))
    return [ScoredHit(tiny_id=t, score=s, source="lexical") for s, t in scored[:k]]
