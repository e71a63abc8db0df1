"""Exact brute-force cosine kNN over unit-normalized embeddings.

A full scan is milliseconds at this corpus scale; exactness keeps the
search oracle-checkable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .lexical import ScoredHit


class VectorBuildError(DataError):
    """Bad embedding inputs: dimension mismatch or zero-norm vector."""


@dataclass
class VectorIndex:
    """Doc-id aligned matrix of unit-norm embedding vectors.

    Rows are sorted by tiny_id ascending so score ties resolve
    deterministically.
    """

    doc_ids: list[str]
    doc_collections: list[str]
    matrix: np.ndarray  # shape (n, dimension), float64, rows unit-norm
    dimension: int


def build_vector_index(
    embeddings: list[tuple[str, np.ndarray]],
    collections: dict[str, str] | None = None,
) -> VectorIndex:
    """Normalize and stack (tiny_id, vector) pairs into a vector index.

    Rejects dimension mismatches, non-finite entries, and zero vectors.
    ``collections`` optionally maps tiny_id to its collection for filtered
    search.
    """
    if not embeddings:
        raise VectorBuildError("cannot build a vector index from no embeddings")
    ordered = sorted(embeddings, key=lambda e: e[0])
    dim = len(np.asarray(ordered[0][1], dtype=np.float64).reshape(-1))
    rows = []
    for tiny_id, vec in ordered:
        v = np.asarray(vec, dtype=np.float64).reshape(-1)
        if v.shape[0] != dim:
            raise VectorBuildError(f"dimension mismatch for {tiny_id!r}: {v.shape[0]} != {dim}")
        if not np.all(np.isfinite(v)):
            raise VectorBuildError(f"non-finite embedding entries for {tiny_id!r}")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise VectorBuildError(f"zero-norm embedding for {tiny_id!r}")
        rows.append(v / norm)
    doc_ids = [tiny_id for tiny_id, _ in ordered]
    colls = [collections.get(tid, "") if collections else "" for tid in doc_ids]
    return VectorIndex(doc_ids=doc_ids, doc_collections=colls, matrix=np.vstack(rows), dimension=dim)


def search_vector(
    index: VectorIndex,
    query_vec: np.ndarray,
    collections: set[str] | None = None,
    k: int = 10,
) -> list[ScoredHit]:
    """Exact top-k by cosine similarity; ties break by tiny_id ascending."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dimension:
        raise DataError(f"query dimension {q.shape[0]} != index dimension {index.dimension}")
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise DataError("query vector has zero norm")
    q = q / norm

    sims = index.matrix @ q
    if collections is not None:
        mask = np.array([c in collections for c in index.doc_collections])
        eligible = np.nonzero(mask)[0]
    else:
        eligible = np.arange(len(index.doc_ids))
    if eligible.size == 0:
        return []
    # Rows are pre-sorted by tiny_id, so a stable sort on -score breaks
    # ties by tiny_id ascending.
    order = eligible[np.argsort(-sims[eligible], kind="stable")][:k]
    return [ScoredHit(tiny_id=index.doc_ids[i], score=float(sims[i]), source="vector") for i in order]
