"""In-process lexical (BM25) and vector (exact cosine kNN) indexes."""

from .lexical import Bm25Params, LexicalIndex, ScoredHit, build_lexical_index, search_lexical, tokenize
from .persist import IndexBundle, load_bundle, save_bundle
from .vector import VectorIndex, build_vector_index, search_vector

__all__ = [
    "Bm25Params",
    "IndexBundle",
    "LexicalIndex",
    "ScoredHit",
    "VectorIndex",
    "build_lexical_index",
    "build_vector_index",
    "load_bundle",
    "save_bundle",
    "search_lexical",
    "search_vector",
    "tokenize",
]
