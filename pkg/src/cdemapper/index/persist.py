"""On-disk index artifact: a directory holding meta, lexical, and vector files.

The format is versioned; loading an artifact written under a different
version fails fast. load(save(x)) produces identical search results.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus import CdeRecord, load_corpus, serialize_corpus
from ..errors import DataError
from .lexical import Bm25Params, LexicalIndex, SnapshotMeta
from .vector import VectorIndex

FORMAT_VERSION = 1


class IndexArtifactError(DataError):
    """Missing, corrupt, or version-mismatched index artifact."""


@dataclass
class IndexBundle:
    """Everything the pipeline needs at query time."""

    records: dict[str, CdeRecord]
    lexical: LexicalIndex
    vectors: VectorIndex | None

    def collection_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.records.values():
            counts[r.collection] = counts.get(r.collection, 0) + 1
        return dict(sorted(counts.items()))


def save_bundle(bundle: IndexBundle, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lex = bundle.lexical
    meta = {
        "format_version": FORMAT_VERSION,
        "corpus_date": lex.snapshot_meta.corpus_date,
        "record_count": lex.snapshot_meta.record_count,
        "bm25": {"k1": lex.params.k1, "b": lex.params.b, "field_weights": lex.params.field_weights},
        "has_vectors": bundle.vectors is not None,
        "vector_dimension": bundle.vectors.dimension if bundle.vectors else None,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")

    records = sorted(bundle.records.values(), key=lambda r: r.tiny_id)
    with gzip.open(out / "records.json.gz", "wb") as fh:
        fh.write(serialize_corpus(records))

    lexical_payload = {
        "doc_ids": lex.doc_ids,
        "doc_collections": lex.doc_collections,
        "postings": {t: {str(pos): tfs for pos, tfs in plist.items()} for t, plist in lex.postings.items()},
        "doc_lengths": lex.doc_lengths,
        "avg_lengths": lex.avg_lengths,
    }
    with gzip.open(out / "lexical.json.gz", "wt", encoding="utf-8") as fh:
        json.dump(lexical_payload, fh)

    if bundle.vectors is not None:
        np.savez_compressed(
            out / "vectors.npz",
            doc_ids=np.array(bundle.vectors.doc_ids),
            doc_collections=np.array(bundle.vectors.doc_collections),
            matrix=bundle.vectors.matrix,
        )


def load_bundle(in_dir: str | Path) -> IndexBundle:
    path = Path(in_dir)
    meta_path = path / "meta.json"
    if not meta_path.exists():
        raise IndexArtifactError(f"no index artifact at {path} (missing meta.json)")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise IndexArtifactError(f"index format version {version} != supported {FORMAT_VERSION}")

    with gzip.open(path / "records.json.gz", "rb") as fh:
        loaded = load_corpus(fh.read())
    records = {r.tiny_id: r for r in loaded.records}

    with gzip.open(path / "lexical.json.gz", "rt", encoding="utf-8") as fh:
        lp = json.load(fh)
    params = Bm25Params(
        k1=meta["bm25"]["k1"], b=meta["bm25"]["b"], field_weights=dict(meta["bm25"]["field_weights"])
    )
    lexical = LexicalIndex(
        doc_ids=list(lp["doc_ids"]),
        doc_collections=list(lp["doc_collections"]),
        postings={
            t: {int(pos): {f: int(tf) for f, tf in tfs.items()} for pos, tfs in plist.items()}
            for t, plist in lp["postings"].items()
        },
        doc_lengths={f: list(map(int, lengths)) for f, lengths in lp["doc_lengths"].items()},
        avg_lengths={f: float(v) for f, v in lp["avg_lengths"].items()},
        params=params,
        snapshot_meta=SnapshotMeta(corpus_date=meta["corpus_date"], record_count=meta["record_count"]),
    )

    vectors = None
    if meta.get("has_vectors"):
        npz = np.load(path / "vectors.npz", allow_pickle=False)
        vectors = VectorIndex(
            doc_ids=[str(x) for x in npz["doc_ids"]],
            doc_collections=[str(x) for x in npz["doc_collections"]],
            matrix=np.asarray(npz["matrix"], dtype=np.float64),
            dimension=int(npz["matrix"].shape[1]),
        )
    return IndexBundle(records=records, lexical=lexical, vectors=vectors)
