import numpy as np
import pytest

from cdemapper.errors import DataError
from cdemapper.index.vector import VectorBuildError, build_vector_index, search_vector

from oracles import cosine_rescore_all


class TestBuild:
    def test_normalizes_at_insert(self):
        idx = build_vector_index([("a", np.array([3.0, 4.0]))])
        assert np.allclose(idx.matrix[0], [0.6, 0.8])

    def test_dimension_mismatch(self):
        with pytest.raises(VectorBuildError):
            build_vector_index([("a", np.zeros(8) + 1), ("b", np.zeros(16) + 1)])

    def test_zero_norm_rejected(self):
        with pytest.raises(VectorBuildError):
            build_vector_index([("a", np.array([0.0, 0.0]))])

    def test_non_finite_rejected(self):
        with pytest.raises(VectorBuildError):
            build_vector_index([("a", np.array([1.0, np.nan]))])

    def test_all_rows_unit_norm(self):
        rng = np.random.default_rng(5)
        idx = build_vector_index([(f"d{i}", rng.normal(size=32)) for i in range(20)])
        norms = np.linalg.norm(idx.matrix, axis=1)
        assert np.all(np.abs(norms - 1.0) < 1e-6)


class TestSearch:
    def test_self_query_scores_one(self):
        rng = np.random.default_rng(11)
        vecs = [(f"d{i}", rng.normal(size=16)) for i in range(10)]
        idx = build_vector_index(vecs)
        hits = search_vector(idx, vecs[3][1], k=1)
        assert hits[0].tiny_id == "d3"
        assert abs(hits[0].score - 1.0) < 1e-6

    def test_orthogonal_scores_zero(self):
        idx = build_vector_index([("a", np.array([1.0, 0.0]))])
        hits = search_vector(idx, np.array([0.0, 1.0]), k=1)
        assert abs(hits[0].score) < 1e-6

    def test_dimension_mismatch_errors(self):
        idx = build_vector_index([("a", np.array([1.0, 0.0]))])
        with pytest.raises(DataError):
            search_vector(idx, np.ones(3), k=1)

    def test_collection_filter(self):
        idx = build_vector_index(
            [("a", np.array([1.0, 0.0])), ("b", np.array([0.9, 0.1]))],
            collections={"a": "NINDS", "b": "NEI"},
        )
        hits = search_vector(idx, np.array([1.0, 0.0]), collections={"NEI"}, k=5)
        assert [h.tiny_id for h in hits] == ["b"]

    def test_matches_full_scan_oracle(self):
        rng = np.random.default_rng(42)
        vecs = [(f"d{i:04d}", rng.normal(size=24)) for i in range(200)]
        idx = build_vector_index(vecs)
        for _ in range(25):
            q = rng.normal(size=24)
            got = search_vector(idx, q, k=12)
            want = cosine_rescore_all(vecs, q, k=12)
            assert [h.tiny_id for h in got] == [t for t, _ in want]
            for h, (_, score) in zip(got, want):
                assert abs(h.score - score) < 1e-9
