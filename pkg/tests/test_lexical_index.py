import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdemapper.corpus import IndexableDocument, preprocess
from cdemapper.index.lexical import (
    Bm25Params,
    IndexBuildError,
    build_lexical_index,
    idf,
    search_lexical,
    tokenize,
)

from conftest import make_record, random_records
from oracles import bm25_rescore_all


class TestTokenize:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("High Blood Pressure", ["high", "blood", "pressure"]),
            ("", []),
            ("COVID-19 (Project 5)", ["covid", "19", "project", "5"]),
            ("under_score", ["under", "score"]),
            ("  spaced\tout\n", ["spaced", "out"]),
        ],
    )
    def test_examples(self, text, expected):
        assert tokenize(text) == expected

    @given(st.text(max_size=80))
    def test_tokens_are_lowercase_alnum_runs(self, text):
        for tok in tokenize(text):
            assert tok == tok.lower()
            assert all(ch.isalnum() for ch in tok)


def fielded_doc(tiny_id: str, name: str, definition: str = "", collection: str = "") -> IndexableDocument:
    fields = {f: "" for f in ("name", "designations", "question_texts", "definition", "permissible_values", "collection")}
    fields["name"] = name
    fields["definition"] = definition
    fields["collection"] = collection
    return IndexableDocument(tiny_id=tiny_id, fielded_text=fields, embedding_text=name or "x")


class TestBuild:
    def test_counts(self):
        idx = build_lexical_index([fielded_doc(f"d{i}", "blood pressure") for i in range(3)])
        assert idx.n_docs == 3
        assert len(idx.doc_lengths["name"]) == 3

    def test_empty_corpus_is_build_error(self):
        with pytest.raises(IndexBuildError):
            build_lexical_index([])

    def test_duplicate_id_is_build_error(self):
        docs = [fielded_doc("d1", "a"), fielded_doc("d1", "b")]
        with pytest.raises(IndexBuildError):
            build_lexical_index(docs)

    def test_average_lengths_exact(self):
        docs = [fielded_doc("d1", "one"), fielded_doc("d2", "two words here")]
        idx = build_lexical_index(docs)
        assert abs(idx.avg_lengths["name"] - 2.0) < 1e-9

    def test_rebuild_scores_identically(self):
        rng = random.Random(7)
        docs = [preprocess(r) for r in random_records(rng, 40)]
        a = build_lexical_index(docs)
        b = build_lexical_index(list(reversed(docs)))
        for query in ("blood pressure", "imaging stroke", "eye"):
            ha = search_lexical(a, query, k=10)
            hb = search_lexical(b, query, k=10)
            assert [(h.tiny_id, h.score) for h in ha] == [(h.tiny_id, h.score) for h in hb]

    def test_bad_params_rejected(self):
        with pytest.raises(Exception):
            Bm25Params(k1=-1).validate()
        with pytest.raises(Exception):
            Bm25Params(b=1.5).validate()
        with pytest.raises(Exception):
            Bm25Params(field_weights={"name": 0.0}).validate()


class TestSearch:
    def test_hand_checked_contribution(self):
        # 3 docs, single scored field, equal lengths: df=2, tf=1, len=avglen.
        params = Bm25Params(field_weights={"name": 1.0})
        docs = [
            fielded_doc("d1", "alpha beta"),
            fielded_doc("d2", "alpha gamma"),
            fielded_doc("d3", "delta epsilon"),
        ]
        idx = build_lexical_index(docs, params)
        hits = search_lexical(idx, "alpha", k=3)
        expected = math.log(1.6) / 2.2
        assert hits[0].tiny_id == "d1"  # tie with d2 broken by id
        assert abs(hits[0].score - expected) < 1e-6
        assert abs(hits[1].score - expected) < 1e-6

    def test_unknown_term_returns_empty(self):
        idx = build_lexical_index([fielded_doc("d1", "alpha")])
        assert search_lexical(idx, "zzzz-not-in-corpus", k=5) == []

    def test_empty_query_returns_empty(self):
        idx = build_lexical_index([fielded_doc("d1", "alpha")])
        assert search_lexical(idx, "", k=5) == []
        assert search_lexical(idx, "!!! ???", k=5) == []

    def test_collection_filter_excludes(self):
        docs = [
            fielded_doc("d1", "unique phrase", collection="NINDS"),
            fielded_doc("d2", "other thing", collection="NEI"),
        ]
        idx = build_lexical_index(docs)
        assert any(h.tiny_id == "d1" for h in search_lexical(idx, "unique phrase", k=5))
        hits = search_lexical(idx, "unique phrase", collections={"NEI"}, k=5)
        assert all(h.tiny_id != "d1" for h in hits)

    def test_scores_nonincreasing_and_ids_unique(self):
        rng = random.Random(3)
        docs = [preprocess(r) for r in random_records(rng, 60)]
        idx = build_lexical_index(docs)
        hits = search_lexical(idx, "blood pressure heart", k=20)
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)
        assert len({h.tiny_id for h in hits}) == len(hits)

    def test_tf_monotonicity(self):
        # Increasing a query term's tf in one doc (others fixed) does not
        # decrease that doc's score.
        params = Bm25Params(field_weights={"name": 1.0})
        base, richer = "alpha beta", "alpha alpha beta"
        others = [fielded_doc("d2", "alpha gamma"), fielded_doc("d3", "delta")]
        low = search_lexical(build_lexical_index([fielded_doc("d1", base)] + others, params), "alpha", k=3)
        high = search_lexical(build_lexical_index([fielded_doc("d1", richer)] + others, params), "alpha", k=3)
        low_d1 = next(h.score for h in low if h.tiny_id == "d1")
        high_d1 = next(h.score for h in high if h.tiny_id == "d1")
        assert high_d1 >= low_d1

    @given(st.integers(min_value=1, max_value=100000), st.data())
    def test_idf_positive(self, n, data):
        df = data.draw(st.integers(min_value=0, max_value=n))
        assert idf(n, df) > 0


class TestOracleEquivalence:
    @settings(deadline=None, max_examples=15)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_matches_exhaustive_rescorer(self, seed):
        rng = random.Random(seed)
        records = random_records(rng, 50)
        docs = [preprocess(r) for r in records]
        params = Bm25Params()
        idx = build_lexical_index(docs, params)
        query = " ".join(rng.choices(
            ["blood", "pressure", "stroke", "eye", "rate", "memory", "zzz"], k=rng.randint(1, 4)
        ))
        collections = rng.choice([None, {"NINDS"}, {"NINDS", "NEI"}])
        got = search_lexical(idx, query, collections, k=15)
        want = bm25_rescore_all(docs, params, query, collections, k=15)
        assert [h.tiny_id for h in got] == [t for t, _ in want]
        for h, (_, score) in zip(got, want):
            assert abs(h.score - score) < 1e-9
