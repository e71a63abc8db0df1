import random

import numpy as np
import pytest

from cdemapper.corpus import CdeRecord, PermissibleValue, preprocess
from cdemapper.index import IndexBundle, build_lexical_index, build_vector_index
from cdemapper.index.lexical import SnapshotMeta
from cdemapper.llm import LlmConfig, LlmGateway, MockProvider

WORDS = (
    "blood pressure heart rate glucose visual acuity stroke ethnicity race gender "
    "imaging modality type score severity onset duration history smoking diabetes "
    "pathology indicator left right eye retina lesion cognitive memory assessment"
).split()


def make_record(tiny_id: str, name: str, collection: str = "NIH-Endorsed", **kwargs) -> CdeRecord:
    values = tuple(PermissibleValue(value_name=v) for v in kwargs.pop("values", []))
    kwargs.setdefault("detail_url", f"https://cde.nlm.nih.gov/deView?tinyId={tiny_id}")
    return CdeRecord(tiny_id=tiny_id, name=name, collection=collection, permissible_values=values, **kwargs)


def random_records(rng: random.Random, n: int, collections=("NIH-Endorsed", "NINDS", "NEI")) -> list[CdeRecord]:
    records = []
    for i in range(n):
        name = " ".join(rng.choices(WORDS, k=rng.randint(1, 4))).title()
        definition = " ".join(rng.choices(WORDS, k=rng.randint(0, 12)))
        records.append(
            CdeRecord(
                tiny_id=f"r{i:05d}",
                name=name,
                collection=rng.choice(collections),
                definition=definition,
                designations=tuple(" ".join(rng.choices(WORDS, k=2)) for _ in range(rng.randint(0, 2))),
                question_texts=tuple(" ".join(rng.choices(WORDS, k=5)) for _ in range(rng.randint(0, 2))),
                permissible_values=tuple(
                    PermissibleValue(value_name=w.title()) for w in rng.sample(WORDS, rng.randint(0, 4))
                ),
                detail_url=f"https://cde.example.org/view/r{i:05d}",
            )
        )
    return records


def build_bundle(records, with_vectors=True, params=None) -> IndexBundle:
    docs = [preprocess(r) for r in records]
    lexical = build_lexical_index(docs, params, snapshot=SnapshotMeta("2024-10-21", len(records)))
    vectors = None
    if with_vectors:
        provider = MockProvider()
        embeddings = [(d.tiny_id, np.asarray(provider.embed([d.embedding_text], "m")[0])) for d in docs]
        vectors = build_vector_index(embeddings, collections={r.tiny_id: r.collection for r in records})
    return IndexBundle(records={r.tiny_id: r for r in records}, lexical=lexical, vectors=vectors)


@pytest.fixture
def mock_gateway() -> LlmGateway:
    return LlmGateway(MockProvider(), LlmConfig())


@pytest.fixture
def small_records() -> list[CdeRecord]:
    return [
        make_record("c001", "Ethnicity", "Project 5 (COVID-19)",
                    definition="Self-reported ethnic categorization",
                    values=["Hispanic or Latino", "Not Hispanic or Latino", "Unknown"]),
        make_record("c002", "Race", "NIH-Endorsed",
                    definition="Self-reported racial categorization",
                    values=["White", "Black or African American", "Asian", "Unknown"]),
        make_record("c003", "Imaging Modality Type", "NINDS",
                    definition="Type of imaging modality used"),
        make_record("c004", "Lewy body pathology indicator", "NINDS",
                    definition="Indicator of Lewy body pathology evidence",
                    values=["Yes", "No", "Unknown"]),
        make_record("c005", "Gender Identity", "NIH-Endorsed",
                    definition="Self-reported gender identity",
                    values=["Male", "Female", "Unknown"]),
        make_record("c006", "Visual Acuity Score", "NEI",
                    definition="Measured visual acuity of the eye"),
        make_record("c007", "Heart Rate", "NIH-Endorsed",
                    definition="Heart rate measured in beats per minute"),
        make_record("c008", "Smoking History", "NIH-Endorsed",
                    definition="History of tobacco smoking",
                    values=["Current", "Former", "Never"]),
    ]


@pytest.fixture
def small_bundle(small_records) -> IndexBundle:
    return build_bundle(small_records)
