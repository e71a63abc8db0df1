"""Fixed instruction texts and message composition for the LLM services.

The instruction strings are loaded from checked-in text files and sent
byte-identical over the wire; a test guards against drift. User content
carries the structured input plus the expected-output framing.
"""

from __future__ import annotations

import json
from importlib import resources


def _load(name: str) -> str:
    return resources.files("cdemapper.llm").joinpath("prompts").joinpath(name).read_text(encoding="utf-8")


QUERY_EXPANSION_INSTRUCTION = _load("query_expansion.txt")
RERANK_INSTRUCTION = _load("rerank.txt")
VALUE_MAPPING_INSTRUCTION = _load("value_mapping.txt")


def expansion_messages(term: str, description: str) -> list[dict[str, str]]:
    user = (
        "Input: " + json.dumps({"term": term, "description": description}, ensure_ascii=False) + "\n"
        "Output: Return only the JSON dict of search string for terms and descriptions."
    )
    return [
        {"role": "system", "content": QUERY_EXPANSION_INSTRUCTION},
        {"role": "user", "content": user},
    ]


def rerank_messages(term: str, description: str, candidates: list[tuple[str, str]]) -> list[dict[str, str]]:
    results = [{"id": tiny_id, "text": text} for tiny_id, text in candidates]
    user = (
        "Input: " + json.dumps({"term": term, "description": description}, ensure_ascii=False) + "\n"
        "Search Results: " + json.dumps(results, ensure_ascii=False) + "\n"
        "Output: Return only the JSON list of reranked search results."
    )
    return [
        {"role": "system", "content": RERANK_INSTRUCTION},
        {"role": "user", "content": user},
    ]


def value_mapping_messages(value_name: str, value_set: list[str]) -> list[dict[str, str]]:
    user = (
        "Input: " + json.dumps({"value name": value_name}, ensure_ascii=False) + "\n"
        "Value Set: " + json.dumps(value_set, ensure_ascii=False) + "\n"
        "Output: Return only the JSON list of top 1 matched records ordered by "
        "recalculated semantic similarity scores."
    )
    return [
        {"role": "system", "content": VALUE_MAPPING_INSTRUCTION},
        {"role": "user", "content": user},
    ]
