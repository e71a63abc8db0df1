"""Deterministic offline stand-in for the LLM provider.

Behaves like a model that always answers in clean JSON:

- embeddings: L2-normalized 256-dim hashed bag-of-words of the input tokens
- query expansion: returns term and description unchanged
- rerank: stable order, except candidates whose name equals the query term
  case-insensitively are promoted to the front
- value mapping: case-insensitive exact match scored 1.0, otherwise the best
  of Jaccard token overlap and common-prefix ratio

Pure: same inputs give same outputs, no network.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..index.lexical import tokenize
from . import prompts

MOCK_EMBEDDING_DIM = 256


def _stable_bucket(token: str, buckets: int = MOCK_EMBEDDING_DIM) -> int:
    digest = hashlib.md5(token.encode("utf-8")).hexdigest()
    return int(digest[:8], 16) % buckets


def hashed_bow_embedding(text: str) -> np.ndarray:
    vec = np.zeros(MOCK_EMBEDDING_DIM, dtype=np.float64)
    tokens = tokenize(text)
    if tokens:
        for t in tokens:
            vec[_stable_bucket(t)] += 1.0
    else:
        vec[_stable_bucket(text)] = 1.0
    return vec / np.linalg.norm(vec)


def mock_value_score(value_name: str, candidate: str) -> float:
    """Documented mock scoring: 1.0 on exact case-insensitive match,
    else max(Jaccard token overlap, common-prefix ratio)."""
    a, b = value_name.strip().lower(), candidate.strip().lower()
    if a == b:
        return 1.0
    ta, tb = set(tokenize(a)), set(tokenize(b))
    jaccard = len(ta & tb) / len(ta | tb) if ta | tb else 0.0
    prefix = 0
    for ca, cb in zip(a, b):
        if ca != cb:
            break
        prefix += 1
    prefix_ratio = prefix / max(len(a), len(b)) if max(len(a), len(b)) else 0.0
    return max(jaccard, prefix_ratio)


def _candidate_name(display_text: str) -> str:
    return display_text.split(" — ", 1)[0]


class MockProvider:
    """Chat + embeddings provider with fixed, documented behavior."""

    name = "mock"

    def embed(self, texts: list[str], model: str) -> list[list[float]]:
        return [hashed_bow_embedding(t).tolist() for t in texts]

    def chat(self, messages: list[dict[str, str]], temperature: float = 0.0) -> str:
        system = messages[0]["content"]
        user = messages[-1]["content"]
        payload = _parse_user_message(user)
        if system == prompts.QUERY_EXPANSION_INSTRUCTION:
            inp = payload["input"]
            return json.dumps({"term": inp.get("term", ""), "description": inp.get("description", "")})
        if system == prompts.RERANK_INSTRUCTION:
            term = payload["input"].get("term", "")
            results = payload.get("search_results", [])
            promoted = [r for r in results if _candidate_name(r["text"]).lower() == term.strip().lower()]
            rest = [r for r in results if r not in promoted]
            return json.dumps([r["id"] for r in promoted + rest])
        if system == prompts.VALUE_MAPPING_INSTRUCTION:
            value_name = payload["input"].get("value name", "")
            value_set = payload.get("value_set", [])
            best, best_score = value_set[0], mock_value_score(value_name, value_set[0])
            for v in value_set[1:]:
                s = mock_value_score(value_name, v)
                if s > best_score:
                    best, best_score = v, s
            return json.dumps([{"value": best, "score": round(best_score, 6)}])
        raise ValueError("mock provider received an unknown instruction")


def _parse_user_message(user: str) -> dict:
    out: dict = {}
    for line in user.splitlines():
        if line.startswith("Input: "):
            out["input"] = json.loads(line[len("Input: "):])
        elif line.startswith("Search Results: "):
            out["search_results"] = json.loads(line[len("Search Results: "):])
        elif line.startswith("Value Set: "):
            out["value_set"] = json.loads(line[len("Value Set: "):])
    return out
