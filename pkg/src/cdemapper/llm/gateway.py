"""Uniform access to the external LLM: embeddings, query expansion,
candidate re-ranking, and value mapping.

Every chat operation is total under fallback: unparseable or invalid model
output is re-asked at most twice, then degrades to the non-LLM behavior
(identity expansion, input order, lexical value match) with a logged
warning. Only transport-level failure of the embeddings endpoint raises.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx
import numpy as np

from ..corpus import PermissibleValue
from ..errors import UpstreamError
from ..index.lexical import tokenize
from . import prompts

logger = logging.getLogger(__name__)

# Re-asks after a parse/validation failure, before falling back.
PARSE_RETRIES = 2


@dataclass
class LlmConfig:
    """Connection settings for an OpenAI-compatible chat/embeddings endpoint."""

    endpoint_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4o"
    embedding_model_name: str = "text-embedding-3-large"
    api_key_ref: str = "CDEMAPPER_API_KEY"  # environment variable holding the key
    request_timeout: float = 30.0
    max_retries: int = 3
    max_concurrent_requests: int = 4
    embed_batch_size: int = 64
    audit_log_path: str | None = None

    def validate(self) -> None:
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be > 0")
        if not 0 <= self.max_retries <= 5:
            raise ValueError("max_retries must be in [0, 5]")
        if self.max_concurrent_requests < 1:
            raise ValueError("max_concurrent_requests must be >= 1")


@dataclass(frozen=True)
class ExpandedQuery:
    term: str
    description: str


@dataclass(frozen=True)
class RerankResult:
    """A permutation of the candidate ids handed to rerank."""

    order: tuple[str, ...]
    fallback: bool = False


@dataclass(frozen=True)
class ValueMatch:
    source_value: str
    matched_value: str
    score: float


class ChatProvider(Protocol):
    name: str

    def chat(self, messages: list[dict[str, str]], temperature: float = 0.0) -> str: ...

    def embed(self, texts: list[str], model: str) -> list[list[float]]: ...


class HttpProvider:
    """OpenAI-compatible HTTP provider with bounded retry and backoff."""

    name = "http"

    def __init__(self, config: LlmConfig):
        self.config = config
        self._client = httpx.Client(base_url=config.endpoint_url.rstrip("/"), timeout=config.request_timeout)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_ref, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _post(self, path: str, payload: dict) -> dict:
        delay = 0.5
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = self._client.post(path, json=payload, headers=self._headers())
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = UpstreamError(f"{path}: HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    raise UpstreamError(f"{path}: HTTP {resp.status_code}: {resp.text[:500]}")
                else:
                    return resp.json()
            except httpx.HTTPError as exc:
                last_error = exc
            if attempt < self.config.max_retries:
                time.sleep(delay)
                delay *= 2
        raise UpstreamError(f"{path} failed after {self.config.max_retries + 1} attempts: {last_error}")

    def chat(self, messages: list[dict[str, str]], temperature: float = 0.0) -> str:
        data = self._post(
            "/chat/completions",
            {"model": self.config.model_name, "messages": messages, "temperature": temperature},
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise UpstreamError(f"unexpected chat completion response shape: {exc}") from exc

    def embed(self, texts: list[str], model: str) -> list[list[float]]:
        data = self._post("/embeddings", {"model": model, "input": texts})
        try:
            items = sorted(data["data"], key=lambda d: d["index"])
            return [item["embedding"] for item in items]
        except (KeyError, TypeError) as exc:
            raise UpstreamError(f"unexpected embeddings response shape: {exc}") from exc


def extract_json(text: str):
    """First balanced JSON value in ``text``, tolerating code fences and
    leading prose. Returns None when nothing parses."""
    stripped = text.strip()
    if stripped.startswith("```"):
        stripped = stripped.split("\n", 1)[-1]
        if stripped.rstrip().endswith("```"):
            stripped = stripped.rstrip()[:-3]
        stripped = stripped.strip()
    try:
        return json.loads(stripped)
    except json.JSONDecodeError:
        pass
    decoder = json.JSONDecoder()
    for i, ch in enumerate(stripped):
        if ch in "[{":
            try:
                value, _ = decoder.raw_decode(stripped[i:])
                return value
            except json.JSONDecodeError:
                continue
    return None


def _fallback_value_match(value_name: str, value_set: list[PermissibleValue]) -> ValueMatch:
    """Case-insensitive exact match at 1.0 if one exists, else the highest
    token-overlap member at score 0."""
    for pv in value_set:
        if pv.value_name.strip().lower() == value_name.strip().lower():
            return ValueMatch(source_value=value_name, matched_value=pv.value_name, score=1.0)
    query_tokens = set(tokenize(value_name))
    best, best_overlap = value_set[0], -1
    for pv in value_set:
        overlap = len(query_tokens & set(tokenize(pv.value_name)))
        if overlap > best_overlap:
            best, best_overlap = pv, overlap
    return ValueMatch(source_value=value_name, matched_value=best.value_name, score=0.0)


class LlmGateway:
    """High-level LLM operations over a pluggable provider.

    Shareable across threads; outbound calls are capped by a semaphore.
    ``fallback_count`` increments whenever a chat operation degrades, which
    the evaluation harness uses to flag rows that did not run the intended
    method.
    """

    def __init__(self, provider: ChatProvider, config: LlmConfig | None = None):
        self.provider = provider
        self.config = config or LlmConfig()
        self.config.validate()
        self._semaphore = threading.Semaphore(self.config.max_concurrent_requests)
        self._embed_cache: dict[tuple[str, str], list[float]] = {}
        self._cache_lock = threading.Lock()
        self._audit_lock = threading.Lock()
        self.fallback_count = 0

    @property
    def is_mock(self) -> bool:
        return getattr(self.provider, "name", "") == "mock"

    # -- transport wrappers ------------------------------------------------

    def _chat(self, kind: str, messages: list[dict[str, str]]) -> str:
        with self._semaphore:
            raw = self.provider.chat(messages, temperature=0.0)
        self._audit(kind, {"messages": messages}, {"content": raw})
        return raw

    def _audit(self, kind: str, request: dict, response: dict) -> None:
        path = self.config.audit_log_path
        if not path:
            return
        entry = {"at": time.time(), "kind": kind, "request": request, "response": response}
        line = json.dumps(entry, ensure_ascii=False)
        with self._audit_lock, open(path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def _note_fallback(self, op: str, reason: str) -> None:
        self.fallback_count += 1
        logger.warning("%s fell back to non-LLM behavior: %s", op, reason)

    # -- operations ---------------------------------------------------------

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        """One unit-norm vector per input text, in input order."""
        if not texts:
            return []
        model = self.config.embedding_model_name
        out: list[np.ndarray | None] = [None] * len(texts)
        missing: list[int] = []
        with self._cache_lock:
            for i, t in enumerate(texts):
                cached = self._embed_cache.get((t, model))
                if cached is not None:
                    out[i] = np.asarray(cached, dtype=np.float64)
                else:
                    missing.append(i)

        batch_size = self.config.embed_batch_size
        for start in range(0, len(missing), batch_size):
            batch_idx = missing[start : start + batch_size]
            batch = [texts[i] for i in batch_idx]
            try:
                with self._semaphore:
                    vectors = self.provider.embed(batch, model)
            except UpstreamError as exc:
                raise UpstreamError(f"embedding batch {batch_idx} failed: {exc}") from exc
            if len(vectors) != len(batch):
                raise UpstreamError(f"embedding batch {batch_idx}: got {len(vectors)} vectors for {len(batch)} texts")
            for i, vec in zip(batch_idx, vectors):
                v = np.asarray(vec, dtype=np.float64)
                norm = float(np.linalg.norm(v))
                if norm == 0.0:
                    raise UpstreamError(f"embedding for text index {i} has zero norm")
                v = v / norm
                out[i] = v
                with self._cache_lock:
                    self._embed_cache[(texts[i], model)] = v.tolist()
        return [v for v in out if v is not None]

    def expand_query(self, term: str, description: str) -> ExpandedQuery:
        """Rewrite the search term/description; falls back to the originals."""
        if not term:
            raise ValueError("term must be non-empty")
        messages = prompts.expansion_messages(term, description)
        for _ in range(PARSE_RETRIES + 1):
            try:
                raw = self._chat("expand_query", messages)
            except UpstreamError as exc:
                self._note_fallback("expand_query", str(exc))
                return ExpandedQuery(term=term, description=description)
            value = extract_json(raw)
            if isinstance(value, dict):
                new_term = value.get("term")
                new_desc = value.get("description")
                if isinstance(new_term, str) and new_term and isinstance(new_desc, str):
                    return ExpandedQuery(term=new_term, description=new_desc)
        self._note_fallback("expand_query", "unparseable model output")
        return ExpandedQuery(term=term, description=description)

    def rerank(self, term: str, description: str, candidates: list[tuple[str, str]]) -> RerankResult:
        """Reorder candidates; output is always a permutation of the input ids."""
        if not 1 <= len(candidates) <= 10:
            raise ValueError(f"rerank takes 1..10 candidates, got {len(candidates)}")
        input_ids = [tiny_id for tiny_id, _ in candidates]
        if len(set(input_ids)) != len(input_ids):
            raise ValueError("candidate ids must be unique")
        if len(candidates) == 1:
            return RerankResult(order=(input_ids[0],))

        messages = prompts.rerank_messages(term, description, candidates)
        by_text = {text: tiny_id for tiny_id, text in candidates}
        for _ in range(PARSE_RETRIES + 1):
            try:
                raw = self._chat("rerank", messages)
            except UpstreamError as exc:
                self._note_fallback("rerank", str(exc))
                return RerankResult(order=tuple(input_ids), fallback=True)
            value = extract_json(raw)
            order = _coerce_rerank_order(value, set(input_ids), by_text)
            if order is not None:
                return RerankResult(order=tuple(order))
        self._note_fallback("rerank", "model output was not a permutation of the input ids")
        return RerankResult(order=tuple(input_ids), fallback=True)

    def map_value(self, value_name: str, value_set: list[PermissibleValue]) -> ValueMatch:
        """Top-1 match of a source value against a CDE's permissible values."""
        if not value_set:
            raise ValueError("value_set must be non-empty")
        names = [pv.value_name for pv in value_set]
        by_lower = {n.lower(): n for n in names}
        messages = prompts.value_mapping_messages(value_name, names)
        for _ in range(PARSE_RETRIES + 1):
            try:
                raw = self._chat("map_value", messages)
            except UpstreamError as exc:
                self._note_fallback("map_value", str(exc))
                return _fallback_value_match(value_name, value_set)
            match = _coerce_value_match(extract_json(raw), value_name, by_lower)
            if match is not None:
                return match
        self._note_fallback("map_value", "model answer was not in the value set")
        return _fallback_value_match(value_name, value_set)


def _coerce_rerank_order(value, input_ids: set[str], by_text: dict[str, str]) -> list[str] | None:
    if not isinstance(value, list):
        return None
    order: list[str] = []
    for item in value:
        if isinstance(item, dict):
            item = item.get("id", item.get("text"))
        if not isinstance(item, str):
            return None
        tiny_id = item if item in input_ids else by_text.get(item)
        if tiny_id is None:
            return None
        order.append(tiny_id)
    if sorted(order) != sorted(input_ids):
        return None
    return order


def _coerce_value_match(value, value_name: str, by_lower: dict[str, str]) -> ValueMatch | None:
    if isinstance(value, list) and value:
        value = value[0]
    if not isinstance(value, dict):
        return None
    matched = value.get("value", value.get("value name", value.get("matched")))
    if not isinstance(matched, str):
        return None
    canonical = by_lower.get(matched.lower())
    if canonical is None:
        return None
    score = value.get("score", 0.0)
    if not isinstance(score, (int, float)):
        score = 0.0
    return ValueMatch(source_value=value_name, matched_value=canonical, score=min(1.0, max(0.0, float(score))))
