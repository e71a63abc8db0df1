"""LLM gateway: embeddings, query expansion, re-ranking, value mapping."""

from .gateway import (
    ChatProvider,
    ExpandedQuery,
    HttpProvider,
    LlmConfig,
    LlmGateway,
    RerankResult,
    ValueMatch,
    extract_json,
)
from .mock import MOCK_EMBEDDING_DIM, MockProvider

__all__ = [
    "ChatProvider",
    "ExpandedQuery",
    "HttpProvider",
    "LlmConfig",
    "LlmGateway",
    "MOCK_EMBEDDING_DIM",
    "MockProvider",
    "RerankResult",
    "ValueMatch",
    "extract_json",
]
