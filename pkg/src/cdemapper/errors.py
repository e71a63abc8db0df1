"""Shared exception hierarchy."""


class CdeMapperError(Exception):
    """Base class for all cdemapper errors."""


class DataError(CdeMapperError):
    """Bad input data: malformed corpus, CSV, gold file, or index artifact."""


class UpstreamError(CdeMapperError):
    """The external LLM service failed after all retries."""
