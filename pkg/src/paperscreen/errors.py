"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class ScreenerError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(ScreenerError):
    """An operation was called with arguments that break its preconditions."""


class NormalizationError(ScreenerError):
    """A pattern is not in canonical normalized form."""


class DuplicatePatternError(ScreenerError):
    """Two non-retired fingerprints share the same normalized pattern."""


class DictionaryError(ScreenerError):
    """A dictionary file failed to parse or validate (message carries line numbers)."""


class GrammarError(ScreenerError):
    """A grammar file failed to parse or validate."""


class UndefinedSymbolError(GrammarError):
    """A production body references a symbol with no definition."""


class UnproductiveGrammarError(GrammarError):
    """A nonterminal can never derive an all-terminal string.

    The message includes a witness cycle of nonterminals that depend on
    each other without a terminal escape.
    """


class SearchError(ScreenerError):
    """A search-index query failed.

    ``retryable`` distinguishes transient failures (timeouts, 5xx, rate
    limiting) from permanent ones (bad request, missing credentials).
    """

    def __init__(self, message: str, *, retryable: bool = False) -> None:
        super().__init__(message)
        self.retryable = retryable


class MappingError(SearchError):
    """A provider response could not be mapped to search results."""

    def __init__(self, message: str) -> None:
        super().__init__(message, retryable=False)


class StoreError(ScreenerError):
    """The ledger store file is unusable (corrupt beyond the last line)."""


class NotFoundError(ScreenerError):
    """A referenced entity does not exist."""


class ConflictError(ScreenerError):
    """The request conflicts with current state (duplicate, already resolved).

    ``details`` optionally names the conflicting entity for API responses.
    """

    def __init__(self, message: str, *, details: dict | None = None) -> None:
        super().__init__(message)
        self.details = details or {}


class RequestError(ScreenerError):
    """A malformed or invalid request (HTTP 400 class)."""


class ConfigError(ScreenerError):
    """The service configuration file is invalid."""
