"""Search-index clients: how fingerprint queries find candidate papers.

The harvester only depends on the ``SearchClient`` protocol. Two
implementations ship:

``LocalIndexClient``
    Exact word-bounded phrase search over a JSONL corpus file, fully
    deterministic. Used in every test and good enough for desk-scale
    corpora.

``HttpSearchClient``
    Issues quoted phrase queries to a configurable HTTP endpoint and maps
    the provider's JSON response onto ``SearchResult`` via a field-mapping
    table. Respects a requests-per-second budget and retries transient
    failures with exponential backoff.

Local corpus format: one JSON object per line with fields
{external_id, doi?, title?, year?, record_url?, full_text?}.
"""

from __future__ import annotations

import json
import os
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

from . import match
from .errors import ContractViolation, MappingError, RequestError, SearchError
from .model import Category, Fingerprint
from .normalize import normalize

Transport = Callable[[str, dict, float], tuple[int, bytes]]

RETRYABLE_STATUSES = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class SearchResult:
    """One candidate paper returned by a phrase query."""

    external_id: str
    doi: str | None = None
    title: str = ""
    year: int | None = None
    record_url: str | None = None
    snippet: str | None = None
    full_text: str | None = None

    def __post_init__(self) -> None:
        if not self.external_id:
            raise ContractViolation("search result requires a non-empty external_id")


class SearchClient(Protocol):
    def search(
        self, phrase: str, page_cursor: str | None = None
    ) -> tuple[list[SearchResult], str | None]:
        """One page of results for a phrase plus the cursor for the next page."""
        ...


def read_corpus(path: str | Path) -> list[dict]:
    """Load and validate a JSONL corpus file."""
    records: list[dict] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RequestError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict) or not record.get("external_id"):
                raise RequestError(
                    f"{path}:{lineno}: corpus records need an external_id"
                )
            records.append(record)
    return records


def write_corpus(path: str | Path, records: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


class LocalIndexClient:
    """Deterministic phrase search over an in-memory JSONL corpus.

    Matching reuses the normalizer/matcher stack, so results agree exactly
    with what the detector would find. Records without full text never
    match. Pagination cursors are plain offsets into the per-phrase match
    list, which is cached because the corpus is immutable once loaded.
    """

    def __init__(self, corpus_path: str | Path, page_size: int = 50) -> None:
        if page_size < 1:
            raise ContractViolation("page_size must be >= 1")
        self._records = read_corpus(corpus_path)
        self._page_size = page_size
        # phrase -> [(record index, snippet of first hit)]
        self._match_cache: dict[str, list[tuple[int, str]]] = {}

    def __len__(self) -> int:
        return len(self._records)

    def _matches(self, phrase: str) -> list[tuple[int, str]]:
        cached = self._match_cache.get(phrase)
        if cached is not None:
            return cached
        probe = Fingerprint(id="query", pattern=phrase, category=Category.SCIGEN)
        automaton = match.compile([probe])
        found: list[tuple[int, str]] = []
        for i, record in enumerate(self._records):
            text = record.get("full_text")
            if not text:
                continue
            hits = match.scan(automaton, text)
            if hits:
                found.append((i, hits[0].snippet))
        self._match_cache[phrase] = found
        return found

    def search(
        self, phrase: str, page_cursor: str | None = None
    ) -> tuple[list[SearchResult], str | None]:
        if not phrase:
            raise ContractViolation("phrase must be non-empty")
        canonical = normalize(phrase).canonical
        try:
            offset = int(page_cursor) if page_cursor is not None else 0
        except ValueError:
            raise RequestError(f"invalid page cursor {page_cursor!r}") from None

        matches = self._matches(canonical)
        page = matches[offset:offset + self._page_size]
        next_cursor = (
            str(offset + self._page_size)
            if offset + self._page_size < len(matches)
            else None
        )
        results = []
        for i, snippet in page:
            record = self._records[i]
            results.append(
                SearchResult(
                    external_id=record["external_id"],
                    doi=record.get("doi"),
                    title=record.get("title", ""),
                    year=record.get("year"),
                    record_url=record.get("record_url"),
                    snippet=snippet,
                    full_text=record.get("full_text"),
                )
            )
        return results, next_cursor


@dataclass
class HttpClientConfig:
    """Wire-format knobs for a provider; see README for a worked example."""

    base_url: str
    phrase_param: str = "q"
    cursor_param: str = "cursor"
    page_size_param: str | None = None
    page_size: int = 50
    api_key_env: str | None = None
    api_key_header: str = "Authorization"
    api_key_prefix: str = "Bearer "
    results_path: str = "results"
    next_cursor_path: str = "next_cursor"
    field_map: dict[str, str] = field(
        default_factory=lambda: {
            "external_id": "id",
            "doi": "doi",
            "title": "title",
            "year": "year",
            "record_url": "url",
            "snippet": "snippet",
            "full_text": "full_text",
        }
    )
    requests_per_second: float = 2.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    timeout: float = 30.0


def _urllib_transport(url: str, headers: dict, timeout: float) -> tuple[int, bytes]:
    request = urllib.request.Request(url, headers=headers)
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


def _dig(payload: object, dotted: str) -> object:
    current = payload
    for part in dotted.split("."):
        if not isinstance(current, dict) or part not in current:
            return None
        current = current[part]
    return current


class HttpSearchClient:
    """Phrase search against a JSON-over-HTTP provider.

    The transport is injectable so tests can exercise retry, backoff, and
    mapping behavior without a network.
    """

    def __init__(
        self,
        config: HttpClientConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self._config = config
        self._transport = transport or _urllib_transport
        self._sleep = sleep
        self._clock = clock
        self._not_before = 0.0

    def _headers(self) -> dict:
        config = self._config
        headers = {"Accept": "application/json"}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env)
            if not key:
                raise SearchError(
                    f"API key environment variable {config.api_key_env} is not set",
                    retryable=False,
                )
            headers[config.api_key_header] = config.api_key_prefix + key
        return headers

    def _throttle(self) -> None:
        if self._config.requests_per_second <= 0:
            return
        now = self._clock()
        if now < self._not_before:
            self._sleep(self._not_before - now)
            now = self._not_before
        self._not_before = now + 1.0 / self._config.requests_per_second

    def _url(self, phrase: str, page_cursor: str | None) -> str:
        config = self._config
        params = {config.phrase_param: f'"{phrase}"'}
        if page_cursor is not None:
            params[config.cursor_param] = page_cursor
        if config.page_size_param:
            params[config.page_size_param] = str(config.page_size)
        separator = "&" if "?" in config.base_url else "?"
        return config.base_url + separator + urllib.parse.urlencode(params)

    def _request(self, url: str) -> bytes:
        config = self._config
        headers = self._headers()
        last_error = "no attempt made"
        for attempt in range(config.max_attempts):
            if attempt:
                self._sleep(config.backoff_base * 2 ** (attempt - 1))
            self._throttle()
            try:
                status, body = self._transport(url, headers, config.timeout)
            except OSError as exc:
                last_error = f"network error: {exc}"
                continue
            if status == 200:
                return body
            if status in RETRYABLE_STATUSES:
                last_error = f"HTTP {status}"
                continue
            raise SearchError(f"HTTP {status} from {url}", retryable=False)
        raise SearchError(
            f"giving up on {url} after {config.max_attempts} attempts "
            f"({last_error})",
            retryable=True,
        )

    def _map_result(self, item: object) -> SearchResult:
        if not isinstance(item, dict):
            raise MappingError(
                f"expected result object, got: {json.dumps(item)[:200]}"
            )
        fields = self._config.field_map
        values: dict = {}
        for ours, theirs in fields.items():
            values[ours] = _dig(item, theirs)
        external_id = values.get("external_id")
        if not external_id:
            raise MappingError(
                "result is missing its external id field "
                f"({fields.get('external_id')!r}): {json.dumps(item)[:200]}"
            )
        year = values.get("year")
        if year is not None:
            try:
                year = int(year)
            except (TypeError, ValueError):
                year = None
        return SearchResult(
            external_id=str(external_id),
            doi=values.get("doi"),
            title=str(values.get("title") or ""),
            year=year,
            record_url=values.get("record_url"),
            snippet=values.get("snippet"),
            full_text=values.get("full_text"),
        )

    def search(
        self, phrase: str, page_cursor: str | None = None
    ) -> tuple[list[SearchResult], str | None]:
        if not phrase:
            raise ContractViolation("phrase must be non-empty")
        body = self._request(self._url(phrase, page_cursor))
        try:
            payload = json.loads(body)
        except json.JSONDecodeError:
            raise MappingError(
                f"provider returned non-JSON body: {body[:200]!r}"
            ) from None
        raw_results = _dig(payload, self._config.results_path)
        if raw_results is None:
            raw_results = []
        if not isinstance(raw_results, list):
            raise MappingError(
                f"results path {self._config.results_path!r} is not a list: "
                f"{json.dumps(raw_results)[:200]}"
            )
        results = [self._map_result(item) for item in raw_results]
        cursor = _dig(payload, self._config.next_cursor_path)
        return results, str(cursor) if cursor is not None else None
