"""REST service: the human-assessment loop over the ledger.

`Api` holds all endpoint logic as plain methods returning
``(status_code, payload)`` pairs; the HTTP layer is a thin threaded
wrapper around it. All mutations go through the store, which linearizes
them; reads work on immutable snapshots, so the service happily handles
concurrent assessors.

Endpoints (JSON in, JSON out; errors use {error_code, message, details?}):

    GET  /api/papers?status=&category=&page=&page_size=
    GET  /api/papers/{id}
    POST /api/papers/{id}/assessments   {verdict, assessor, note?}
    GET  /api/proposals?state=
    POST /api/proposals                 {pattern, category, expected_phrase?, proposer}
    POST /api/proposals/{id}/resolution {decision: approve|reject, note?}
    GET  /api/dictionary
    GET  /api/stats
    GET  /api/healthz
"""

from __future__ import annotations

import json
import logging
import re
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .detect import explain_hit
from .errors import (
    ConflictError,
    NotFoundError,
    RequestError,
    ScreenerError,
)
from .jsonio import (
    assessment_to_dict,
    fingerprint_to_dict,
    format_timestamp,
    paper_to_dict,
    proposal_to_dict,
)
from .model import (
    Category,
    PaperRecord,
    ProposalState,
    ScreeningStatus,
    Verdict,
    derive_status,
    token_count,
)
from .normalize import normalize
from .store import LedgerStore

logger = logging.getLogger(__name__)

DEFAULT_PAGE_SIZE = 50
MAX_PAGE_SIZE = 500


def _status_to_dict(status: ScreeningStatus) -> dict:
    return {
        "state": status.state,
        "label": status.label.value if status.label else None,
    }


class Api:
    """Endpoint logic, independent of HTTP plumbing."""

    def __init__(self, store: LedgerStore) -> None:
        self.store = store

    # -- helpers --------------------------------------------------------

    def current_dictionary(self):
        return self.store.current_dictionary()

    def _paper_categories(self, paper: PaperRecord) -> set[Category]:
        by_id = {f.id: f for f in self.store.fingerprints()}
        categories: set[Category] = set()
        for hit in paper.hits:
            fingerprint = by_id.get(hit.fingerprint_id)
            if fingerprint is not None:
                categories.add(fingerprint.category)
        for trigger in paper.provisional_triggers:
            fingerprint = by_id.get(trigger)
            if fingerprint is not None:
                categories.add(fingerprint.category)
        return categories

    def _summary(self, paper: PaperRecord, status: ScreeningStatus) -> dict:
        return {
            "paper_id": paper.paper_id,
            "title": paper.title,
            "doi": paper.doi,
            "external_id": paper.external_id,
            "status": _status_to_dict(status),
            "categories": sorted(c.value for c in self._paper_categories(paper)),
            "hit_count": len(paper.hits),
            "record_url": paper.record_url,
            "pubpeer_url": paper.pubpeer_url,
            "first_seen": (
                format_timestamp(paper.first_seen) if paper.first_seen else None
            ),
        }

    # -- endpoints ------------------------------------------------------

    def list_papers(
        self,
        status: str | None = None,
        category: str | None = None,
        page: str = "1",
        page_size: str | None = None,
    ) -> tuple[int, dict]:
        if status is not None and status not in ("awaiting", "assessed"):
            raise RequestError(f"invalid status filter {status!r}")
        category_filter: Category | None = None
        if category is not None:
            try:
                category_filter = Category(category)
            except ValueError:
                raise RequestError(f"invalid category filter {category!r}") from None
        try:
            page_number = int(page)
            size = int(page_size) if page_size is not None else DEFAULT_PAGE_SIZE
        except ValueError:
            raise RequestError("page and page_size must be integers") from None
        if page_number < 1 or size < 1 or size > MAX_PAGE_SIZE:
            raise RequestError(
                f"page must be >= 1 and page_size within [1, {MAX_PAGE_SIZE}]"
            )

        papers = self.store.papers()
        grouped: dict[str, list] = {}
        for assessment in self.store.assessments():
            grouped.setdefault(assessment.paper_id, []).append(assessment)

        rows: list[tuple[PaperRecord, ScreeningStatus]] = []
        for paper in papers:
            paper_status = derive_status(paper, grouped.get(paper.paper_id, []))
            if status is not None and paper_status.state != status:
                continue
            if (
                category_filter is not None
                and category_filter not in self._paper_categories(paper)
            ):
                continue
            rows.append((paper, paper_status))

        # newest first; paper_id breaks ties so pagination is stable
        rows.sort(
            key=lambda row: (
                row[0].first_seen.isoformat() if row[0].first_seen else "",
                row[0].paper_id,
            ),
            reverse=True,
        )
        total = len(rows)
        start = (page_number - 1) * size
        items = [self._summary(p, s) for p, s in rows[start:start + size]]
        return 200, {
            "items": items,
            "page": page_number,
            "page_size": size,
            "total": total,
            "total_pages": (total + size - 1) // size if total else 0,
        }

    def get_paper(self, paper_id: str) -> tuple[int, dict]:
        paper = self.store.get_paper(paper_id)
        if paper is None:
            raise NotFoundError(f"unknown paper {paper_id}")
        dictionary = self.current_dictionary()
        assessments = self.store.assessments(paper_id)  # oldest first
        status = derive_status(paper, assessments)
        hits = []
        for hit in paper.hits:
            explanation = explain_hit(hit, dictionary)
            hits.append(
                {
                    "fingerprint_id": hit.fingerprint_id,
                    "start": hit.start,
                    "end": hit.end,
                    "snippet": hit.snippet,
                    "matched_surface": hit.matched_surface,
                    "category": explanation.category.value,
                    "pattern": explanation.pattern,
                    "expected_phrase": explanation.expected_phrase,
                }
            )
        return 200, {
            "record": paper_to_dict(paper),
            "status": _status_to_dict(status),
            "categories": sorted(c.value for c in self._paper_categories(paper)),
            "hits": hits,
            "assessments": [assessment_to_dict(a) for a in assessments],
        }

    def post_assessment(self, paper_id: str, body: dict) -> tuple[int, dict]:
        verdict_raw = body.get("verdict")
        try:
            verdict = Verdict(verdict_raw)
        except ValueError:
            raise RequestError(f"invalid verdict {verdict_raw!r}") from None
        assessor = str(body.get("assessor") or "").strip()
        if not assessor:
            raise RequestError("assessor is required")
        note = body.get("note")
        assessment = self.store.add_assessment(paper_id, verdict, assessor, note)
        return 201, {"assessment": assessment_to_dict(assessment)}

    def post_proposal(self, body: dict) -> tuple[int, dict]:
        pattern_raw = str(body.get("pattern") or "")
        pattern = normalize(pattern_raw).canonical
        if token_count(pattern) < 2:
            raise RequestError(
                "pattern must contain at least 2 tokens after normalization"
            )
        category_raw = body.get("category")
        try:
            category = Category(category_raw)
        except ValueError:
            raise RequestError(f"invalid category {category_raw!r}") from None
        expected = body.get("expected_phrase") or None
        if (category is Category.TORTURED) != (expected is not None):
            raise RequestError(
                "expected_phrase is required for tortured proposals "
                "and forbidden otherwise"
            )
        proposer = str(body.get("proposer") or "").strip()
        if not proposer:
            raise RequestError("proposer is required")
        proposal = self.store.add_proposal(pattern, category, expected, proposer)
        return 201, {"proposal": proposal_to_dict(proposal)}

    def list_proposals(self, state: str | None = None) -> tuple[int, dict]:
        state_filter: ProposalState | None = None
        if state is not None:
            try:
                state_filter = ProposalState(state)
            except ValueError:
                raise RequestError(f"invalid proposal state {state!r}") from None
        proposals = self.store.proposals(state_filter)
        return 200, {"items": [proposal_to_dict(p) for p in proposals]}

    def resolve_proposal(self, proposal_id: str, body: dict) -> tuple[int, dict]:
        decision = body.get("decision")
        if decision not in ("approve", "reject"):
            raise RequestError("decision must be 'approve' or 'reject'")
        note = body.get("note")
        proposal, fingerprint = self.store.resolve_proposal(
            proposal_id, decision, note
        )
        payload = {"proposal": proposal_to_dict(proposal)}
        if fingerprint is not None:
            payload["fingerprint"] = fingerprint_to_dict(fingerprint)
            payload["dictionary_version"] = self.store.dictionary_version
        return 200, payload

    def get_dictionary(self) -> tuple[int, dict]:
        dictionary = self.current_dictionary()
        return 200, {
            "version": dictionary.version,
            "fingerprints": [fingerprint_to_dict(f) for f in dictionary.fingerprints],
        }

    def get_stats(self) -> tuple[int, dict]:
        stats = self.store.stats()
        return 200, {
            "total_suspects": stats.total_suspects,
            "awaiting": stats.awaiting,
            "assessed": stats.assessed,
            "assessed_problematic": stats.assessed_problematic,
            "assessed_not_problematic": stats.assessed_not_problematic,
            "assessed_unsure": stats.assessed_unsure,
            "per_category_counts": {
                category.value: count
                for category, count in stats.per_category_counts.items()
            },
        }

    def healthz(self) -> tuple[int, dict]:
        return 200, {"status": "ok"}


class _RateLimiter:
    """Per-address sliding window over write requests."""

    def __init__(self, per_minute: float) -> None:
        self._per_minute = per_minute
        self._events: dict[str, deque] = {}
        self._lock = threading.Lock()

    def allow(self, address: str) -> bool:
        now = time.monotonic()
        with self._lock:
            window = self._events.setdefault(address, deque())
            while window and window[0] <= now - 60.0:
                window.popleft()
            if len(window) >= self._per_minute:
                return False
            window.append(now)
            return True


_ROUTES: list[tuple[str, re.Pattern, str]] = [
    ("GET", re.compile(r"^/api/papers$"), "list_papers"),
    ("GET", re.compile(r"^/api/papers/([^/]+)$"), "get_paper"),
    ("POST", re.compile(r"^/api/papers/([^/]+)/assessments$"), "post_assessment"),
    ("GET", re.compile(r"^/api/proposals$"), "list_proposals"),
    ("POST", re.compile(r"^/api/proposals$"), "post_proposal"),
    ("POST", re.compile(r"^/api/proposals/([^/]+)/resolution$"), "resolve_proposal"),
    ("GET", re.compile(r"^/api/dictionary$"), "get_dictionary"),
    ("GET", re.compile(r"^/api/stats$"), "get_stats"),
    ("GET", re.compile(r"^/api/healthz$"), "healthz"),
]

_ERROR_STATUS = [
    (NotFoundError, 404, "not_found"),
    (ConflictError, 409, "conflict"),
    (RequestError, 400, "invalid_request"),
]


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128  # bursts of concurrent assessors must not be reset

    def __init__(self, address, api: Api, write_rate_limit_per_minute: float | None):
        self.api = api
        self.rate_limiter = (
            _RateLimiter(write_rate_limit_per_minute)
            if write_rate_limit_per_minute
            else None
        )
        super().__init__(address, _Handler)


class _Handler(BaseHTTPRequestHandler):
    server: ApiServer

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s %s", self.address_string(), fmt % args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self._cors_headers()
        self.end_headers()
        self.wfile.write(body)

    def _cors_headers(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _error(self, status: int, code: str, message: str, details: dict | None = None):
        payload: dict = {"error_code": code, "message": message}
        if details:
            payload["details"] = details
        self._send(status, payload)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            raise RequestError("request body is not valid JSON") from None
        if not isinstance(body, dict):
            raise RequestError("request body must be a JSON object")
        return body

    def _dispatch(self, method: str) -> None:
        split = urlsplit(self.path)
        query = {k: v[-1] for k, v in parse_qs(split.query).items()}
        for route_method, pattern, handler_name in _ROUTES:
            if route_method != method:
                continue
            matched = pattern.match(split.path)
            if matched is None:
                continue
            if (
                method == "POST"
                and self.server.rate_limiter is not None
                and not self.server.rate_limiter.allow(self.client_address[0])
            ):
                self._error(429, "rate_limited", "write rate limit exceeded")
                return
            handler = getattr(self.server.api, handler_name)
            try:
                if method == "POST":
                    body = self._read_body()
                    status, payload = handler(*matched.groups(), body)
                else:
                    status, payload = handler(*matched.groups(), **query)
            except ScreenerError as exc:
                for error_type, http_status, code in _ERROR_STATUS:
                    if isinstance(exc, error_type):
                        details = getattr(exc, "details", None)
                        self._error(http_status, code, str(exc), details)
                        return
                logger.exception("unhandled domain error")
                self._error(500, "internal_error", str(exc))
            except TypeError as exc:
                # unexpected query parameter names land here
                self._error(400, "invalid_request", f"bad request: {exc}")
            except Exception:
                logger.exception("internal error")
                self._error(500, "internal_error", "internal server error")
            else:
                self._send(status, payload)
            return
        self._error(404, "not_found", f"no route for {method} {split.path}")

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self._cors_headers()
        self.send_header("Content-Length", "0")
        self.end_headers()


def create_server(
    api: Api,
    host: str = "127.0.0.1",
    port: int = 0,
    *,
    write_rate_limit_per_minute: float | None = None,
) -> ApiServer:
    """Bind the API to a socket; port 0 picks a free port (tests)."""
    return ApiServer((host, port), api, write_rate_limit_per_minute)


def run_server(server: ApiServer) -> None:
    logger.info("listening on %s:%d", *server.server_address[:2])
    try:
        server.serve_forever()
    finally:
        server.server_close()
