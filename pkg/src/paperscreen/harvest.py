"""Harvesting: turn fingerprint queries into deduplicated suspect records.

``harvest_once`` issues every active fingerprint as a phrase query,
walks all result pages, and folds each result into the ledger:

* dedup key is the normalized DOI first, then the provider external id;
* new papers get a fresh ledger id and ``first_seen`` stamped now;
* when the result carries full text, hits are computed against the whole
  active dictionary, otherwise the triggering fingerprint is recorded as
  a provisional flag until full text shows up;
* merging is idempotent — re-harvesting an unchanged index changes
  nothing.

A failing query is recorded in the run's error list and never aborts the
other fingerprints. ``HarvestScheduler`` repeats runs on an interval,
skipping ticks that would overlap a still-running harvest and pausing
with an operator alert after too many consecutive failures.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Callable, Iterable

from .detect import Detector
from .dictionary import Dictionary
from .model import PaperRecord, normalize_doi
from .search import SearchClient, SearchResult
from .store import LedgerStore

logger = logging.getLogger(__name__)


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class HarvestRun:
    """Bookkeeping for one pass over all active fingerprints."""

    run_id: str
    started: datetime
    finished: datetime
    queries_issued: int
    results_seen: int
    new_suspects: int
    errors: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.new_suspects > self.results_seen:
            raise ValueError("new_suspects cannot exceed results_seen")

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "started": self.started.isoformat(),
            "finished": self.finished.isoformat(),
            "queries_issued": self.queries_issued,
            "results_seen": self.results_seen,
            "new_suspects": self.new_suspects,
            "errors": [list(e) for e in self.errors],
        }


@dataclass(frozen=True)
class OperatorAlert:
    """Raised-to-the-operator record set when the scheduler pauses itself."""

    at: datetime
    consecutive_failures: int
    last_error: str


def _merge_hits(existing: PaperRecord, computed: Iterable) -> tuple:
    known = {(h.fingerprint_id, h.start, h.end) for h in existing.hits}
    merged = list(existing.hits)
    for hit in computed:
        if (hit.fingerprint_id, hit.start, hit.end) not in known:
            merged.append(hit)
            known.add((hit.fingerprint_id, hit.start, hit.end))
    merged.sort(key=lambda h: (h.start, h.fingerprint_id))
    return tuple(merged)


def _fold_result(
    result: SearchResult,
    trigger_id: str,
    detector: Detector,
    ledger: LedgerStore,
    now: datetime,
) -> bool:
    """Insert or merge one search result. Returns True when a paper is new."""
    existing = ledger.find_by_doi(result.doi)
    if existing is None:
        existing = ledger.find_by_external_id(result.external_id)

    if result.full_text:
        computed = detector.detect(result.full_text).hits
    else:
        computed = ()

    if existing is None:
        if result.full_text:
            provisional: tuple[str, ...] = ()
        else:
            provisional = (trigger_id,)
        record = PaperRecord(
            paper_id=ledger.new_paper_id(),
            doi=result.doi,
            external_id=result.external_id,
            title=result.title,
            year=result.year,
            record_url=result.record_url,
            first_seen=now,
            hits=computed,
            provisional_triggers=provisional,
        )
        ledger.upsert_paper(record)
        return True

    hits = _merge_hits(existing, computed)
    covered = {h.fingerprint_id for h in hits}
    provisional = tuple(
        t for t in existing.provisional_triggers if t not in covered
    )
    if not result.full_text and trigger_id not in covered and trigger_id not in provisional:
        provisional = provisional + (trigger_id,)

    updated = replace(
        existing,
        hits=hits,
        provisional_triggers=provisional,
        # fill gaps, never overwrite (and never steal another paper's key)
        doi=existing.doi or result.doi,
        external_id=existing.external_id or result.external_id,
        title=existing.title or result.title,
        year=existing.year if existing.year is not None else result.year,
        record_url=existing.record_url or result.record_url,
    )
    if updated.doi != existing.doi and ledger.find_by_doi(updated.doi) is not None:
        updated = replace(updated, doi=existing.doi)
    if (
        updated.external_id != existing.external_id
        and ledger.find_by_external_id(updated.external_id) is not None
    ):
        updated = replace(updated, external_id=existing.external_id)
    if updated != existing:
        ledger.upsert_paper(updated)
    return False


_run_counter = threading.Lock()
_run_seq = 0


def _next_run_id() -> str:
    global _run_seq
    with _run_counter:
        _run_seq += 1
        return f"run-{_run_seq}"


def harvest_once(
    client: SearchClient,
    dictionary: Dictionary,
    ledger: LedgerStore,
    *,
    allowlist: Iterable[str] = (),
    clock: Callable[[], datetime] = _utcnow,
    run_id: str | None = None,
) -> HarvestRun:
    """One full harvesting pass; see module docstring for semantics."""
    started = clock()
    skip = {entry for entry in allowlist}
    detector = Detector(dictionary)
    queries = 0
    results_seen = 0
    new_suspects = 0
    errors: list[tuple[str, str]] = []

    for fingerprint in dictionary.active():
        queries += 1
        try:
            cursor: str | None = None
            while True:
                results, cursor = client.search(fingerprint.pattern, cursor)
                for result in results:
                    results_seen += 1
                    if result.external_id in skip or (
                        normalize_doi(result.doi) or ""
                    ) in skip:
                        continue
                    if _fold_result(result, fingerprint.id, detector, ledger, clock()):
                        new_suspects += 1
                if cursor is None:
                    break
        except Exception as exc:
            logger.warning("fingerprint %s query failed: %s", fingerprint.id, exc)
            errors.append((fingerprint.id, str(exc)))

    return HarvestRun(
        run_id=run_id or _next_run_id(),
        started=started,
        finished=clock(),
        queries_issued=queries,
        results_seen=results_seen,
        new_suspects=new_suspects,
        errors=tuple(errors),
    )


class HarvestScheduler:
    """Repeats a harvest on a fixed interval without overlapping runs.

    ``tick()`` contains all the decision logic and is callable directly
    (the tests drive it synchronously); ``start()`` spawns a thread that
    ticks every ``interval`` seconds. After ``failure_threshold``
    consecutive run exceptions the scheduler pauses itself and exposes an
    ``OperatorAlert``; it takes operator action (a fresh ``start``) to
    resume.
    """

    def __init__(
        self,
        run: Callable[[], HarvestRun],
        interval: float,
        *,
        failure_threshold: int = 5,
        clock: Callable[[], datetime] = _utcnow,
    ) -> None:
        if interval <= 0:
            raise ValueError("interval must be positive")
        self._run = run
        self._interval = interval
        self._failure_threshold = failure_threshold
        self._clock = clock
        self._stop = threading.Event()
        self._ticker: threading.Thread | None = None
        self._worker: threading.Thread | None = None
        self._state_lock = threading.Lock()
        self.runs: list[HarvestRun] = []
        self.skipped_ticks = 0
        self.consecutive_failures = 0
        self.alert: OperatorAlert | None = None
        self.paused = False

    def tick(self) -> str:
        """One scheduling decision: 'started', 'skipped', or 'paused'."""
        with self._state_lock:
            if self.paused:
                return "paused"
            if self._worker is not None and self._worker.is_alive():
                self.skipped_ticks += 1
                logger.info("harvest still running; tick skipped")
                return "skipped"
            self._worker = threading.Thread(target=self._guarded_run, daemon=True)
            self._worker.start()
            return "started"

    def _guarded_run(self) -> None:
        try:
            run = self._run()
        except Exception as exc:
            logger.error("harvest run failed: %s", exc)
            with self._state_lock:
                self.consecutive_failures += 1
                if self.consecutive_failures >= self._failure_threshold:
                    self.paused = True
                    self.alert = OperatorAlert(
                        at=self._clock(),
                        consecutive_failures=self.consecutive_failures,
                        last_error=str(exc),
                    )
                    logger.error(
                        "harvest paused after %d consecutive failures",
                        self.consecutive_failures,
                    )
            return
        with self._state_lock:
            self.consecutive_failures = 0
            self.runs.append(run)

    def _loop(self) -> None:
        while not self._stop.wait(self._interval):
            self.tick()
            if self.paused:
                return

    def start(self) -> None:
        if self._ticker is not None and self._ticker.is_alive():
            raise RuntimeError("scheduler already running")
        self._stop.clear()
        self.paused = False
        self.alert = None
        self.consecutive_failures = 0
        self._ticker = threading.Thread(target=self._loop, daemon=True)
        self._ticker.start()

    def stop(self) -> None:
        """Stop ticking and wait for any in-flight run to finish."""
        self._stop.set()
        if self._ticker is not None:
            self._ticker.join()
        worker = self._worker
        if worker is not None:
            worker.join()
