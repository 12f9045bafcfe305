"""Durable single-file ledger: papers, assessments, proposals, fingerprints.

The store is an append-only JSONL event log. Every mutation appends one
event line and fsyncs before returning, so a write acknowledged to a
caller survives a crash; the write-ahead log IS the store. Opening a
store replays the log into memory. A truncated final line (torn write)
is discarded on open; corruption anywhere else refuses to load.

All mutations are serialized through one lock (single-writer
discipline), which is what makes the dedup checks and the
proposal-approval atomicity race-free. Reads hand out immutable
snapshots. ``export_jsonl`` writes a compacted log that is itself a
valid store file, which doubles as the backup/import format.

The dictionary seen by the rest of the system is the file-loaded base
dictionary plus every fingerprint added through proposal approval;
each approval bumps the dictionary version by one.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .dictionary import Dictionary
from .errors import ConflictError, ContractViolation, NotFoundError, StoreError
from .jsonio import (
    assessment_from_dict,
    assessment_to_dict,
    fingerprint_from_dict,
    fingerprint_to_dict,
    paper_from_dict,
    paper_to_dict,
    proposal_from_dict,
    proposal_to_dict,
)
from .model import (
    Assessment,
    Category,
    Fingerprint,
    FingerprintProposal,
    FingerprintStatus,
    PaperRecord,
    ProposalState,
    ScreeningStats,
    Verdict,
    normalize_doi,
    summarize,
)

SCHEMA_VERSION = 1
HEADER = {"kind": "paperscreen-ledger", "schema": SCHEMA_VERSION}


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class LedgerStore:
    """Single-file embedded store; see module docstring for the format."""

    def __init__(
        self,
        path: str | Path,
        base_fingerprints: Iterable[Fingerprint] = (),
        *,
        clock: Callable[[], datetime] = _utcnow,
    ) -> None:
        self._path = Path(path)
        self._clock = clock
        self._lock = threading.RLock()

        self._base_fingerprints = tuple(base_fingerprints)
        self._added_fingerprints: list[Fingerprint] = []
        self._dictionary_version = 1
        self._papers: dict[str, PaperRecord] = {}
        self._doi_index: dict[str, str] = {}
        self._ext_index: dict[str, str] = {}
        self._assessments: list[Assessment] = []
        self._proposals: dict[str, FingerprintProposal] = {}
        self._paper_seq = 0
        self._proposal_seq = 0
        self._fingerprint_seq = 0

        if self._path.exists():
            self._replay()
            self._handle = open(self._path, "a", encoding="utf-8")
        else:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(self._path, "a", encoding="utf-8")
            self._append([{"event": "header", **HEADER}])

    # ------------------------------------------------------------------
    # log machinery

    def _append(self, events: list[dict]) -> None:
        for event in events:
            self._handle.write(json.dumps(event, ensure_ascii=False) + "\n")
        self._handle.flush()
        os.fsync(self._handle.fileno())

    def _replay(self) -> None:
        with open(self._path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
        if not lines:
            raise StoreError(f"{self._path}: empty store file (missing header)")
        for lineno, line in enumerate(lines, start=1):
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                if lineno == len(lines):
                    break  # torn final write; everything before it is good
                raise StoreError(f"{self._path}:{lineno}: corrupt event") from None
            try:
                self._apply(event, lineno)
            except StoreError:
                raise
            except Exception as exc:
                raise StoreError(f"{self._path}:{lineno}: {exc}") from exc

    def _apply(self, event: dict, lineno: int) -> None:
        kind = event.get("event")
        if lineno == 1:
            if kind != "header" or event.get("schema") != SCHEMA_VERSION:
                raise StoreError(
                    f"{self._path}: not a schema-{SCHEMA_VERSION} ledger file"
                )
            return
        if kind == "paper":
            self._apply_paper(paper_from_dict(event["paper"]))
        elif kind == "assessment":
            self._assessments.append(assessment_from_dict(event["assessment"]))
        elif kind == "proposal":
            proposal = proposal_from_dict(event["proposal"])
            self._proposals[proposal.proposal_id] = proposal
            self._bump_seq_from_id(proposal.proposal_id, "prop-")
        elif kind == "proposal_resolved":
            proposal = self._proposals[event["proposal_id"]]
            self._proposals[proposal.proposal_id] = FingerprintProposal(
                proposal_id=proposal.proposal_id,
                pattern=proposal.pattern,
                category=proposal.category,
                expected_phrase=proposal.expected_phrase,
                proposer=proposal.proposer,
                submitted=proposal.submitted,
                state=ProposalState(event["state"]),
                resolution_note=event.get("note"),
            )
            if event.get("fingerprint"):
                self._apply_fingerprint(
                    fingerprint_from_dict(event["fingerprint"]),
                    event.get("dictionary_version"),
                )
        elif kind == "fingerprint_added":
            self._apply_fingerprint(
                fingerprint_from_dict(event["fingerprint"]),
                event.get("dictionary_version"),
            )
        elif kind == "header":
            raise StoreError(f"{self._path}: duplicate header event")
        else:
            raise StoreError(f"{self._path}: unknown event kind {kind!r}")

    def _apply_paper(self, record: PaperRecord) -> None:
        previous = self._papers.get(record.paper_id)
        doi_key = normalize_doi(record.doi)
        if doi_key is not None:
            owner = self._doi_index.get(doi_key)
            if owner is not None and owner != record.paper_id:
                raise ConflictError(
                    f"paper {owner} already holds DOI {doi_key}",
                    details={"existing_id": owner},
                )
        if record.external_id is not None:
            owner = self._ext_index.get(record.external_id)
            if owner is not None and owner != record.paper_id:
                raise ConflictError(
                    f"paper {owner} already holds external id {record.external_id}",
                    details={"existing_id": owner},
                )
        if previous is not None:
            old_doi = normalize_doi(previous.doi)
            if old_doi is not None and old_doi != doi_key:
                del self._doi_index[old_doi]
            if previous.external_id is not None and previous.external_id != record.external_id:
                del self._ext_index[previous.external_id]
        if doi_key is not None:
            self._doi_index[doi_key] = record.paper_id
        if record.external_id is not None:
            self._ext_index[record.external_id] = record.paper_id
        self._papers[record.paper_id] = record
        self._bump_seq_from_id(record.paper_id, "p")

    def _apply_fingerprint(self, fingerprint: Fingerprint, version: int | None) -> None:
        self._added_fingerprints.append(fingerprint)
        self._dictionary_version = (
            version if version is not None else self._dictionary_version + 1
        )
        self._bump_seq_from_id(fingerprint.id, "fp-a")

    def _bump_seq_from_id(self, entity_id: str, prefix: str) -> None:
        if not entity_id.startswith(prefix):
            return
        suffix = entity_id[len(prefix):]
        if suffix.isdigit():
            value = int(suffix)
            if prefix == "p":
                self._paper_seq = max(self._paper_seq, value)
            elif prefix == "prop-":
                self._proposal_seq = max(self._proposal_seq, value)
            elif prefix == "fp-a":
                self._fingerprint_seq = max(self._fingerprint_seq, value)

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "LedgerStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    @property
    def path(self) -> Path:
        return self._path

    # ------------------------------------------------------------------
    # reads

    def papers(self) -> list[PaperRecord]:
        with self._lock:
            return list(self._papers.values())

    def get_paper(self, paper_id: str) -> PaperRecord | None:
        with self._lock:
            return self._papers.get(paper_id)

    def find_by_doi(self, doi: str | None) -> PaperRecord | None:
        key = normalize_doi(doi)
        if key is None:
            return None
        with self._lock:
            paper_id = self._doi_index.get(key)
            return self._papers.get(paper_id) if paper_id else None

    def find_by_external_id(self, external_id: str | None) -> PaperRecord | None:
        if not external_id:
            return None
        with self._lock:
            paper_id = self._ext_index.get(external_id)
            return self._papers.get(paper_id) if paper_id else None

    def assessments(self, paper_id: str | None = None) -> list[Assessment]:
        with self._lock:
            if paper_id is None:
                return list(self._assessments)
            return [a for a in self._assessments if a.paper_id == paper_id]

    def proposals(self, state: ProposalState | None = None) -> list[FingerprintProposal]:
        with self._lock:
            items = list(self._proposals.values())
        if state is not None:
            items = [p for p in items if p.state is state]
        return items

    def get_proposal(self, proposal_id: str) -> FingerprintProposal | None:
        with self._lock:
            return self._proposals.get(proposal_id)

    def fingerprints(self) -> tuple[Fingerprint, ...]:
        with self._lock:
            return self._base_fingerprints + tuple(self._added_fingerprints)

    @property
    def dictionary_version(self) -> int:
        with self._lock:
            return self._dictionary_version

    def current_dictionary(self) -> Dictionary:
        with self._lock:
            return Dictionary(
                self._base_fingerprints + tuple(self._added_fingerprints),
                version=self._dictionary_version,
                loaded_from=f"{self._path}",
            )

    def stats(self) -> ScreeningStats:
        with self._lock:
            return summarize(
                list(self._papers.values()),
                list(self._assessments),
                self._base_fingerprints + tuple(self._added_fingerprints),
            )

    # ------------------------------------------------------------------
    # writes

    def new_paper_id(self) -> str:
        with self._lock:
            while True:
                self._paper_seq += 1
                candidate = f"p{self._paper_seq:06d}"
                if candidate not in self._papers:
                    return candidate

    def upsert_paper(self, record: PaperRecord) -> None:
        with self._lock:
            self._apply_paper(record)
            self._append([{"event": "paper", "paper": paper_to_dict(record)}])

    def upsert_papers(self, records: Iterable[PaperRecord]) -> int:
        """Bulk upsert with a single durability barrier at the end.

        All-or-nothing in memory: a conflict anywhere in the batch rolls
        back, so memory never runs ahead of the log.
        """
        events = []
        with self._lock:
            snapshot = (
                dict(self._papers),
                dict(self._doi_index),
                dict(self._ext_index),
                self._paper_seq,
            )
            try:
                for record in records:
                    self._apply_paper(record)
                    events.append({"event": "paper", "paper": paper_to_dict(record)})
            except Exception:
                (
                    self._papers,
                    self._doi_index,
                    self._ext_index,
                    self._paper_seq,
                ) = snapshot
                raise
            if events:
                self._append(events)
        return len(events)

    def add_assessment(
        self,
        paper_id: str,
        verdict: Verdict,
        assessor: str,
        note: str | None = None,
    ) -> Assessment:
        """Append one verdict; the timestamp is stamped here, never by callers."""
        with self._lock:
            if paper_id not in self._papers:
                raise NotFoundError(f"unknown paper {paper_id}")
            assessment = Assessment(
                paper_id=paper_id,
                verdict=verdict,
                assessor=assessor,
                timestamp=self._clock(),
                note=note,
            )
            self._assessments.append(assessment)
            self._append(
                [{"event": "assessment", "assessment": assessment_to_dict(assessment)}]
            )
            return assessment

    def add_assessments(
        self, entries: Iterable[tuple[str, Verdict, str, str | None]]
    ) -> int:
        """Bulk variant of ``add_assessment`` (fixture/import helper)."""
        events = []
        with self._lock:
            for paper_id, verdict, assessor, note in entries:
                if paper_id not in self._papers:
                    raise NotFoundError(f"unknown paper {paper_id}")
                assessment = Assessment(
                    paper_id=paper_id,
                    verdict=verdict,
                    assessor=assessor,
                    timestamp=self._clock(),
                    note=note,
                )
                self._assessments.append(assessment)
                events.append(
                    {"event": "assessment", "assessment": assessment_to_dict(assessment)}
                )
            if events:
                self._append(events)
        return len(events)

    def _find_pattern_owner(self, pattern: str) -> Fingerprint | None:
        for fingerprint in self._base_fingerprints + tuple(self._added_fingerprints):
            if (
                fingerprint.status is not FingerprintStatus.RETIRED
                and fingerprint.pattern == pattern
            ):
                return fingerprint
        return None

    def add_proposal(
        self,
        pattern: str,
        category: Category,
        expected_phrase: str | None,
        proposer: str,
    ) -> FingerprintProposal:
        """Store an open proposal; duplicates of live fingerprints are rejected."""
        with self._lock:
            existing = self._find_pattern_owner(pattern)
            if existing is not None:
                raise ConflictError(
                    f"pattern already covered by fingerprint {existing.id}",
                    details={"existing_id": existing.id},
                )
            self._proposal_seq += 1
            proposal = FingerprintProposal(
                proposal_id=f"prop-{self._proposal_seq}",
                pattern=pattern,
                category=category,
                expected_phrase=expected_phrase,
                proposer=proposer,
                submitted=self._clock(),
            )
            self._proposals[proposal.proposal_id] = proposal
            self._append(
                [{"event": "proposal", "proposal": proposal_to_dict(proposal)}]
            )
            return proposal

    def resolve_proposal(
        self,
        proposal_id: str,
        decision: str,
        note: str | None = None,
    ) -> tuple[FingerprintProposal, Fingerprint | None]:
        """Close a proposal. Approval creates the fingerprint atomically:

        both the state change and the new fingerprint live in one event
        line, so no observable state has one without the other.
        """
        if decision not in ("approve", "reject"):
            raise ContractViolation(f"decision must be approve|reject, got {decision!r}")
        with self._lock:
            proposal = self._proposals.get(proposal_id)
            if proposal is None:
                raise NotFoundError(f"unknown proposal {proposal_id}")
            if proposal.state is not ProposalState.OPEN:
                raise ConflictError(
                    f"proposal {proposal_id} already {proposal.state.value}"
                )

            fingerprint: Fingerprint | None = None
            if decision == "approve":
                existing = self._find_pattern_owner(proposal.pattern)
                if existing is not None:
                    raise ConflictError(
                        f"pattern already covered by fingerprint {existing.id}",
                        details={"existing_id": existing.id},
                    )
                self._fingerprint_seq += 1
                fingerprint = Fingerprint(
                    id=f"fp-a{self._fingerprint_seq}",
                    pattern=proposal.pattern,
                    category=proposal.category,
                    expected_phrase=proposal.expected_phrase,
                    status=FingerprintStatus.ACTIVE,
                    provenance=f"proposal {proposal_id} by {proposal.proposer}",
                )
                state = ProposalState.APPROVED
            else:
                state = ProposalState.REJECTED

            updated = FingerprintProposal(
                proposal_id=proposal.proposal_id,
                pattern=proposal.pattern,
                category=proposal.category,
                expected_phrase=proposal.expected_phrase,
                proposer=proposal.proposer,
                submitted=proposal.submitted,
                state=state,
                resolution_note=note,
            )
            event = {
                "event": "proposal_resolved",
                "proposal_id": proposal_id,
                "state": state.value,
                "note": note,
                "fingerprint": fingerprint_to_dict(fingerprint) if fingerprint else None,
                "dictionary_version": (
                    self._dictionary_version + 1 if fingerprint else None
                ),
            }
            self._proposals[proposal_id] = updated
            if fingerprint is not None:
                self._added_fingerprints.append(fingerprint)
                self._dictionary_version += 1
            self._append([event])
            return updated, fingerprint

    # ------------------------------------------------------------------
    # backup

    def export_jsonl(self, path: str | Path) -> None:
        """Write a compacted snapshot; the output is itself a valid store file."""
        with self._lock:
            events: list[dict] = [{"event": "header", **HEADER}]
            for paper in self._papers.values():
                events.append({"event": "paper", "paper": paper_to_dict(paper)})
            for assessment in self._assessments:
                events.append(
                    {"event": "assessment", "assessment": assessment_to_dict(assessment)}
                )
            for proposal in self._proposals.values():
                events.append(
                    {"event": "proposal", "proposal": proposal_to_dict(proposal)}
                )
            for fingerprint in self._added_fingerprints:
                # version omitted: replay re-derives base + 1 per addition
                events.append(
                    {
                        "event": "fingerprint_added",
                        "fingerprint": fingerprint_to_dict(fingerprint),
                        "dictionary_version": None,
                    }
                )
        with open(path, "w", encoding="utf-8") as handle:
            for event in events:
                handle.write(json.dumps(event, ensure_ascii=False) + "\n")
