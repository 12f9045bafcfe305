"""JSON round-trip codecs for the domain types.

Used by the store's event log, the export format, and the REST layer.
Round-tripping through these functions is lossless.
"""

from __future__ import annotations

from datetime import datetime, timezone

from .model import (
    Assessment,
    Category,
    DetectionHit,
    Fingerprint,
    FingerprintProposal,
    FingerprintStatus,
    PaperRecord,
    ProposalState,
    Verdict,
)


def format_timestamp(value: datetime) -> str:
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc).isoformat()


def parse_timestamp(value: str) -> datetime:
    return datetime.fromisoformat(value)


def hit_to_dict(hit: DetectionHit) -> dict:
    return {
        "fingerprint_id": hit.fingerprint_id,
        "start": hit.start,
        "end": hit.end,
        "snippet": hit.snippet,
        "matched_surface": hit.matched_surface,
    }


def hit_from_dict(data: dict) -> DetectionHit:
    return DetectionHit(
        fingerprint_id=data["fingerprint_id"],
        start=data["start"],
        end=data["end"],
        snippet=data["snippet"],
        matched_surface=data["matched_surface"],
    )


def paper_to_dict(paper: PaperRecord) -> dict:
    return {
        "paper_id": paper.paper_id,
        "doi": paper.doi,
        "external_id": paper.external_id,
        "title": paper.title,
        "venue": paper.venue,
        "year": paper.year,
        "record_url": paper.record_url,
        "pubpeer_url": paper.pubpeer_url,
        "first_seen": format_timestamp(paper.first_seen) if paper.first_seen else None,
        "hits": [hit_to_dict(h) for h in paper.hits],
        "provisional_triggers": list(paper.provisional_triggers),
    }


def paper_from_dict(data: dict) -> PaperRecord:
    return PaperRecord(
        paper_id=data["paper_id"],
        doi=data.get("doi"),
        external_id=data.get("external_id"),
        title=data.get("title", ""),
        venue=data.get("venue"),
        year=data.get("year"),
        record_url=data.get("record_url"),
        pubpeer_url=data.get("pubpeer_url"),
        first_seen=(
            parse_timestamp(data["first_seen"]) if data.get("first_seen") else None
        ),
        hits=tuple(hit_from_dict(h) for h in data.get("hits", [])),
        provisional_triggers=tuple(data.get("provisional_triggers", [])),
    )


def assessment_to_dict(assessment: Assessment) -> dict:
    return {
        "paper_id": assessment.paper_id,
        "verdict": assessment.verdict.value,
        "assessor": assessment.assessor,
        "timestamp": format_timestamp(assessment.timestamp),
        "note": assessment.note,
    }


def assessment_from_dict(data: dict) -> Assessment:
    return Assessment(
        paper_id=data["paper_id"],
        verdict=Verdict(data["verdict"]),
        assessor=data["assessor"],
        timestamp=parse_timestamp(data["timestamp"]),
        note=data.get("note"),
    )


def fingerprint_to_dict(fingerprint: Fingerprint) -> dict:
    return {
        "id": fingerprint.id,
        "pattern": fingerprint.pattern,
        "category": fingerprint.category.value,
        "expected_phrase": fingerprint.expected_phrase,
        "status": fingerprint.status.value,
        "provenance": fingerprint.provenance,
    }


def fingerprint_from_dict(data: dict) -> Fingerprint:
    return Fingerprint(
        id=data["id"],
        pattern=data["pattern"],
        category=Category(data["category"]),
        expected_phrase=data.get("expected_phrase"),
        status=FingerprintStatus(data.get("status", "active")),
        provenance=data.get("provenance", ""),
    )


def proposal_to_dict(proposal: FingerprintProposal) -> dict:
    return {
        "proposal_id": proposal.proposal_id,
        "pattern": proposal.pattern,
        "category": proposal.category.value,
        "expected_phrase": proposal.expected_phrase,
        "proposer": proposal.proposer,
        "submitted": format_timestamp(proposal.submitted),
        "state": proposal.state.value,
        "resolution_note": proposal.resolution_note,
    }


def proposal_from_dict(data: dict) -> FingerprintProposal:
    return FingerprintProposal(
        proposal_id=data["proposal_id"],
        pattern=data["pattern"],
        category=Category(data["category"]),
        expected_phrase=data.get("expected_phrase"),
        proposer=data["proposer"],
        submitted=parse_timestamp(data["submitted"]),
        state=ProposalState(data.get("state", "open")),
        resolution_note=data.get("resolution_note"),
    )
