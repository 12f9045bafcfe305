"""Shared fixtures and small builders used across the suite."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from paperscreen.dictionary import Dictionary, seed_dictionary
from paperscreen.model import (
    Assessment,
    Category,
    DetectionHit,
    Fingerprint,
    PaperRecord,
    Verdict,
)

T0 = datetime(2021, 10, 1, 12, 0, 0, tzinfo=timezone.utc)


def make_fingerprint(
    fid: str,
    pattern: str,
    category: Category = Category.SCIGEN,
    expected: str | None = None,
    **kwargs,
) -> Fingerprint:
    return Fingerprint(
        id=fid,
        pattern=pattern,
        category=category,
        expected_phrase=expected,
        **kwargs,
    )


def make_paper(pid: str, **kwargs) -> PaperRecord:
    kwargs.setdefault("external_id", f"ext-{pid}")
    kwargs.setdefault("first_seen", T0)
    return PaperRecord(paper_id=pid, **kwargs)


def make_assessment(
    pid: str, verdict: Verdict, assessor: str = "alice", note: str | None = None
) -> Assessment:
    return Assessment(
        paper_id=pid, verdict=verdict, assessor=assessor, timestamp=T0, note=note
    )


def make_hit(fid: str, start: int = 0, end: int = 1, surface: str = "x") -> DetectionHit:
    return DetectionHit(
        fingerprint_id=fid, start=start, end=end, snippet=surface, matched_surface=surface
    )


@pytest.fixture
def seed_dict() -> Dictionary:
    return seed_dictionary()
