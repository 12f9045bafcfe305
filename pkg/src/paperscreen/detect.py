"""Category-aware detection: run the matcher against a dictionary.

A ``Detector`` compiles the active fingerprints once and can then scan
any number of documents concurrently. Retired fingerprints stop matching
new documents but stay resolvable by ``explain_hit`` so historical
reports remain interpretable.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import match
from .dictionary import Dictionary
from .errors import NotFoundError
from .model import Category, DetectionHit


@dataclass(frozen=True)
class DetectionReport:
    """All fingerprint evidence found in one document."""

    paper_id: str
    hits: tuple[DetectionHit, ...]
    categories_triggered: frozenset[Category]
    dictionary_version: int


@dataclass(frozen=True)
class HitExplanation:
    """What an assessor needs to judge one hit.

    For tortured hits ``expected_phrase`` names the original term the
    author presumably mangled.
    """

    fingerprint_id: str
    category: Category
    pattern: str
    snippet: str
    expected_phrase: str | None = None


class Detector:
    """Compiled dictionary ready to scan documents.

    Immutable once built; share freely across threads. Rebuild when the
    dictionary version changes.
    """

    def __init__(self, dictionary: Dictionary) -> None:
        self.dictionary = dictionary
        self._by_id = {f.id: f for f in dictionary.fingerprints}
        self._automaton = match.compile(list(dictionary.active()))

    def detect(self, doc: str, *, paper_id: str = "") -> DetectionReport:
        hits = match.scan(self._automaton, doc)
        categories = frozenset(
            self._by_id[h.fingerprint_id].category for h in hits
        )
        return DetectionReport(
            paper_id=paper_id,
            hits=tuple(hits),
            categories_triggered=categories,
            dictionary_version=self.dictionary.version,
        )

    def explain(self, hit: DetectionHit) -> HitExplanation:
        fingerprint = self._by_id.get(hit.fingerprint_id)
        if fingerprint is None:
            raise NotFoundError(
                f"hit references unknown fingerprint {hit.fingerprint_id}"
            )
        return HitExplanation(
            fingerprint_id=fingerprint.id,
            category=fingerprint.category,
            pattern=fingerprint.pattern,
            snippet=hit.snippet,
            expected_phrase=fingerprint.expected_phrase,
        )


def detect(doc: str, dictionary: Dictionary, *, paper_id: str = "") -> DetectionReport:
    """One-shot detection; build a ``Detector`` instead when scanning many docs."""
    return Detector(dictionary).detect(doc, paper_id=paper_id)


def explain_hit(hit: DetectionHit, dictionary: Dictionary) -> HitExplanation:
    fingerprint = dictionary.by_id(hit.fingerprint_id)
    if fingerprint is None:
        raise NotFoundError(
            f"hit references unknown fingerprint {hit.fingerprint_id}"
        )
    return HitExplanation(
        fingerprint_id=fingerprint.id,
        category=fingerprint.category,
        pattern=fingerprint.pattern,
        snippet=hit.snippet,
        expected_phrase=fingerprint.expected_phrase,
    )
