"""Shared domain types and the derived screening-status logic.

Everything here is an immutable value type; the functions are pure. The
mutable, durable view of these objects lives in the store module.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Mapping

from .errors import ContractViolation, NormalizationError
from .normalize import normalize


class Category(str, Enum):
    """Kind of evidence a fingerprint carries."""

    SCIGEN = "scigen"
    MATHGEN = "mathgen"
    SBIR = "sbir"
    TORTURED = "tortured"


class FingerprintStatus(str, Enum):
    PROPOSED = "proposed"
    ACTIVE = "active"
    RETIRED = "retired"


class Verdict(str, Enum):
    PROBLEMATIC = "problematic"
    NOT_PROBLEMATIC = "not_problematic"
    UNSURE = "unsure"


class ProposalState(str, Enum):
    OPEN = "open"
    APPROVED = "approved"
    REJECTED = "rejected"


def token_count(pattern: str) -> int:
    return len(pattern.split(" ")) if pattern else 0


def normalize_doi(doi: str | None) -> str | None:
    """Canonical DOI used as a dedup key.

    DOIs are case-insensitive; a leading resolver prefix and a bare DOI
    must dedupe together.
    """
    if doi is None:
        return None
    lowered = doi.strip().lower()
    if lowered.startswith("https://doi.org/"):
        lowered = lowered[len("https://doi.org/"):]
    return lowered or None


@dataclass(frozen=True)
class Fingerprint:
    """One phrase pattern the detector looks for.

    ``pattern`` is stored in canonical normalized form and must contain at
    least two tokens (single common words would flood the results).
    ``expected_phrase`` names the untortured original and is present
    exactly when the category is tortured.
    """

    id: str
    pattern: str
    category: Category
    expected_phrase: str | None = None
    status: FingerprintStatus = FingerprintStatus.ACTIVE
    provenance: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ContractViolation("fingerprint id must be non-empty")
        if normalize(self.pattern).canonical != self.pattern:
            raise NormalizationError(
                f"pattern not in canonical normalized form: {self.pattern!r}"
            )
        if token_count(self.pattern) < 2:
            raise ContractViolation(
                f"pattern must contain at least 2 tokens: {self.pattern!r}"
            )
        if (self.category is Category.TORTURED) != (self.expected_phrase is not None):
            raise ContractViolation(
                "expected_phrase is required for tortured fingerprints "
                f"and forbidden otherwise: {self.pattern!r}"
            )


@dataclass(frozen=True)
class DetectionHit:
    """One fingerprint occurrence inside one document.

    ``span`` is a half-open character interval in the ORIGINAL text;
    ``matched_surface`` is the exact original substring, which normalizes
    back to the fingerprint's pattern. ``snippet`` adds up to 60 original
    characters of context on each side.
    """

    fingerprint_id: str
    start: int
    end: int
    snippet: str
    matched_surface: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ContractViolation(
                f"invalid hit span [{self.start}, {self.end})"
            )


@dataclass(frozen=True)
class PaperRecord:
    """One screened publication.

    A suspect must be addressable, so at least one of ``doi`` and
    ``external_id`` is present. ``provisional_triggers`` records the
    fingerprints that flagged the paper when no full text was available to
    compute real hits; they are cleared once hits for the same fingerprint
    are computed.
    """

    paper_id: str
    doi: str | None = None
    external_id: str | None = None
    title: str = ""
    venue: str | None = None
    year: int | None = None
    record_url: str | None = None
    pubpeer_url: str | None = None
    first_seen: datetime | None = None
    hits: tuple[DetectionHit, ...] = ()
    provisional_triggers: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.paper_id:
            raise ContractViolation("paper_id must be non-empty")
        if self.doi is None and self.external_id is None:
            raise ContractViolation(
                f"paper {self.paper_id}: at least one of doi/external_id required"
            )
        object.__setattr__(self, "hits", tuple(self.hits))
        object.__setattr__(
            self, "provisional_triggers", tuple(self.provisional_triggers)
        )


@dataclass(frozen=True)
class Assessment:
    """One human verdict on one paper. Append-only: corrections are new rows."""

    paper_id: str
    verdict: Verdict
    assessor: str
    timestamp: datetime
    note: str | None = None


@dataclass(frozen=True)
class FingerprintProposal:
    """A user-submitted fingerprint awaiting review."""

    proposal_id: str
    pattern: str
    category: Category
    proposer: str
    submitted: datetime
    expected_phrase: str | None = None
    state: ProposalState = ProposalState.OPEN
    resolution_note: str | None = None


@dataclass(frozen=True)
class ScreeningStatus:
    """Derived per-paper state: awaiting human review, or assessed(label)."""

    state: str  # "awaiting" | "assessed"
    label: Verdict | None = None

    def __post_init__(self) -> None:
        if self.state not in ("awaiting", "assessed"):
            raise ContractViolation(f"invalid status state {self.state!r}")
        if (self.state == "assessed") != (self.label is not None):
            raise ContractViolation("label is set exactly for assessed status")

    @classmethod
    def awaiting(cls) -> "ScreeningStatus":
        return cls("awaiting")

    @classmethod
    def assessed(cls, label: Verdict) -> "ScreeningStatus":
        return cls("assessed", label)


@dataclass(frozen=True)
class ScreeningStats:
    """Ledger-level bookkeeping; the constructor enforces the arithmetic."""

    total_suspects: int
    awaiting: int
    assessed: int
    assessed_problematic: int
    assessed_not_problematic: int
    assessed_unsure: int
    per_category_counts: Mapping[Category, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.awaiting + self.assessed != self.total_suspects:
            raise ContractViolation("awaiting + assessed must equal total_suspects")
        labelled = (
            self.assessed_problematic
            + self.assessed_not_problematic
            + self.assessed_unsure
        )
        if labelled != self.assessed:
            raise ContractViolation("per-label counts must sum to assessed")
        object.__setattr__(
            self, "per_category_counts", dict(self.per_category_counts)
        )


def derive_status(
    paper: PaperRecord, assessments: Iterable[Assessment]
) -> ScreeningStatus:
    """Aggregate a paper's assessments into its screening status.

    No assessments means awaiting. Otherwise the strict-majority verdict
    wins; without a strict majority (ties, or split opinions) the paper is
    assessed unsure. Permutation-invariant in the assessment list.
    """
    verdicts = []
    for a in assessments:
        if a.paper_id != paper.paper_id:
            raise ContractViolation(
                f"assessment for {a.paper_id} applied to paper {paper.paper_id}"
            )
        verdicts.append(a.verdict)
    if not verdicts:
        return ScreeningStatus.awaiting()
    top, count = Counter(verdicts).most_common(1)[0]
    if 2 * count > len(verdicts):
        return ScreeningStatus.assessed(top)
    return ScreeningStatus.assessed(Verdict.UNSURE)


def summarize(
    papers: Iterable[PaperRecord],
    assessments: Iterable[Assessment],
    fingerprints: Iterable[Fingerprint] | Mapping[str, Fingerprint],
) -> ScreeningStats:
    """Compute ledger statistics.

    ``fingerprints`` (any status) is needed to resolve hit categories; a
    hit referencing an unknown fingerprint, or an assessment referencing
    an unknown paper, is a referential-integrity violation. Each paper
    counts at most once per category regardless of hit multiplicity.
    """
    if isinstance(fingerprints, Mapping):
        by_id = dict(fingerprints)
    else:
        by_id = {f.id: f for f in fingerprints}
    paper_list = list(papers)
    known = {p.paper_id for p in paper_list}

    grouped: dict[str, list[Assessment]] = {}
    for a in assessments:
        if a.paper_id not in known:
            raise ContractViolation(
                f"assessment references unknown paper {a.paper_id}"
            )
        grouped.setdefault(a.paper_id, []).append(a)

    awaiting = 0
    by_label = Counter()
    per_category = {category: 0 for category in Category}
    for paper in paper_list:
        status = derive_status(paper, grouped.get(paper.paper_id, []))
        if status.state == "awaiting":
            awaiting += 1
        else:
            by_label[status.label] += 1
        categories = set()
        for hit in paper.hits:
            fingerprint = by_id.get(hit.fingerprint_id)
            if fingerprint is None:
                raise ContractViolation(
                    f"paper {paper.paper_id} hit references unknown "
                    f"fingerprint {hit.fingerprint_id}"
                )
            categories.add(fingerprint.category)
        for category in categories:
            per_category[category] += 1

    assessed = len(paper_list) - awaiting
    return ScreeningStats(
        total_suspects=len(paper_list),
        awaiting=awaiting,
        assessed=assessed,
        assessed_problematic=by_label[Verdict.PROBLEMATIC],
        assessed_not_problematic=by_label[Verdict.NOT_PROBLEMATIC],
        assessed_unsure=by_label[Verdict.UNSURE],
        per_category_counts=per_category,
    )
