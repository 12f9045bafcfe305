"""Fingerprint dictionary: the versioned phrase collection and its file format.

Dictionary files are UTF-8 and line oriented:

    ppsdict v1
    # comment lines and blank lines are ignored
    <category>\\t<pattern>\\t<expected_phrase-or-empty>\\t<provenance>

Categories are scigen | mathgen | sbir | tortured. Patterns must already
be in canonical normalized form and ASCII; the loader verifies both and
rejects offending lines by number. Tortured entries carry the expected
original phrase; other categories must leave that column empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ContractViolation, DictionaryError, DuplicatePatternError, NormalizationError
from .model import Category, Fingerprint, FingerprintStatus
from .normalize import normalize

HEADER = "ppsdict v1"


@dataclass(frozen=True)
class Dictionary:
    """An immutable snapshot of the fingerprint collection at one version."""

    fingerprints: tuple[Fingerprint, ...]
    version: int = 1
    loaded_from: str = "<memory>"

    def __post_init__(self) -> None:
        object.__setattr__(self, "fingerprints", tuple(self.fingerprints))
        seen: dict[str, str] = {}
        for f in self.fingerprints:
            if f.status is FingerprintStatus.RETIRED:
                continue
            if f.pattern in seen:
                raise DuplicatePatternError(
                    f"duplicate pattern {f.pattern!r} "
                    f"(fingerprints {seen[f.pattern]} and {f.id})"
                )
            seen[f.pattern] = f.id

    def active(self) -> tuple[Fingerprint, ...]:
        return tuple(
            f for f in self.fingerprints if f.status is FingerprintStatus.ACTIVE
        )

    def by_id(self, fingerprint_id: str) -> Fingerprint | None:
        for f in self.fingerprints:
            if f.id == fingerprint_id:
                return f
        return None


def load_dictionary(source: str, *, loaded_from: str = "<string>", version: int = 1) -> Dictionary:
    """Parse dictionary file content; all diagnostics carry line numbers."""
    lines = source.splitlines()
    if not lines or lines[0].rstrip() != HEADER:
        raise DictionaryError(f"line 1: expected header {HEADER!r}")

    fingerprints: list[Fingerprint] = []
    seen: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise DictionaryError(
                f"line {lineno}: expected 4 tab-separated fields, got {len(fields)}"
            )
        category_raw, pattern, expected_raw, provenance = fields
        try:
            category = Category(category_raw)
        except ValueError:
            raise DictionaryError(
                f"line {lineno}: unknown category {category_raw!r}"
            ) from None
        if not pattern.isascii():
            raise DictionaryError(
                f"line {lineno}: pattern must be ASCII: {pattern!r}"
            )
        if normalize(pattern).canonical != pattern:
            raise DictionaryError(
                f"line {lineno}: pattern not in canonical normalized form: {pattern!r}"
            )
        if pattern in seen:
            prev_id, prev_line = seen[pattern]
            raise DictionaryError(
                f"line {lineno}: duplicate pattern {pattern!r} "
                f"(entries {prev_id} at line {prev_line} and fp-{lineno:04d} at line {lineno})"
            )
        entry_id = f"fp-{lineno:04d}"
        expected = expected_raw if expected_raw else None
        try:
            fingerprint = Fingerprint(
                id=entry_id,
                pattern=pattern,
                category=category,
                expected_phrase=expected,
                status=FingerprintStatus.ACTIVE,
                provenance=provenance,
            )
        except (ContractViolation, NormalizationError) as exc:
            raise DictionaryError(f"line {lineno}: {exc}") from None
        seen[pattern] = (entry_id, lineno)
        fingerprints.append(fingerprint)

    return Dictionary(tuple(fingerprints), version=version, loaded_from=loaded_from)


def load_dictionary_file(path: str | Path) -> Dictionary:
    text = Path(path).read_text(encoding="utf-8")
    return load_dictionary(text, loaded_from=str(path))


def seed_dictionary_text() -> str:
    """Content of the small dictionary shipped with the package."""
    return (
        resources.files("paperscreen.data")
        .joinpath("seed_dictionary.txt")
        .read_text(encoding="utf-8")
    )


def seed_dictionary() -> Dictionary:
    return load_dictionary(seed_dictionary_text(), loaded_from="<seed>")
