"""Multi-pattern phrase matching over canonical text.

``compile`` builds an Aho-Corasick automaton from fingerprint patterns;
``scan`` walks a document's canonical form once, reporting every
word-bounded occurrence of every pattern with spans mapped back to the
original text. ``naive_scan`` answers the same contract with repeated
substring search and exists as the independent test oracle — any
discrepancy between the two is a bug in one of them.

A pattern matches the canonical text at [i, j) iff the substring equals
the pattern and the match is word-bounded: position i is 0 or preceded by
a space, and j is the end or followed by a space. Overlapping matches
from different patterns are all reported.
"""

from __future__ import annotations

from collections import deque

from .errors import ContractViolation, DuplicatePatternError, NormalizationError
from .model import DetectionHit, Fingerprint
from .normalize import NormalizedText, normalize

SNIPPET_CONTEXT = 60


class MatcherAutomaton:
    """Immutable multi-pattern index; build via :func:`compile`.

    Nodes live in parallel lists: ``_goto`` maps a node's outgoing edges,
    ``_fail`` is the longest-proper-suffix link, and ``_out`` holds the
    indexes of patterns ending at the node (own plus those inherited along
    the failure chain, so shorter suffix patterns are never missed).
    """

    def __init__(self, patterns: list[tuple[str, str]]) -> None:
        self._patterns = tuple(patterns)
        self._goto: list[dict[str, int]] = [{}]
        self._out: list[tuple[int, ...]] = [()]
        for index, (_, pattern) in enumerate(patterns):
            node = 0
            for ch in pattern:
                nxt = self._goto[node].get(ch)
                if nxt is None:
                    self._goto.append({})
                    self._out.append(())
                    nxt = len(self._goto) - 1
                    self._goto[node][ch] = nxt
                node = nxt
            self._out[node] = self._out[node] + (index,)
        self._fail = self._build_failure_links()

    def _build_failure_links(self) -> list[int]:
        fail = [0] * len(self._goto)
        queue: deque[int] = deque()
        for child in self._goto[0].values():
            queue.append(child)
        while queue:
            node = queue.popleft()
            for ch, child in self._goto[node].items():
                # Walk the failure chain for the longest suffix that can
                # still extend by ch.
                f = fail[node]
                while f and ch not in self._goto[f]:
                    f = fail[f]
                target = self._goto[f].get(ch, 0)
                fail[child] = 0 if target == child else target
                self._out[child] = self._out[child] + self._out[fail[child]]
                queue.append(child)
        return fail

    @property
    def patterns(self) -> tuple[tuple[str, str], ...]:
        """Registered (fingerprint_id, pattern) pairs."""
        return self._patterns

    def find_canonical(self, canonical: str) -> list[tuple[int, int, int]]:
        """All word-bounded matches as (pattern_index, start, end) in canonical space."""
        matches: list[tuple[int, int, int]] = []
        goto = self._goto
        fail = self._fail
        out = self._out
        patterns = self._patterns
        n = len(canonical)
        state = 0
        for pos, ch in enumerate(canonical):
            while state and ch not in goto[state]:
                state = fail[state]
            state = goto[state].get(ch, 0)
            if out[state]:
                j = pos + 1
                for index in out[state]:
                    i = j - len(patterns[index][1])
                    if (i == 0 or canonical[i - 1] == " ") and (
                        j == n or canonical[j] == " "
                    ):
                        matches.append((index, i, j))
        return matches


def compile(fingerprints: list[Fingerprint]) -> MatcherAutomaton:
    """Build the automaton, re-verifying that every pattern is canonical.

    Raises ``DuplicatePatternError`` when two fingerprints share a pattern
    and ``NormalizationError`` when a pattern changes under normalization.
    """
    seen: dict[str, str] = {}
    entries: list[tuple[str, str]] = []
    for f in fingerprints:
        if not f.pattern:
            raise NormalizationError(f"empty pattern for fingerprint {f.id}")
        if normalize(f.pattern).canonical != f.pattern:
            raise NormalizationError(
                f"pattern not in canonical normalized form: {f.pattern!r}"
            )
        if f.pattern in seen:
            raise DuplicatePatternError(
                f"duplicate pattern {f.pattern!r} "
                f"(fingerprints {seen[f.pattern]} and {f.id})"
            )
        seen[f.pattern] = f.id
        entries.append((f.id, f.pattern))
    return MatcherAutomaton(entries)


def _hit(norm: NormalizedText, doc: str, fid: str, i: int, j: int) -> DetectionHit:
    start, end = norm.span_to_original(i, j)
    return DetectionHit(
        fingerprint_id=fid,
        start=start,
        end=end,
        snippet=doc[max(0, start - SNIPPET_CONTEXT):min(len(doc), end + SNIPPET_CONTEXT)],
        matched_surface=doc[start:end],
    )


def scan(automaton: MatcherAutomaton, doc: str) -> list[DetectionHit]:
    """Find every fingerprint occurrence in ``doc``, in a single pass.

    Hits are sorted by (span start, fingerprint id); overlapping hits from
    different fingerprints are all present.
    """
    norm = normalize(doc)
    hits = [
        _hit(norm, doc, automaton.patterns[index][0], i, j)
        for index, i, j in automaton.find_canonical(norm.canonical)
    ]
    hits.sort(key=lambda h: (h.start, h.fingerprint_id))
    return hits


def naive_scan(fingerprints: list[Fingerprint], doc: str) -> list[DetectionHit]:
    """Reference implementation of ``scan``: per-pattern substring search.

    Quadratic in the worst case and deliberately simple; used as the
    oracle the automaton is checked against.
    """
    norm = normalize(doc)
    canonical = norm.canonical
    n = len(canonical)
    hits: list[DetectionHit] = []
    for f in fingerprints:
        pattern = normalize(f.pattern).canonical
        if not pattern:
            raise ContractViolation(f"empty pattern for fingerprint {f.id}")
        pos = 0
        while True:
            i = canonical.find(pattern, pos)
            if i < 0:
                break
            j = i + len(pattern)
            if (i == 0 or canonical[i - 1] == " ") and (j == n or canonical[j] == " "):
                start = norm.offset_map[i]
                end = norm.offset_map[j - 1] + 1
                hits.append(
                    DetectionHit(
                        fingerprint_id=f.id,
                        start=start,
                        end=end,
                        snippet=doc[max(0, start - SNIPPET_CONTEXT):min(len(doc), end + SNIPPET_CONTEXT)],
                        matched_surface=doc[start:end],
                    )
                )
            pos = i + 1
    hits.sort(key=lambda h: (h.start, h.fingerprint_id))
    return hits
