"""Canonical text form used for all fingerprint matching.

Documents arrive with typographic noise that must not defeat an exact
phrase match: curly apostrophes, soft hyphens, end-of-line hyphenation,
mixed case, punctuation, and irregular whitespace. ``normalize`` folds a
document into a canonical form (lowercase letters, digits, ASCII
apostrophe, single spaces) and keeps an offset map so every canonical
position can be traced back to the original character it came from.
Matches found in canonical space are therefore reportable as exact spans
of the original document.

The folding stages, applied in order:

    1. curly quotes/apostrophes become ASCII; quote marks other than the
       apostrophe are dropped entirely
    2. soft hyphens (U+00AD) are dropped
    3. end-of-line hyphenation is joined: "-" + line break + letter
       vanishes, gluing the word halves together
    4. lowercase
    5. anything that is not a letter, digit, or apostrophe becomes a space
    6. space runs collapse to a single space; leading/trailing space is
       trimmed

A collapsed or joined position maps to the first original character that
contributed to it, so snippets always start at visually sensible places.
Letters with diacritics stay as-is; they are not folded to ASCII.
"""

from __future__ import annotations

import re
from array import array
from dataclasses import dataclass
from typing import Sequence

_QUOTE_FOLD = {"‘": "'", "’": "'", "“": '"', "”": '"'}
_DROPPED = ('"', "‘", "’", "“", "”", "­")
_LINE_BREAKS = ("\n", "\r")

# Text that is already canonical skips the character-by-character pass.
_CANONICAL_RE = re.compile(r"[a-z0-9' ]*")

# Cache of per-character folding results (lowercase + keep-or-space).
# Document alphabets are small, so this turns the hot loop into dict hits.
_fold_cache: dict[str, tuple[str, ...]] = {}


@dataclass(frozen=True)
class NormalizedText:
    """A canonical character sequence plus its map back to the original.

    ``offset_map[k]`` is the index, in the original text, of the character
    that canonical position ``k`` came from. It is monotonically
    non-decreasing and every entry lies in ``[0, original_length)``.
    """

    canonical: str
    offset_map: Sequence[int]
    original_length: int

    def span_to_original(self, i: int, j: int) -> tuple[int, int]:
        """Map a canonical half-open span [i, j) to original coordinates."""
        start = self.offset_map[i]
        end = self.offset_map[j - 1] + 1
        return start, end


def _fold_char(ch: str) -> tuple[str, ...]:
    folded = _fold_cache.get(ch)
    if folded is None:
        pieces = []
        for piece in ch.lower():
            if piece.isalpha() or piece.isdigit() or piece == "'":
                pieces.append(piece)
            else:
                pieces.append(" ")
        folded = tuple(pieces)
        _fold_cache[ch] = folded
    return folded


def _is_canonical(text: str) -> bool:
    if not _CANONICAL_RE.fullmatch(text):
        return False
    if "  " in text:
        return False
    return not (text.startswith(" ") or text.endswith(" "))


def normalize(text: str) -> NormalizedText:
    """Fold ``text`` into canonical matching form with an offset map.

    Total on any str input; normalizing an already-canonical string is the
    identity (so the function is idempotent).
    """
    if _is_canonical(text):
        return NormalizedText(text, array("l", range(len(text))), len(text))

    # Stage 1+2: fold curly quotes, drop double quotes and soft hyphens.
    if any(special in text for special in _DROPPED):
        chars: list[str] = []
        origins = array("l")
        for i, ch in enumerate(text):
            ch = _QUOTE_FOLD.get(ch, ch)
            if ch == '"' or ch == "­":
                continue
            chars.append(ch)
            origins.append(i)
    else:
        chars = list(text)
        origins = array("l", range(len(text)))

    # Stage 3: join end-of-line hyphenation.
    if "-" in text:
        joined: list[str] = []
        joined_origins = array("l")
        n = len(chars)
        k = 0
        while k < n:
            if chars[k] == "-" and k + 1 < n and chars[k + 1] in _LINE_BREAKS:
                after = k + 2
                if chars[k + 1] == "\r" and after < n and chars[after] == "\n":
                    after += 1
                if after < n and chars[after].isalpha():
                    k = after  # drop the hyphen and the break
                    continue
            joined.append(chars[k])
            joined_origins.append(origins[k])
            k += 1
        chars = joined
        origins = joined_origins

    # Stages 4-6 fused: lowercase, classify, collapse spaces, trim.
    out_chars: list[str] = []
    out_origins = array("l")
    pending_space_origin = -1
    for ch, orig in zip(chars, origins):
        for piece in _fold_char(ch):
            if piece == " ":
                if pending_space_origin < 0:
                    pending_space_origin = orig
                continue
            if pending_space_origin >= 0 and out_chars:
                out_chars.append(" ")
                out_origins.append(pending_space_origin)
            pending_space_origin = -1
            out_chars.append(piece)
            out_origins.append(orig)

    return NormalizedText("".join(out_chars), out_origins, len(text))
