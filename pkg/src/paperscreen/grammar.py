"""Weighted context-free grammar sampling and fragment extraction.

Generators of nonsense papers are, at bottom, probabilistic context-free
grammars; their fixed terminal fragments are exactly what the detector's
fingerprints match. This module loads such grammars from a small file
format, samples decoy documents from them, and extracts candidate
fingerprints (long fixed terminal runs) ranked by how likely a generated
document is to contain them.

Grammar files are UTF-8 and line oriented:

    ppsgram v1
    # comments allowed
    NONTERM -> weight : sym "terminal words" sym

Quoted segments are terminal word sequences; bare symbols reference
nonterminals. Repeating a left-hand side adds alternative productions.
The start symbol is the first left-hand side in the file. Weights are
positive rationals ("2", "0.5", "1/3") and are normalized per
nonterminal at load time.

Sampling is a leftmost stochastic expansion. Expansions deeper than
``max_depth`` stop choosing randomly and instead take the production with
the minimum derivation height, which guarantees termination on recursive
grammars at the cost of biasing the distribution at the depth boundary.
"""

from __future__ import annotations

import random
import re
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, NamedTuple

from .dictionary import Dictionary
from .detect import Detector
from .errors import (
    ContractViolation,
    GrammarError,
    UndefinedSymbolError,
    UnproductiveGrammarError,
)

HEADER = "ppsgram v1"

_RULE_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*->\s*(\S+)\s*:\s*(.*)$")
_BODY_TOKEN_RE = re.compile(r'"([^"]*)"|(\S+)')
_NAME_RE = re.compile(r"[A-Za-z_]\w*$")


class Sym(NamedTuple):
    terminal: bool
    value: str


@dataclass(frozen=True)
class Production:
    weight: Fraction
    body: tuple[Sym, ...]
    probability: Fraction  # weight / sum of sibling weights


@dataclass(frozen=True)
class Grammar:
    """A validated, productive grammar with sampling tables precomputed."""

    start: str
    order: tuple[str, ...]
    productions: Mapping[str, tuple[Production, ...]]
    terminals: frozenset[str]
    heights: Mapping[str, int]
    fallback: Mapping[str, int]  # index of the minimum-height production
    cumulative: Mapping[str, tuple[float, ...]]

    @property
    def nonterminals(self) -> frozenset[str]:
        return frozenset(self.order)


def _parse_body(body_text: str, lineno: int) -> tuple[Sym, ...]:
    syms: list[Sym] = []
    for quoted, bare in _BODY_TOKEN_RE.findall(body_text):
        if bare:
            if not _NAME_RE.fullmatch(bare):
                raise GrammarError(
                    f"line {lineno}: invalid nonterminal reference {bare!r}"
                )
            syms.append(Sym(False, bare))
        else:
            words = quoted.split()
            if not words:
                raise GrammarError(f"line {lineno}: empty terminal segment")
            syms.extend(Sym(True, w) for w in words)
    return tuple(syms)


def _compute_heights(
    order: list[str], productions: dict[str, list[tuple[Fraction, tuple[Sym, ...]]]]
) -> tuple[dict[str, int], dict[str, int]]:
    """Minimum derivation height per nonterminal, by fixpoint relaxation.

    A nonterminal left at infinite height is unproductive; the caller
    reports it with a witness cycle.
    """
    INF = float("inf")
    heights: dict[str, float] = {name: INF for name in order}
    fallback: dict[str, int] = {}
    changed = True
    while changed:
        changed = False
        for name in order:
            for index, (_, body) in enumerate(productions[name]):
                child_heights = [heights[s.value] for s in body if not s.terminal]
                if any(h == INF for h in child_heights):
                    continue
                candidate = 1 + (max(child_heights) if child_heights else 0)
                if candidate < heights[name]:
                    heights[name] = candidate
                    fallback[name] = index
                    changed = True

    unproductive = [name for name in order if heights[name] == INF]
    if unproductive:
        # Witness: from the first unproductive nonterminal, repeatedly step
        # to the first unproductive symbol of the first production until a
        # name repeats.
        path = [unproductive[0]]
        while True:
            _, body = productions[path[-1]][0]
            nxt = next(
                s.value for s in body if not s.terminal and heights[s.value] == INF
            )
            if nxt in path:
                cycle = path[path.index(nxt):] + [nxt]
                raise UnproductiveGrammarError(
                    f"unproductive nonterminal {unproductive[0]!r}; "
                    "witness cycle: " + " -> ".join(cycle)
                )
            path.append(nxt)

    return {k: int(v) for k, v in heights.items()}, fallback


def load_grammar(source: str, *, loaded_from: str = "<string>") -> Grammar:
    """Parse and validate grammar file content."""
    lines = source.splitlines()
    if not lines or lines[0].rstrip() != HEADER:
        raise GrammarError(f"line 1: expected header {HEADER!r}")

    order: list[str] = []
    raw: dict[str, list[tuple[Fraction, tuple[Sym, ...]]]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _RULE_RE.match(line)
        if m is None:
            raise GrammarError(
                f"line {lineno}: expected 'NONTERM -> weight : body'"
            )
        name, weight_text, body_text = m.groups()
        try:
            weight = Fraction(weight_text)
        except (ValueError, ZeroDivisionError):
            raise GrammarError(
                f"line {lineno}: unparseable weight {weight_text!r}"
            ) from None
        if weight <= 0:
            raise GrammarError(f"line {lineno}: non-positive weight {weight_text}")
        body = _parse_body(body_text, lineno)
        if name not in raw:
            raw[name] = []
            order.append(name)
        raw[name].append((weight, body))

    if not order:
        raise GrammarError("grammar defines no productions")

    terminals: set[str] = set()
    for name in order:
        for _, body in raw[name]:
            for sym in body:
                if sym.terminal:
                    terminals.add(sym.value)
                elif sym.value not in raw:
                    raise UndefinedSymbolError(
                        f"undefined symbol {sym.value!r} referenced from {name!r}"
                    )

    heights, fallback = _compute_heights(order, raw)

    productions: dict[str, tuple[Production, ...]] = {}
    cumulative: dict[str, tuple[float, ...]] = {}
    for name in order:
        total = sum(w for w, _ in raw[name])
        prods = tuple(
            Production(weight=w, body=body, probability=w / total)
            for w, body in raw[name]
        )
        productions[name] = prods
        acc = Fraction(0)
        cum: list[float] = []
        for p in prods:
            acc += p.probability
            cum.append(float(acc))
        cumulative[name] = tuple(cum)

    return Grammar(
        start=order[0],
        order=tuple(order),
        productions=productions,
        terminals=frozenset(terminals),
        heights=heights,
        fallback=fallback,
        cumulative=cumulative,
    )


def load_grammar_file(path: str | Path) -> Grammar:
    return load_grammar(Path(path).read_text(encoding="utf-8"), loaded_from=str(path))


def generate(grammar: Grammar, rng_seed: int, max_depth: int = 20) -> str:
    """Sample one document: terminals of a leftmost expansion, space-joined.

    Pure function of (grammar, rng_seed, max_depth). Nonterminals expanded
    deeper than ``max_depth`` take their minimum-height production instead
    of a random choice, so generation always terminates.
    """
    if max_depth < 1:
        raise ContractViolation("max_depth must be >= 1")
    rng = random.Random(rng_seed)
    words: list[str] = []
    stack: list[tuple[Sym, int]] = [(Sym(False, grammar.start), 1)]
    while stack:
        sym, depth = stack.pop()
        if sym.terminal:
            words.append(sym.value)
            continue
        prods = grammar.productions[sym.value]
        if depth > max_depth:
            prod = prods[grammar.fallback[sym.value]]
        elif len(prods) == 1:
            prod = prods[0]
        else:
            cum = grammar.cumulative[sym.value]
            index = min(bisect_right(cum, rng.random()), len(prods) - 1)
            prod = prods[index]
        for child in reversed(prod.body):
            stack.append((child, depth + 1))
    return " ".join(words)


def production_use_probability(
    grammar: Grammar,
    targets: set[tuple[str, int]],
    max_depth: int = 20,
) -> Fraction:
    """Exact P(a depth-bounded derivation uses >= 1 production in ``targets``).

    Targets are (nonterminal, production index) pairs. Computed by dynamic
    programming over (nonterminal, depth): subtrees chosen independently
    make the miss probabilities multiply. Beyond ``max_depth`` expansion
    is deterministic, so all deeper states collapse onto one sentinel
    depth; termination there follows from heights strictly decreasing
    along fallback productions.
    """
    sentinel = max_depth + 1
    memo: dict[tuple[str, int], Fraction] = {}

    def used(name: str, depth: int) -> Fraction:
        depth = min(depth, sentinel)
        key = (name, depth)
        cached = memo.get(key)
        if cached is not None:
            return cached
        prods = grammar.productions[name]
        if depth > max_depth:
            choices = [(Fraction(1), grammar.fallback[name])]
        else:
            choices = [(p.probability, i) for i, p in enumerate(prods)]
        total = Fraction(0)
        for prob, index in choices:
            if (name, index) in targets:
                total += prob
                continue
            miss = Fraction(1)
            for sym in prods[index].body:
                if not sym.terminal:
                    miss *= 1 - used(sym.value, depth + 1)
            total += prob * (1 - miss)
        memo[key] = total
        return total

    return used(grammar.start, 1)


def extract_candidate_fingerprints(
    grammar: Grammar, min_tokens: int, *, max_depth: int = 20
) -> list[tuple[str, Fraction]]:
    """Candidate fingerprint phrases with exact occurrence probabilities.

    A candidate is a maximal contiguous terminal run of at least
    ``min_tokens`` tokens inside some production body. Its probability is
    that at least one derivation step (under the same depth bounding as
    ``generate``) uses a production containing the run. Sorted by
    descending probability, then phrase.
    """
    if min_tokens < 2:
        raise ContractViolation("min_tokens must be >= 2")
    phrase_targets: dict[str, set[tuple[str, int]]] = {}
    for name in grammar.order:
        for index, prod in enumerate(grammar.productions[name]):
            run: list[str] = []
            for sym in (*prod.body, Sym(False, "")):
                if sym.terminal:
                    run.append(sym.value)
                    continue
                if len(run) >= min_tokens:
                    phrase = " ".join(run)
                    phrase_targets.setdefault(phrase, set()).add((name, index))
                run = []

    ranked = [
        (phrase, production_use_probability(grammar, targets, max_depth))
        for phrase, targets in phrase_targets.items()
    ]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def measure_detection_rate(
    grammar: Grammar,
    dictionary: Dictionary,
    samples: int,
    rng_seed: int,
    max_depth: int = 20,
) -> float:
    """Fraction of sampled documents the dictionary detects (>= 1 hit)."""
    if samples < 1:
        raise ContractViolation("samples must be >= 1")
    detector = Detector(dictionary)
    master = random.Random(rng_seed)
    flagged = 0
    for _ in range(samples):
        doc = generate(grammar, master.getrandbits(63), max_depth)
        if detector.detect(doc).hits:
            flagged += 1
    return flagged / samples
