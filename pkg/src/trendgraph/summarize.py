"""Per-segment extractive summaries via greedy set cover over top keywords."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .ingest import Document

COVER_RULES = ("default", "literal")


@dataclass(frozen=True)
class CoverInstance:
    targets: tuple[str, ...]
    candidates: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def build(cls, targets: Iterable[str], documents: Iterable[tuple[str, Sequence[str]]]) -> "CoverInstance":
        """Keep only documents that contain at least one target keyword."""
        targets = tuple(dict.fromkeys(targets))
        wanted = set(targets)
        candidates = tuple((doc_id, tuple(tokens)) for doc_id, tokens in documents if wanted.intersection(tokens))
        return cls(targets, candidates)


@dataclass(frozen=True)
class Pick:
    doc_id: str
    new_keywords: tuple[str, ...]
    weight: int
    text: str = ""


@dataclass(frozen=True)
class Summary:
    picks: tuple[Pick, ...] = ()
    uncovered: tuple[str, ...] = ()
    targets: tuple[str, ...] = field(default=())

    @property
    def covered(self) -> set[str]:
        return {kw for pick in self.picks for kw in pick.new_keywords}


def document_weight(tokens: Sequence[str], targets: Iterable[str]) -> int:
    """Total count of target-keyword occurrences in the document."""
    counts = Counter(tokens)
    return sum(counts[k] for k in set(targets))


def greedy_cover(instance: CoverInstance, rule: str = "default") -> Summary:
    """Greedy set cover of ``instance.targets``.

    ``default`` takes the document covering the most not-yet-covered
    keywords, preferring higher weight and then the smaller id.  ``literal``
    takes the document minimizing weight / newly-covered count with the same
    tie-breaks.
    """
    if rule not in COVER_RULES:
        raise ValueError(f"unknown cover rule {rule!r}")
    order = {k: i for i, k in enumerate(instance.targets)}
    pool = []
    for doc_id, tokens in instance.candidates:
        hits = frozenset(order.keys() & set(tokens))
        if hits:
            pool.append((doc_id, hits, document_weight(tokens, order)))

    uncovered = set(order)
    picks = []
    used: set[int] = set()
    while uncovered:
        best_key, best = None, None
        for idx, (doc_id, hits, weight) in enumerate(pool):
            if idx in used:
                continue
            gain = len(hits & uncovered)
            if not gain:
                continue
            if rule == "default":
                key = (-gain, -weight, doc_id)
            else:
                key = (Fraction(weight, gain), -weight, doc_id)
            if best_key is None or key < best_key:
                best_key, best = key, idx
        if best is None:
            break
        used.add(best)
        doc_id, hits, weight = pool[best]
        new = hits & uncovered
        uncovered -= new
        picks.append(Pick(doc_id, tuple(sorted(new, key=order.__getitem__)), weight))
    return Summary(tuple(picks), tuple(sorted(uncovered, key=order.__getitem__)), instance.targets)


def summarize_segment(keywords: Sequence[str], documents: Sequence[Document], rule: str = "default") -> Summary:
    """Cover ``keywords`` (already ranked) with this segment's documents; picks carry raw text."""
    if not keywords:
        return Summary()
    instance = CoverInstance.build(keywords, ((d.id, d.tokens) for d in documents))
    summary = greedy_cover(instance, rule)
    texts = {d.id: d.text for d in documents}
    picks = tuple(Pick(p.doc_id, p.new_keywords, p.weight, texts.get(p.doc_id, "")) for p in summary.picks)
    return Summary(picks, summary.uncovered, summary.targets)
