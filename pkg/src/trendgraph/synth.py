"""Synthetic document streams with planted keyword bursts."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterator, Sequence, TextIO

import numpy as np

from .ingest import NormalizationConfig, RawDocument, normalize

DEFAULT_START = 1366027200  # 2013-04-15 12:00 UTC, on an hour boundary
COMPANIONS_PER_EVENT = 3
COMPANION_PROBABILITY = 0.5

_CONSONANTS = "bcdfghjklmnprtvwz"
_VOWELS = "aeiou"
_EVENT_RE = re.compile(r"^([^@\s]+)@(\d+):(\d+):([0-9.eE+-]+)$")


@dataclass(frozen=True)
class PlantedEvent:
    keyword: str
    onset: int
    duration: int
    intensity: float

    @classmethod
    def parse(cls, spec: str) -> "PlantedEvent":
        """Parse ``keyword@onset:duration:intensity``."""
        m = _EVENT_RE.match(spec.strip())
        if not m:
            raise ValueError(f"malformed event spec {spec!r}, expected keyword@onset:duration:intensity")
        try:
            intensity = float(m.group(4))
        except ValueError:
            raise ValueError(f"malformed intensity in event spec {spec!r}") from None
        event = cls(m.group(1), int(m.group(2)), int(m.group(3)), intensity)
        event.check()
        return event

    def check(self, segments: int | None = None) -> None:
        if self.duration < 1:
            raise ValueError(f"event {self.keyword!r}: duration must be >= 1")
        if not 0 < self.intensity <= 1:
            raise ValueError(f"event {self.keyword!r}: intensity must lie in (0, 1]")
        if normalize(self.keyword) != [self.keyword]:
            raise ValueError(f"event keyword {self.keyword!r} does not survive normalization unchanged")
        if segments is not None and self.onset + self.duration > segments:
            raise ValueError(f"event {self.keyword!r} runs past the last segment ({segments})")

    @property
    def end(self) -> int:
        """Last segment in which the keyword is injected."""
        return self.onset + self.duration - 1

    def __str__(self) -> str:
        return f"{self.keyword}@{self.onset}:{self.duration}:{self.intensity:g}"


def pseudo_words(rng: np.random.Generator, count: int, exclude: set[str] = frozenset()) -> list[str]:
    """Pronounceable vowel-final words that normalize to themselves."""
    config = NormalizationConfig()
    words: list[str] = []
    seen = set(exclude)
    while len(words) < count:
        syllables = int(rng.integers(2, 5))
        word = "".join(
            _CONSONANTS[int(rng.integers(len(_CONSONANTS)))] + _VOWELS[int(rng.integers(len(_VOWELS)))]
            for _ in range(syllables)
        )
        if word in seen or normalize(word, config) != [word]:
            continue
        seen.add(word)
        words.append(word)
    return words


def zipf_probabilities(size: int, exponent: float) -> np.ndarray:
    weights = np.arange(1, size + 1, dtype=float) ** -exponent
    return weights / weights.sum()


def generate(
    vocab_size: int = 2000,
    docs_per_segment: int = 200,
    segments: int = 60,
    zipf: float = 1.1,
    seed: int = 0,
    events: Sequence[PlantedEvent] = (),
    doc_length: tuple[int, int] = (2, 3),
    segment_width: int = 3600,
    start: int = DEFAULT_START,
) -> Iterator[RawDocument]:
    """Yield documents in timestamp order.

    Each document holds ``doc_length`` distinct background words drawn from a
    Zipf law over the vocabulary.  While an event is active its keyword is
    appended to ``intensity`` of the segment's documents, each time joined by
    each of its companion words with probability one half.
    """
    lo, hi = doc_length
    if vocab_size < hi:
        raise ValueError("vocabulary smaller than the document length")
    if not 1 <= lo <= hi:
        raise ValueError("document length range must satisfy 1 <= min <= max")
    if docs_per_segment < 1 or segments < 1 or segment_width < 1:
        raise ValueError("docs per segment, segments and width must be positive")
    for event in events:
        event.check(segments)
    if len({e.keyword for e in events}) != len(events):
        raise ValueError("planted keywords must be distinct")

    rng = np.random.default_rng(seed)
    planted = {e.keyword for e in events}
    vocab = pseudo_words(rng, vocab_size, planted)
    companion_words = pseudo_words(rng, COMPANIONS_PER_EVENT * len(events), planted | set(vocab))
    companions = {
        e.keyword: companion_words[i * COMPANIONS_PER_EVENT : (i + 1) * COMPANIONS_PER_EVENT]
        for i, e in enumerate(events)
    }
    cdf = np.cumsum(zipf_probabilities(vocab_size, zipf))
    cdf[-1] = 1.0

    for seg in range(segments):
        lengths = rng.integers(lo, hi + 1, size=docs_per_segment)
        draws = iter(np.searchsorted(cdf, rng.random(int(lengths.sum()) * 4), side="right").tolist())
        docs: list[list[str]] = []
        for length in lengths:
            picked: list[int] = []
            while len(picked) < length:
                idx = next(draws, None)
                if idx is None:
                    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
                if idx not in picked:
                    picked.append(idx)
            docs.append([vocab[i] for i in picked])
        for event in events:
            if event.onset <= seg <= event.end:
                n = int(round(event.intensity * docs_per_segment))
                for j in sorted(rng.choice(docs_per_segment, size=n, replace=False).tolist()):
                    docs[j].append(event.keyword)
                    for word in companions[event.keyword]:
                        if rng.random() < COMPANION_PROBABILITY:
                            docs[j].append(word)
        offsets = np.sort(rng.integers(0, segment_width, size=docs_per_segment))
        base = start + seg * segment_width
        for i, (offset, tokens) in enumerate(zip(offsets.tolist(), docs)):
            yield RawDocument(f"s{seg:04d}-{i:05d}", base + offset, " ".join(tokens))


def write_stream(documents, out: TextIO) -> int:
    n = 0
    for doc in documents:
        out.write(json.dumps({"id": doc.id, "timestamp": doc.timestamp, "text": doc.text}, separators=(",", ":")) + "\n")
        n += 1
    return n
