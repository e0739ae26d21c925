"""Reading a timestamped document stream and normalizing text into keyword tokens."""

from __future__ import annotations

import html
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

log = logging.getLogger(__name__)

# Deliberately excludes tweet-speak such as "rt" and "ha": those survive into keyword sets.
DEFAULT_STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are aren't as at be because been
    before being below between both but by can can't cannot could couldn't did didn't do
    does doesn't doing don't down during each few for from further had hadn't has hasn't
    have haven't having he he'd he'll he's her here here's hers herself him himself his how
    how's i i'd i'll i'm i've if in into is isn't it it's its itself let's me more most
    mustn't my myself no nor not of off on once only or other ought our ours ourselves out
    over own same shan't she she'd she'll she's should shouldn't so some such than that
    that's the their theirs them themselves then there there's these they they'd they'll
    they're they've this those through to too under until up very was wasn't we we'd we'll
    we're we've were weren't what what's when when's where where's which while who who's
    whom why why's will with won't would wouldn't you you'd you'll you're you've your yours
    yourself yourselves just also via amp s t im dont cant wont
    """.split()
)

# (suffix, replacement, undo_doubling); tried longest suffix first, at most one applies.
DEFAULT_SUFFIX_RULES: tuple[tuple[str, str, bool], ...] = (
    ("sses", "ss", False),
    ("ies", "y", False),
    ("ing", "", True),
    ("es", "", False),
    ("ed", "", True),
    ("s", "", False),
)

# A plain "-s" is not stripped after these endings (boss, bus, analysis, ...).
_KEEP_S_AFTER = ("s", "u", "i")
# Doubled final consonants that are legitimate after suffix removal (fall, miss, buzz).
_KEEP_DOUBLE = frozenset("lsz")
_VOWELS = frozenset("aeiouy")
_MIN_STEM = 3

_URL_RE = re.compile(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S*")
_TAG_RE = re.compile(r"<[^<>]*>")
_PLAIN_WORD_RE = re.compile(r"[a-z]+")


class RejectedRecord(ValueError):
    """A record that cannot be placed on the stream timeline."""

    def __init__(self, doc_id: str, message: str):
        super().__init__(f"record {doc_id!r}: {message}")
        self.doc_id = doc_id


@dataclass(frozen=True)
class RawDocument:
    id: str
    timestamp: int
    text: str


@dataclass(frozen=True)
class Document:
    id: str
    segment: int
    tokens: tuple[str, ...]
    text: str = ""


@dataclass(frozen=True)
class NormalizationConfig:
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    remove_urls: bool = True
    remove_numbers: bool = True
    suffix_rules: tuple[tuple[str, str, bool], ...] = DEFAULT_SUFFIX_RULES
    # Minimum fraction of ASCII letters; None disables the filter.
    english_threshold: float | None = None

    def __post_init__(self):
        if self.english_threshold is not None and not 0.0 <= self.english_threshold <= 1.0:
            raise ValueError("english_threshold must lie in [0, 1]")
        ordered = tuple(sorted(self.suffix_rules, key=lambda r: -len(r[0])))
        object.__setattr__(self, "suffix_rules", ordered)
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One word per line; blank lines and ``#`` comments ignored."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


def _rewrite(token: str, rules) -> str | None:
    if not _PLAIN_WORD_RE.fullmatch(token):
        return None
    for suffix, replacement, undo_doubling in rules:
        if not token.endswith(suffix):
            continue
        stem = token[: len(token) - len(suffix)]
        if suffix == "s" and stem.endswith(_KEEP_S_AFTER):
            return None
        if len(stem) < _MIN_STEM or not _VOWELS.intersection(stem):
            return None
        if undo_doubling and len(stem) > _MIN_STEM and stem[-1] == stem[-2] and stem[-1] not in _KEEP_DOUBLE | _VOWELS:
            stem = stem[:-1]
        return stem + replacement
    return None


def lemmatize(token: str, rules=DEFAULT_SUFFIX_RULES) -> str:
    """Apply at most one suffix rule.

    A rewrite is only accepted when its result is itself rule-free, which
    keeps lemmatization idempotent (``breeding`` stays put rather than
    collapsing to ``breed`` and then ``bre`` on a second pass).
    """
    rewritten = _rewrite(token, rules)
    if rewritten is None or _rewrite(rewritten, rules) is not None:
        return token
    return rewritten


def _clean_chars(text: str, remove_numbers: bool) -> str:
    out = []
    for ch in text:
        if ch.isdigit():
            out.append(" " if remove_numbers else ch)
        elif ch.isalpha() or ch in "'#":
            out.append(ch)
        else:
            out.append(" ")
    return "".join(out)


def normalize(text: str, config: NormalizationConfig | None = None) -> list[str]:
    config = config or NormalizationConfig()
    text = text.lower()
    text = html.unescape(text).lower()
    text = _TAG_RE.sub(" ", text)
    if config.remove_urls:
        text = _URL_RE.sub(" ", text)
    text = _clean_chars(text, config.remove_numbers)
    tokens = []
    for raw in text.split():
        token = raw.strip("'#")
        if not token or token in config.stopwords:
            continue
        if config.suffix_rules:
            token = lemmatize(token, config.suffix_rules)
        if token in config.stopwords:
            continue
        tokens.append(token)
    return tokens


def ascii_letter_ratio(text: str) -> float:
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        return 1.0
    return sum(ch.isascii() for ch in letters) / len(letters)


def passes_english_filter(text: str, config: NormalizationConfig) -> bool:
    if config.english_threshold is None:
        return True
    return ascii_letter_ratio(text) >= config.english_threshold


def assign_segment(timestamp: int, origin: int, width: int, doc_id: str = "?") -> int:
    if width <= 0:
        raise ValueError("segment width must be positive")
    if timestamp < origin:
        raise RejectedRecord(doc_id, f"timestamp {timestamp} precedes stream origin {origin}")
    return (timestamp - origin) // width


def default_origin(first_timestamp: int, width: int) -> int:
    """Align the origin to a whole multiple of the width (clock hours for 3600)."""
    return first_timestamp - first_timestamp % width


def parse_record(line: str) -> RawDocument:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    doc_id, ts, text = obj.get("id"), obj.get("timestamp"), obj.get("text")
    if not isinstance(doc_id, str) or not doc_id:
        raise ValueError("missing or empty string field 'id'")
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise ValueError("missing or non-integer field 'timestamp'")
    if not isinstance(text, str):
        raise ValueError("missing string field 'text'")
    return RawDocument(doc_id, ts, text)


@dataclass
class StreamReader:
    """Sequential reader over line-delimited JSON records.

    Blank lines and ``#`` comment lines are not records and are not counted.
    For every other line exactly one of ``emitted``/``malformed`` is bumped.
    """

    source: BinaryIO | Iterable[bytes]
    lines: int = 0
    emitted: int = 0
    malformed: int = 0
    warnings: list[str] = field(default_factory=list)

    def __iter__(self) -> Iterator[RawDocument]:
        for lineno, raw in enumerate(self.source, start=1):
            line = raw.decode("utf-8", errors="replace") if isinstance(raw, bytes) else raw
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            self.lines += 1
            try:
                doc = parse_record(stripped)
            except ValueError as exc:
                self.malformed += 1
                msg = f"line {lineno}: {exc}"
                self.warnings.append(msg)
                log.warning("skipping malformed record, %s", msg)
                continue
            self.emitted += 1
            yield doc


def read_stream(source: BinaryIO | Iterable[bytes]) -> StreamReader:
    return StreamReader(source)


def open_stream(path: str | Path) -> StreamReader:
    """Open a file for reading; an unreadable path raises ``OSError``."""
    return StreamReader(open(path, "rb"))


def to_document(raw: RawDocument, segment: int, config: NormalizationConfig) -> Document | None:
    """Normalize a record, returning None if it is filtered out or has no tokens."""
    if not passes_english_filter(raw.text, config):
        return None
    tokens = normalize(raw.text, config)
    if not tokens:
        return None
    return Document(raw.id, segment, tuple(tokens), raw.text)
