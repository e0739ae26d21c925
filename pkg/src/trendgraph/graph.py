"""Keyword co-occurrence graph over a sliding window of time segments.

Contributions are kept per segment in two rings: one of pair counts (length
``decay``) and one of token counts (length ``freq_window``).  Stepping to a
new segment evicts the oldest slot from each ring and subtracts it from the
running totals, so an edge weight is always the number of documents in the
last ``decay`` segments in which both keywords appear.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter, deque
from itertools import combinations
from typing import Iterable, Sequence

from .ingest import Document

SNAPSHOT_MAGIC = "TRENDGRAPH-SNAPSHOT v1"

Pair = tuple[str, str]


class OutOfOrderSegment(ValueError):
    pass


class SnapshotError(ValueError):
    pass


def edge_key(a: str, b: str) -> Pair:
    return (a, b) if a < b else (b, a)


class SemanticGraph:
    def __init__(self, decay: int, freq_window: int | None = None):
        if decay < 1:
            raise ValueError("decay window K must be >= 1")
        freq_window = decay if freq_window is None else freq_window
        if freq_window < decay:
            raise ValueError("frequency window must be at least the decay window")
        self.decay = decay
        self.freq_window = freq_window
        self.current_segment: int | None = None
        self._edge_slots: deque[Counter] = deque()
        self._freq_slots: deque[Counter] = deque()
        self._weights: dict[Pair, int] = {}
        self._adjacency: dict[str, dict[str, int]] = {}
        self._degree: dict[str, int] = {}
        self._freq_total: dict[str, int] = {}

    # -- updates -----------------------------------------------------------

    def advance_segment(self, segment: int, documents: Sequence[Document] = ()) -> "SemanticGraph":
        """Step the window forward to ``segment`` and add its documents.

        Segments skipped over are processed as empty ones.
        """
        if self.current_segment is not None and segment <= self.current_segment:
            raise OutOfOrderSegment(
                f"segment {segment} is not after current segment {self.current_segment}"
            )
        for doc in documents:
            if doc.segment != segment:
                raise ValueError(f"document {doc.id!r} belongs to segment {doc.segment}, not {segment}")
        if self.current_segment is not None:
            gap = segment - self.current_segment - 1
            if gap >= self.freq_window:
                self._clear()
            else:
                for _ in range(gap):
                    self._step(())
        self._step(documents)
        self.current_segment = segment
        return self

    def _clear(self) -> None:
        self._edge_slots.clear()
        self._freq_slots.clear()
        self._weights.clear()
        self._adjacency.clear()
        self._degree.clear()
        self._freq_total.clear()

    def _step(self, documents: Iterable[Document]) -> None:
        pairs: Counter = Counter()
        freqs: Counter = Counter()
        for doc in documents:
            freqs.update(doc.tokens)
            pairs.update(combinations(sorted(set(doc.tokens)), 2))

        touched: set[str] = set()
        if len(self._edge_slots) == self.decay:
            for pair, n in self._edge_slots.popleft().items():
                self._add_edge(pair, -n)
                touched.update(pair)
        if len(self._freq_slots) == self.freq_window:
            for word, n in self._freq_slots.popleft().items():
                left = self._freq_total[word] - n
                if left:
                    self._freq_total[word] = left
                else:
                    del self._freq_total[word]
                touched.add(word)

        for pair, n in pairs.items():
            self._add_edge(pair, n)
        for word, n in freqs.items():
            self._freq_total[word] = self._freq_total.get(word, 0) + n
        self._edge_slots.append(pairs)
        self._freq_slots.append(freqs)

        for word in touched:
            if word not in self._degree and word not in self._freq_total:
                self._adjacency.pop(word, None)

    def _add_edge(self, pair: Pair, n: int) -> None:
        a, b = pair
        w = self._weights.get(pair, 0) + n
        if w:
            self._weights[pair] = w
            self._adjacency.setdefault(a, {})[b] = w
            self._adjacency.setdefault(b, {})[a] = w
        else:
            del self._weights[pair]
            del self._adjacency[a][b]
            del self._adjacency[b][a]
        for node in pair:
            d = self._degree.get(node, 0) + n
            if d:
                self._degree[node] = d
            else:
                del self._degree[node]

    # -- queries -----------------------------------------------------------

    @property
    def nodes(self) -> list[str]:
        return sorted(self._degree.keys() | self._freq_total.keys())

    @property
    def edges(self) -> dict[Pair, int]:
        return dict(sorted(self._weights.items()))

    def __len__(self) -> int:
        return len(self._degree.keys() | self._freq_total.keys())

    def __contains__(self, keyword: str) -> bool:
        return keyword in self._degree or keyword in self._freq_total

    def weight(self, a: str, b: str) -> int:
        return self._weights.get(edge_key(a, b), 0)

    def neighbors(self, keyword: str) -> dict[str, int]:
        return dict(self._adjacency.get(keyword, {}))

    def weighted_degree(self, keyword: str) -> int:
        return self._degree.get(keyword, 0)

    def degrees(self) -> dict[str, int]:
        return dict(self._degree)

    def segment_frequency(self, keyword: str) -> int:
        if not self._freq_slots:
            return 0
        return self._freq_slots[-1].get(keyword, 0)

    def frequencies(self) -> dict[str, int]:
        """Token counts of the current segment."""
        return dict(self._freq_slots[-1]) if self._freq_slots else {}

    def frequency_buffer(self, keyword: str) -> tuple[int, ...]:
        """Per-segment counts, oldest first, padded to ``freq_window``."""
        counts = [slot.get(keyword, 0) for slot in self._freq_slots]
        return (0,) * (self.freq_window - len(counts)) + tuple(counts)

    def edge_buffer(self, a: str, b: str) -> tuple[int, ...]:
        pair = edge_key(a, b)
        counts = [slot.get(pair, 0) for slot in self._edge_slots]
        return (0,) * (self.decay - len(counts)) + tuple(counts)

    def adjacency_arrays(self):
        """Sorted node list plus COO triples (rows, cols, weights), each edge once.

        Edges come out in sorted order so that floating-point sums downstream do
        not depend on the history that produced the graph.
        """
        keys = sorted(self._degree)
        index = {k: i for i, k in enumerate(keys)}
        rows, cols, vals = [], [], []
        for (a, b), w in sorted(self._weights.items()):
            rows.append(index[a])
            cols.append(index[b])
            vals.append(w)
        return keys, rows, cols, vals

    def state(self) -> dict:
        """Comparable view of everything observable about the graph."""
        return {
            "nodes": self.nodes,
            "edges": self.edges,
            "frequency_buffers": {k: self.frequency_buffer(k) for k in self.nodes},
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SemanticGraph):
            return NotImplemented
        return (
            self.decay == other.decay
            and self.freq_window == other.freq_window
            and self.current_segment == other.current_segment
            and self.state() == other.state()
        )

    # -- persistence -------------------------------------------------------

    def to_records(self) -> list[dict]:
        records = [
            {
                "kind": "graph",
                "decay": self.decay,
                "freq_window": self.freq_window,
                "segment": self.current_segment,
                "edge_slots": len(self._edge_slots),
                "freq_slots": len(self._freq_slots),
            }
        ]
        for i, slot in enumerate(self._edge_slots):
            records.append({"kind": "edges", "slot": i, "counts": [[a, b, n] for (a, b), n in sorted(slot.items())]})
        for i, slot in enumerate(self._freq_slots):
            records.append({"kind": "freqs", "slot": i, "counts": [[w, n] for w, n in sorted(slot.items())]})
        return records

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "SemanticGraph":
        try:
            head = records[0]
            if head.get("kind") != "graph":
                raise SnapshotError("graph header record missing")
            graph = cls(head["decay"], head["freq_window"])
            edge_slots: list[Counter] = []
            freq_slots: list[Counter] = []
            for rec in records[1:]:
                if rec["kind"] == "edges":
                    edge_slots.append(Counter({(a, b): n for a, b, n in rec["counts"]}))
                elif rec["kind"] == "freqs":
                    freq_slots.append(Counter({w: n for w, n in rec["counts"]}))
            if len(edge_slots) != head["edge_slots"] or len(freq_slots) != head["freq_slots"]:
                raise SnapshotError("slot count mismatch")
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, SnapshotError):
                raise
            raise SnapshotError(f"malformed graph records: {exc}") from exc
        for slot in edge_slots:
            for pair, n in slot.items():
                graph._add_edge(pair, n)
        for slot in freq_slots:
            for word, n in slot.items():
                graph._freq_total[word] = graph._freq_total.get(word, 0) + n
        graph._edge_slots.extend(edge_slots)
        graph._freq_slots.extend(freq_slots)
        graph.current_segment = head["segment"]
        return graph


def encode_snapshot(records: Sequence[dict]) -> bytes:
    """Magic header, one JSON record per line, then a count/checksum trailer."""
    body = "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    trailer = json.dumps({"kind": "end", "records": len(records), "sha256": digest}, sort_keys=True, separators=(",", ":"))
    return (SNAPSHOT_MAGIC + "\n" + body + trailer + "\n").encode("utf-8")


def decode_snapshot(blob: bytes) -> list[dict]:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SnapshotError("snapshot is not valid UTF-8") from exc
    lines = text.split("\n")
    if not lines or lines[0] != SNAPSHOT_MAGIC:
        found = lines[0][:40] if lines else ""
        raise SnapshotError(f"bad snapshot header {found!r}, expected {SNAPSHOT_MAGIC!r}")
    if len(lines) < 3 or lines[-1] != "":
        raise SnapshotError("snapshot truncated")
    try:
        trailer = json.loads(lines[-2])
        body_lines = lines[1:-2]
        records = [json.loads(line) for line in body_lines]
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"snapshot corrupted: {exc}") from exc
    if not isinstance(trailer, dict) or trailer.get("kind") != "end":
        raise SnapshotError("snapshot truncated (no trailer)")
    body = "".join(line + "\n" for line in body_lines)
    if trailer.get("records") != len(records) or trailer.get("sha256") != hashlib.sha256(body.encode("utf-8")).hexdigest():
        raise SnapshotError("snapshot checksum mismatch")
    return records


def snapshot(graph: SemanticGraph) -> bytes:
    return encode_snapshot(graph.to_records())


def restore(blob: bytes) -> SemanticGraph:
    records = decode_snapshot(blob)
    return SemanticGraph.from_records([r for r in records if r.get("kind") in ("graph", "edges", "freqs")])
