"""End-to-end segment processing: ingest, graph update, centralities, ranking, summary."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Protocol, Sequence

from .centrality import (
    ALL_MEASURES,
    DYNAMIC_MEASURES,
    CentralityVector,
    EigenConvergenceError,
    EigenSolveParams,
    HistoryBuffer,
    Measure,
    compute_base,
    dynamic,
    frequency_centrality,
    degree_centrality,
    parse_measure,
    rank_top_k,
)
from .graph import SemanticGraph, SnapshotError, decode_snapshot, encode_snapshot
from .ingest import (
    Document,
    NormalizationConfig,
    RawDocument,
    RejectedRecord,
    StreamReader,
    assign_segment,
    default_origin,
    to_document,
)
from .summarize import COVER_RULES, Summary, summarize_segment

log = logging.getLogger(__name__)

COUNTER_FIELDS = ("ingested", "dropped", "late", "malformed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    segment_width: int = 3600
    window_p: int = 5
    decay_k: int | None = None
    top_k: int = 20
    measures: tuple[Measure, ...] = ALL_MEASURES
    summary_measure: Measure = Measure.DYNAMIC_EIGENVECTOR
    cover_rule: str = "default"
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    eigen: EigenSolveParams = field(default_factory=EigenSolveParams)
    origin: int | None = None
    reorder_segments: int = 0
    snapshot_every: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "measures", tuple(parse_measure(m) for m in self.measures))
        object.__setattr__(self, "summary_measure", parse_measure(self.summary_measure))
        if self.window_p < 2:
            raise ConfigError("window P must be >= 2")
        if self.decay_k is not None and self.decay_k < 1:
            raise ConfigError("decay window K must be >= 1")
        if self.top_k < 1:
            raise ConfigError("top-k must be >= 1")
        if self.segment_width <= 0:
            raise ConfigError("segment width must be positive")
        if not self.measures:
            raise ConfigError("at least one measure must be active")
        if len(set(self.measures)) != len(self.measures):
            raise ConfigError("duplicate measures")
        if self.cover_rule not in COVER_RULES:
            raise ConfigError(f"cover rule must be one of {COVER_RULES}")
        if self.reorder_segments < 0:
            raise ConfigError("reorder buffer must be >= 0 segments")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ConfigError("snapshot interval must be >= 1")

    @property
    def K(self) -> int:
        return self.decay_k if self.decay_k is not None else max(self.window_p, 5)

    @property
    def P(self) -> int:
        return self.window_p


def fmt(x: float) -> float:
    """Round to 12 significant digits so serialized output is byte-stable."""
    return float(format(x, ".12g"))


@dataclass
class SegmentReport:
    segment: int
    start: int
    vectors: dict[Measure, CentralityVector]
    ranked: dict[Measure, list[tuple[str, float]]]
    summary: Summary
    summary_measure: Measure
    counters: dict[str, int] = field(default_factory=lambda: dict.fromkeys(COUNTER_FIELDS, 0))

    def to_json(self) -> dict:
        return {
            "segment": self.segment,
            "start": self.start,
            "counters": {k: self.counters.get(k, 0) for k in COUNTER_FIELDS},
            "top": {m.value: [[kw, fmt(s)] for kw, s in self.ranked[m]] for m in self.ranked},
            "scores": {m.value: {kw: fmt(s) for kw, s in sorted(v.scores.items())} for m, v in self.vectors.items()},
            "raw": {
                m.value: {kw: fmt(s) for kw, s in sorted(v.raw.items())}
                for m, v in self.vectors.items()
                if v.raw is not None
            },
        }

    def summary_json(self) -> dict:
        return {
            "segment": self.segment,
            "measure": self.summary_measure.value,
            "keywords": list(self.summary.targets),
            "picks": [
                {"doc_id": p.doc_id, "text": p.text, "new_keywords": list(p.new_keywords), "weight": p.weight}
                for p in self.summary.picks
            ],
            "uncovered": list(self.summary.uncovered),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SegmentReport":
        seg = obj["segment"]
        vectors = {}
        for name, scores in obj.get("scores", {}).items():
            m = Measure(name)
            raw = obj.get("raw", {}).get(name)
            vectors[m] = CentralityVector(seg, m, dict(scores), dict(raw) if raw is not None else None)
        ranked = {Measure(name): [(kw, s) for kw, s in top] for name, top in obj.get("top", {}).items()}
        return cls(seg, obj.get("start", 0), vectors, ranked, Summary(), Measure.DYNAMIC_EIGENVECTOR, dict(obj["counters"]))


def dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


class TrendEngine:
    """Graph, score histories and timeline position; folds one segment at a time."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.graph = SemanticGraph(config.K, max(config.K, config.P))
        self.history = HistoryBuffer(config.P)
        self.origin: int | None = config.origin
        self.next_segment = 0

    def process_segment(self, segment: int, documents: Sequence[Document], counters: dict | None = None) -> SegmentReport:
        cfg = self.config
        if segment != self.next_segment:
            raise ValueError(f"expected segment {self.next_segment}, got {segment}")
        self.graph.advance_segment(segment, documents)
        base = self._base_vectors(segment)
        self.history.push(base)
        vectors = dict(base)
        for m in DYNAMIC_MEASURES:
            vectors[m] = dynamic(m, self.history, base[m.base])
        ranked = {m: rank_top_k(vectors[m], cfg.top_k) for m in cfg.measures}
        targets = [kw for kw, _ in rank_top_k(vectors[cfg.summary_measure], cfg.top_k)]
        summary = summarize_segment(targets, documents, cfg.cover_rule)
        self.next_segment = segment + 1
        report_counters = dict.fromkeys(COUNTER_FIELDS, 0)
        report_counters.update(counters or {})
        start = (self.origin or 0) + segment * cfg.segment_width
        return SegmentReport(
            segment,
            start,
            {m: vectors[m] for m in cfg.measures},
            ranked,
            summary,
            cfg.summary_measure,
            report_counters,
        )

    def _base_vectors(self, segment: int) -> dict[Measure, CentralityVector]:
        try:
            return compute_base(self.graph, self.config.eigen, segment)
        except EigenConvergenceError as exc:
            log.warning("segment %d: %s; using last iterate", segment, exc)
            return {
                Measure.FREQUENCY: frequency_centrality(self.graph, segment),
                Measure.DEGREE: degree_centrality(self.graph, segment),
                Measure.EIGENVECTOR: exc.vector,
            }

    # -- persistence -------------------------------------------------------

    def snapshot(self) -> bytes:
        head = {
            "kind": "engine",
            "origin": self.origin,
            "next_segment": self.next_segment,
            "segment_width": self.config.segment_width,
            "window_p": self.config.P,
            "decay_k": self.config.K,
        }
        return encode_snapshot([head] + self.graph.to_records() + self.history.to_records())

    @classmethod
    def restore(cls, blob: bytes, config: PipelineConfig) -> "TrendEngine":
        records = decode_snapshot(blob)
        head = next((r for r in records if r.get("kind") == "engine"), None)
        if head is None:
            raise SnapshotError("snapshot holds no engine state (graph-only snapshot?)")
        for key, value in (("segment_width", config.segment_width), ("window_p", config.P), ("decay_k", config.K)):
            if head[key] != value:
                raise SnapshotError(f"snapshot was taken with {key}={head[key]}, config has {value}")
        engine = cls(config)
        engine.graph = SemanticGraph.from_records([r for r in records if r.get("kind") in ("graph", "edges", "freqs")])
        engine.history = HistoryBuffer.from_records(records)
        engine.origin = head["origin"]
        engine.next_segment = head["next_segment"]
        return engine


def process_segment(engine: TrendEngine, segment: int, documents: Sequence[Document]) -> SegmentReport:
    return engine.process_segment(segment, documents)


class Sink(Protocol):
    def write(self, report: SegmentReport) -> None: ...

    def snapshot(self, name: str, blob: bytes) -> None: ...

    def close(self) -> None: ...


class MemorySink:
    def __init__(self):
        self.reports: list[SegmentReport] = []
        self.report_lines: list[str] = []
        self.summary_lines: list[str] = []
        self.snapshots: dict[str, bytes] = {}

    def write(self, report: SegmentReport) -> None:
        self.reports.append(report)
        self.report_lines.append(dumps(report.to_json()))
        self.summary_lines.append(dumps(report.summary_json()))

    def snapshot(self, name: str, blob: bytes) -> None:
        self.snapshots[name] = blob

    def close(self) -> None:
        pass


TIMESERIES_HEADER = ("segment", "keyword", "measure", "score")


def timeseries_rows(reports: Iterable[dict], keywords: Iterable[str] | None = None, measures: Sequence[str] | None = None):
    """Yield ``(segment, keyword, measure, score)`` rows from report JSON objects.

    Without ``keywords``, every keyword that ever made a top list is used.
    A selected keyword gets a row in every segment (score 0 where absent).
    """
    reports = list(reports)
    if keywords is None:
        chosen: set[str] = set()
        for rep in reports:
            for top in rep["top"].values():
                chosen.update(kw for kw, _ in top)
    else:
        wanted = set(keywords)
        chosen = {kw for rep in reports for scores in rep["scores"].values() for kw in scores if kw in wanted}
    for rep in reports:
        names = [m for m in rep["scores"] if measures is None or m in measures]
        for kw in sorted(chosen):
            for m in names:
                yield rep["segment"], kw, m, rep["scores"][m].get(kw, 0.0)


def write_timeseries(rows, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TIMESERIES_HEADER)
    for seg, kw, m, score in rows:
        writer.writerow((seg, kw, m, format(float(score), ".12g")))


class DirectorySink:
    """Writes reports.jsonl, summaries.jsonl, timeseries.csv and snapshots into a directory."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._reports = open(self.out_dir / "reports.jsonl", "w", encoding="utf-8", newline="\n")
        self._summaries = open(self.out_dir / "summaries.jsonl", "w", encoding="utf-8", newline="\n")
        self._objs: list[dict] = []

    def write(self, report: SegmentReport) -> None:
        obj = report.to_json()
        self._objs.append(obj)
        self._reports.write(dumps(obj) + "\n")
        self._summaries.write(dumps(report.summary_json()) + "\n")

    def snapshot(self, name: str, blob: bytes) -> None:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)

    def close(self) -> None:
        self._reports.close()
        self._summaries.close()
        with open(self.out_dir / "timeseries.csv", "w", encoding="utf-8", newline="") as fh:
            write_timeseries(timeseries_rows(self._objs), fh)


class StreamRunner:
    """Assigns records to segments and emits reports as segments close.

    A segment closes once a record more than ``reorder_segments`` segments
    newer has been seen.  Records for closed segments are counted as late.
    When resuming, records for segments the snapshot already covers are
    skipped as replay until the first record past that point.
    """

    def __init__(self, engine: TrendEngine, resumed: bool = False):
        self.engine = engine
        self.config = engine.config
        self.pending: dict[int, list[Document]] = {}
        self.counters: dict[int, Counter] = {}
        self.max_seen: int | None = None
        self.orphan_malformed = 0
        self.replaying = resumed
        self.totals: Counter = Counter()

    def _bucket(self, segment: int) -> Counter:
        return self.counters.setdefault(segment, Counter())

    def malformed(self, n: int = 1) -> None:
        self.totals["malformed"] += n
        if self.replaying:
            self.totals["replayed"] += n
            self.totals["malformed"] -= n
        elif self.max_seen is None:
            self.orphan_malformed += n
        else:
            self._bucket(self.max_seen)["malformed"] += n

    def feed(self, raw: RawDocument) -> Iterator[SegmentReport]:
        cfg, engine = self.config, self.engine
        if engine.origin is None:
            engine.origin = default_origin(raw.timestamp, cfg.segment_width)
        try:
            segment = assign_segment(raw.timestamp, engine.origin, cfg.segment_width, raw.id)
        except RejectedRecord as exc:
            log.info("%s", exc)
            segment = -1
        if segment < engine.next_segment:
            if self.replaying and segment >= 0:
                self.totals["replayed"] += 1
            else:
                self._late(raw)
            return iter(())
        self.replaying = False
        if self.max_seen is None:
            self._bucket(segment)["malformed"] += self.orphan_malformed
            self.orphan_malformed = 0
        if self.max_seen is None or segment > self.max_seen:
            self.max_seen = segment
        doc = to_document(raw, segment, cfg.normalization)
        if doc is None:
            self._bucket(segment)["dropped"] += 1
            self.totals["dropped"] += 1
        else:
            self.pending.setdefault(segment, []).append(doc)
            self._bucket(segment)["ingested"] += 1
            self.totals["ingested"] += 1
        return self._flush(self.max_seen - cfg.reorder_segments)

    def _late(self, raw: RawDocument) -> None:
        self.totals["dropped"] += 1
        self.totals["late"] += 1
        if self.max_seen is None:
            return
        bucket = self._bucket(self.max_seen)
        bucket["dropped"] += 1
        bucket["late"] += 1

    def _flush(self, upto: int) -> Iterator[SegmentReport]:
        """Close every segment strictly before ``upto``.

        Lazy, so a consumer that stops early leaves later segments unprocessed.
        """
        while self.engine.next_segment < upto:
            seg = self.engine.next_segment
            docs = self.pending.pop(seg, [])
            counts = self.counters.pop(seg, Counter())
            yield self.engine.process_segment(seg, docs, dict(counts))

    def finish(self) -> Iterator[SegmentReport]:
        if self.max_seen is None:
            return iter(())
        return self._flush(self.max_seen + 1)


@dataclass
class RunResult:
    status: str
    engine: TrendEngine
    reports: int
    totals: dict[str, int]

    @property
    def graph(self) -> SemanticGraph:
        return self.engine.graph


def run(
    config: PipelineConfig,
    source: BinaryIO | Iterable[bytes],
    sinks: Sequence[Sink] = (),
    resume: bytes | None = None,
    stop_after: int | None = None,
) -> RunResult:
    """Process a whole stream.  ``stop_after`` ends the run once that segment is reported."""
    engine = TrendEngine.restore(resume, config) if resume is not None else TrendEngine(config)
    runner = StreamRunner(engine, resumed=resume is not None)
    reader = StreamReader(source)
    emitted = 0
    stopped = False

    def emit(reports: Iterable[SegmentReport]) -> bool:
        nonlocal emitted
        for report in reports:
            for sink in sinks:
                sink.write(report)
            emitted += 1
            every = config.snapshot_every
            if every and (report.segment + 1) % every == 0:
                blob = engine.snapshot()
                for sink in sinks:
                    sink.snapshot(f"snapshots/segment-{report.segment:06d}.snapshot", blob)
            if stop_after is not None and report.segment >= stop_after:
                return True
        return False

    malformed_seen = 0
    for raw in reader:
        if reader.malformed > malformed_seen:
            runner.malformed(reader.malformed - malformed_seen)
            malformed_seen = reader.malformed
        if emit(runner.feed(raw)):
            stopped = True
            break
    if not stopped:
        if reader.malformed > malformed_seen:
            runner.malformed(reader.malformed - malformed_seen)
        emit(runner.finish())
    totals = dict(runner.totals)
    totals["lines"] = reader.lines
    for key in ("ingested", "dropped", "late", "malformed", "replayed"):
        totals.setdefault(key, 0)
    blob = engine.snapshot()
    for sink in sinks:
        sink.snapshot("graph.snapshot", blob)
        sink.close()
    return RunResult("stopped" if stopped else "ok", engine, emitted, totals)


def read_reports(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_reports(path: str | Path) -> list[SegmentReport]:
    return [SegmentReport.from_json(obj) for obj in read_reports(path)]
