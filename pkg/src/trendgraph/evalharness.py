"""Scoring detector output against planted ground-truth events."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .centrality import ALL_MEASURES, Measure, rank_top_k
from .pipeline import SegmentReport


@dataclass(frozen=True)
class GroundTruthEvent:
    keyword: str
    onset: int
    duration: int
    intensity: float = 1.0

    @property
    def end(self) -> int:
        return self.onset + self.duration - 1

    def check(self, window_p: int) -> None:
        if self.onset < window_p:
            raise ValueError(f"event {self.keyword!r}: onset {self.onset} precedes a full history (P={window_p})")
        if self.duration < 1:
            raise ValueError(f"event {self.keyword!r}: duration must be >= 1")
        if not 0 < self.intensity <= 1:
            raise ValueError(f"event {self.keyword!r}: intensity must lie in (0, 1]")


@dataclass(frozen=True)
class Detection:
    keyword: str
    measure: Measure
    # None stands for "never", i.e. an infinite latency or no return to zero.
    latency: int | None
    peak: float
    segments_to_zero: int | None

    @property
    def missed(self) -> bool:
        return self.latency is None


def evaluate(
    reports: Sequence[SegmentReport],
    events: Sequence[GroundTruthEvent],
    k: int = 20,
    measures: Sequence[Measure] | None = None,
    window_p: int | None = None,
) -> list[Detection]:
    """One row per (event, measure).

    latency: segments from onset until the keyword is first in the measure's
    top ``k``.  peak: highest score during the event.  segments_to_zero:
    segments from the event's last active segment until the score is 0.
    """
    by_segment = {r.segment: r for r in reports}
    if not by_segment:
        raise ValueError("no reports to evaluate")
    first, last = min(by_segment), max(by_segment)
    if measures is None:
        present = {m for r in reports for m in r.vectors}
        measures = [m for m in ALL_MEASURES if m in present]
    rows = []
    for event in events:
        if window_p is not None:
            event.check(window_p)
        if event.onset < first or event.end > last:
            raise ValueError(f"event {event.keyword!r} ({event.onset}..{event.end}) outside reports {first}..{last}")
        for measure in measures:
            rows.append(_score_event(by_segment, last, event, Measure(measure), k))
    return rows


def _score(report: SegmentReport | None, measure: Measure, keyword: str) -> float:
    if report is None or measure not in report.vectors:
        return 0.0
    return report.vectors[measure].get(keyword)


def _score_event(by_segment, last: int, event: GroundTruthEvent, measure: Measure, k: int) -> Detection:
    latency = None
    for seg in range(event.onset, last + 1):
        report = by_segment.get(seg)
        if report is not None and measure in report.vectors:
            if any(kw == event.keyword for kw, _ in rank_top_k(report.vectors[measure], k)):
                latency = seg - event.onset
                break
    peak = max(_score(by_segment.get(s), measure, event.keyword) for s in range(event.onset, event.end + 1))
    to_zero = None
    for seg in range(event.end, last + 1):
        if _score(by_segment.get(seg), measure, event.keyword) == 0:
            to_zero = seg - event.end
            break
    return Detection(event.keyword, measure, latency, peak, to_zero)


def background_threshold(
    reports: Sequence[SegmentReport],
    measure: Measure = Measure.DYNAMIC_EIGENVECTOR,
    q: float = 0.999,
    skip: int = 0,
) -> float:
    """Upper ``q`` quantile of positive raw scores, ignoring segments below ``skip``.

    Pass ``skip=P``: before P segments exist the zero padding makes every
    keyword look like it is rising.
    """
    if not 0 < q <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    values = [v for r in reports if r.segment >= skip for v in _raw(r, measure).values() if v > 0]
    if not values:
        return 0.0
    return float(np.quantile(values, q))


def peak_raw(reports: Sequence[SegmentReport], measure: Measure, keyword: str | None = None, skip: int = 0) -> float:
    """Largest raw score of ``keyword`` (or of any keyword) at segments >= ``skip``."""
    best = 0.0
    for r in reports:
        if r.segment < skip:
            continue
        raw = _raw(r, measure)
        if keyword is None:
            best = max([best, *raw.values()])
        else:
            best = max(best, raw.get(keyword, 0.0))
    return best


def _raw(report: SegmentReport, measure: Measure) -> dict[str, float]:
    """Unclamped values for dynamic measures, plain scores otherwise."""
    vector = report.vectors.get(measure)
    if vector is None:
        return {}
    return vector.raw if vector.raw is not None else vector.scores


DETECTIONS_HEADER = ("event_keyword", "measure", "latency", "peak", "segments_to_zero")


def write_detections(rows: Sequence[Detection], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DETECTIONS_HEADER)
    for row in rows:
        writer.writerow(
            (
                row.keyword,
                row.measure.value,
                "missed" if row.latency is None else row.latency,
                format(row.peak, ".12g"),
                "inf" if row.segments_to_zero is None else row.segments_to_zero,
            )
        )


def as_number(value: int | None) -> float:
    return math.inf if value is None else float(value)
