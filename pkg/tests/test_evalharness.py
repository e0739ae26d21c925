import io
import math

import pytest

from conftest import ACCEPTANCE_EVENTS, run_bytes, synth_bytes
from trendgraph.centrality import CentralityVector, Measure
from trendgraph.evalharness import (
    Detection,
    GroundTruthEvent,
    as_number,
    background_threshold,
    evaluate,
    peak_raw,
    write_detections,
)
from trendgraph.pipeline import PipelineConfig, SegmentReport, TrendEngine
from trendgraph.ingest import Document
from trendgraph.summarize import Summary

DEC = Measure.DYNAMIC_EIGENVECTOR


def reports_from(series):
    """One report per segment; ``series`` maps measure -> list of {keyword: score}."""
    length = len(next(iter(series.values())))
    out = []
    for seg in range(length):
        vectors = {m: CentralityVector(seg, m, rows[seg]) for m, rows in series.items()}
        out.append(SegmentReport(seg, 0, vectors, {}, Summary(), DEC))
    return out


def test_latency_zero_and_missed():
    rows = [{}] * 5 + [{"boom": 1.0, "x": 0.5}, {"boom": 0.2}, {}]
    reports = reports_from({DEC: rows, Measure.FREQUENCY: [{"x": 1.0}] * 8})
    freq, dec = evaluate(reports, [GroundTruthEvent("boom", 5, 2)], k=1, window_p=5)
    assert dec == Detection("boom", DEC, 0, 1.0, 1)
    assert freq.missed and freq.latency is None and freq.segments_to_zero == 0
    assert as_number(freq.latency) == math.inf


def test_latency_counts_segments_until_top_k():
    rows = [{}] * 5 + [{"a": 1.0, "boom": 0.5}, {"a": 1.0, "boom": 0.9}, {"boom": 1.0}]
    (det,) = evaluate(reports_from({DEC: rows}), [GroundTruthEvent("boom", 5, 3)], k=1)
    assert det.latency == 2 and det.peak == 1.0 and det.segments_to_zero is None


def test_event_checks():
    reports = reports_from({DEC: [{}] * 10})
    with pytest.raises(ValueError):
        evaluate(reports, [GroundTruthEvent("boom", 3, 1)], window_p=5)  # onset before a full history
    with pytest.raises(ValueError):
        evaluate(reports, [GroundTruthEvent("boom", 8, 5)])  # runs past the reports
    with pytest.raises(ValueError):
        evaluate([], [GroundTruthEvent("boom", 8, 1)])


def test_decreasing_history_returns_to_zero_within_one_segment():
    # A steady "quiet" pair dominates the frequency scale, so the burst's
    # normalized frequency follows its raw counts: up at onset, then down.
    engine = TrendEngine(PipelineConfig())
    reports = []
    counts = [0] * 5 + [8, 7, 6, 5, 4, 3, 2, 1, 0]
    for seg, n in enumerate(counts):
        docs = [Document(f"{seg}-b{i}", seg, ("boom", "bang")) for i in range(n)]
        docs += [Document(f"{seg}-q{i}", seg, ("quiet", "calm")) for i in range(20)]
        reports.append(engine.process_segment(seg, docs))
    event = GroundTruthEvent("boom", 5, 5)
    rows = {d.measure: d for d in evaluate(reports, [event], k=2, window_p=5)}
    after = [r.vectors[Measure.FREQUENCY].get("boom") for r in reports[event.end :]]
    assert all(a > b for a, b in zip(after, after[1:]))
    assert rows[Measure.DYNAMIC_FREQUENCY].segments_to_zero <= 1
    assert rows[Measure.FREQUENCY].segments_to_zero == len(after) - 1
    for m in (Measure.DYNAMIC_DEGREE, Measure.DYNAMIC_EIGENVECTOR, Measure.DYNAMIC_FREQUENCY):
        assert rows[m].latency == 0


def test_evaluation_is_pure():
    reports = reports_from({DEC: [{}] * 5 + [{"boom": 1.0}, {}]})
    events = [GroundTruthEvent("boom", 5, 1)]
    assert evaluate(reports, events) == evaluate(reports, events)


def test_write_detections():
    out = io.StringIO()
    write_detections([Detection("boom", DEC, None, 0.25, None), Detection("bang", DEC, 1, 1.0, 3)], out)
    assert out.getvalue() == (
        "event_keyword,measure,latency,peak,segments_to_zero\n"
        "boom,dynamic-eigenvector,missed,0.25,inf\n"
        "bang,dynamic-eigenvector,1,1,3\n"
    )


def test_threshold_helpers():
    reports = reports_from({DEC: [{"a": 0.9}, {"a": 0.1, "b": 0.2}, {"b": 0.4}]})
    assert background_threshold(reports, q=1.0) == 0.9
    assert background_threshold(reports, q=1.0, skip=1) == 0.4
    assert background_threshold(reports, q=1.0, skip=3) == 0.0
    assert peak_raw(reports, DEC, "a", skip=1) == 0.1
    assert peak_raw(reports, DEC) == 0.9
    with pytest.raises(ValueError):
        background_threshold(reports, q=0)


@pytest.mark.slow
def test_zero_events_never_exceed_background_threshold(planted_run):
    p = PipelineConfig().P
    threshold = background_threshold(planted_run.reports, DEC, skip=p)
    quiet, _ = run_bytes(synth_bytes(events=()))
    assert peak_raw(quiet.reports, DEC, skip=p) < threshold
    # while every planted keyword clears it at its peak
    for event in ACCEPTANCE_EVENTS:
        assert peak_raw(planted_run.reports, DEC, event.keyword, skip=p) > threshold
