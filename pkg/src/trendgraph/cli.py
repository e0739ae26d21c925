"""Command-line entry point: ``trendgraph {run,timeseries,summarize,rank,synth,evaluate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .centrality import EigenSolveParams, Measure, parse_measure, rank_top_k
from .evalharness import GroundTruthEvent, evaluate, write_detections
from .graph import SnapshotError
from .ingest import DEFAULT_SUFFIX_RULES, NormalizationConfig, load_stopwords
from .pipeline import (
    ConfigError,
    DirectorySink,
    PipelineConfig,
    SegmentReport,
    read_reports,
    run,
    timeseries_rows,
    write_timeseries,
)
from .synth import DEFAULT_START, PlantedEvent, generate, write_stream

log = logging.getLogger("trendgraph")

_DEFAULTS = PipelineConfig()


def _measure(value: str) -> Measure:
    try:
        return parse_measure(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _measure_list(value: str) -> tuple[Measure, ...]:
    return tuple(_measure(v.strip()) for v in value.split(",") if v.strip())


def _event(value: str) -> PlantedEvent:
    try:
        return PlantedEvent.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _length_range(value: str) -> tuple[int, int]:
    lo, _, hi = value.partition("-")
    try:
        lo_i = int(lo)
        hi_i = int(hi) if hi else lo_i
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or MIN-MAX, got {value!r}") from None
    if not 1 <= lo_i <= hi_i:
        raise argparse.ArgumentTypeError("document length range must satisfy 1 <= MIN <= MAX")
    return lo_i, hi_i


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trendgraph", description="Emergent keyword detection over document streams.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="process a stream and write reports, summaries, time series and a snapshot")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--segment-width", type=int, default=_DEFAULTS.segment_width)
    p.add_argument("--window-p", type=int, default=_DEFAULTS.window_p)
    p.add_argument("--decay-k", type=int, default=None, help="default: max(P, 5)")
    p.add_argument("--top-k", type=int, default=_DEFAULTS.top_k)
    p.add_argument("--measures", type=_measure_list, default=_DEFAULTS.measures)
    p.add_argument("--summary-measure", type=_measure, default=_DEFAULTS.summary_measure)
    p.add_argument("--cover-rule", choices=("default", "literal"), default=_DEFAULTS.cover_rule)
    p.add_argument("--stopwords", type=Path)
    p.add_argument("--english-filter", type=float, metavar="THRESH")
    p.add_argument("--no-lemmatize", action="store_true")
    p.add_argument("--keep-numbers", action="store_true")
    p.add_argument("--origin", type=int, help="epoch seconds of segment 0 (default: first timestamp floored)")
    p.add_argument("--reorder-segments", type=int, default=0, metavar="B")
    p.add_argument("--snapshot-every", type=int, metavar="N")
    p.add_argument("--resume", type=Path, metavar="SNAPSHOT")
    p.add_argument("--stop-after", type=int, metavar="SEGMENT")
    p.add_argument("--eigen-tol", type=float, default=_DEFAULTS.eigen.tolerance)
    p.add_argument("--eigen-max-iter", type=int, default=_DEFAULTS.eigen.max_iterations)

    p = sub.add_parser("timeseries", help="per-keyword scores from reports.jsonl as CSV")
    p.add_argument("--reports", required=True, type=Path)
    p.add_argument("--keyword")
    p.add_argument("--measure", type=_measure)

    p = sub.add_parser("summarize", help="print segment summaries")
    p.add_argument("--summaries", required=True, type=Path)
    p.add_argument("--segment", type=int)

    p = sub.add_parser("rank", help="top keywords of one segment as CSV")
    p.add_argument("--reports", required=True, type=Path)
    p.add_argument("--segment", type=int, required=True)
    p.add_argument("--measure", type=_measure, default=Measure.DYNAMIC_EIGENVECTOR)
    p.add_argument("--top-k", type=int, default=_DEFAULTS.top_k)

    p = sub.add_parser("synth", help="write a synthetic stream with planted bursts")
    p.add_argument("--output", type=Path, help="default: standard output")
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--docs-per-segment", type=int, default=200)
    p.add_argument("--segments", type=int, default=60)
    p.add_argument("--zipf", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--event", type=_event, action="append", default=[], metavar="KW@ONSET:DURATION:INTENSITY")
    p.add_argument("--doc-length", type=_length_range, default=(2, 3), metavar="MIN-MAX")
    p.add_argument("--segment-width", type=int, default=_DEFAULTS.segment_width)
    p.add_argument("--start", type=int, default=DEFAULT_START)

    p = sub.add_parser("evaluate", help="score reports against planted events, writing detections CSV")
    p.add_argument("--reports", required=True, type=Path)
    p.add_argument("--event", type=_event, action="append", required=True, metavar="KW@ONSET:DURATION:INTENSITY")
    p.add_argument("--top-k", type=int, default=_DEFAULTS.top_k)
    p.add_argument("--window-p", type=int, default=_DEFAULTS.window_p)
    p.add_argument("--output", type=Path, help="default: standard output")
    return parser


def _config_from_args(args) -> PipelineConfig:
    stopwords = load_stopwords(args.stopwords) if args.stopwords else NormalizationConfig().stopwords
    normalization = NormalizationConfig(
        stopwords=stopwords,
        remove_numbers=not args.keep_numbers,
        suffix_rules=() if args.no_lemmatize else DEFAULT_SUFFIX_RULES,
        english_threshold=args.english_filter,
    )
    return PipelineConfig(
        segment_width=args.segment_width,
        window_p=args.window_p,
        decay_k=args.decay_k,
        top_k=args.top_k,
        measures=args.measures,
        summary_measure=args.summary_measure,
        cover_rule=args.cover_rule,
        normalization=normalization,
        eigen=EigenSolveParams(args.eigen_tol, args.eigen_max_iter),
        origin=args.origin,
        reorder_segments=args.reorder_segments,
        snapshot_every=args.snapshot_every,
    )


def cmd_run(args, parser) -> int:
    try:
        config = _config_from_args(args)
    except (ConfigError, ValueError) as exc:
        parser.error(str(exc))
    try:
        resume = args.resume.read_bytes() if args.resume else None
        with open(args.input, "rb") as source:
            sink = DirectorySink(args.out)
            result = run(config, source, [sink], resume=resume, stop_after=args.stop_after)
    except OSError as exc:
        name = exc.filename or args.input
        print(f"trendgraph: error: cannot read or write {name}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except SnapshotError as exc:
        print(f"trendgraph: error: bad snapshot {args.resume}: {exc}", file=sys.stderr)
        return 1
    t = result.totals
    log.info(
        "%d segments, %d lines: %d ingested, %d dropped (%d late), %d malformed, %d replayed",
        result.reports, t["lines"], t["ingested"], t["dropped"], t["late"], t["malformed"], t["replayed"],
    )
    return 0


def _load(path: Path) -> list[dict]:
    try:
        return read_reports(path)
    except OSError as exc:
        raise SystemExit(f"trendgraph: error: cannot read {path}: {exc.strerror or exc}") from None


def cmd_timeseries(args, parser) -> int:
    reports = _load(args.reports)
    keywords = None if args.keyword is None else [args.keyword]
    measures = None if args.measure is None else [args.measure.value]
    write_timeseries(timeseries_rows(reports, keywords, measures), sys.stdout)
    return 0


def cmd_summarize(args, parser) -> int:
    for obj in _load(args.summaries):
        if args.segment is not None and obj["segment"] != args.segment:
            continue
        print(f"== segment {obj['segment']} ({obj['measure']}): {' '.join(obj['keywords'])}")
        for pick in obj["picks"]:
            print(f"  [{pick['doc_id']}] (+{','.join(pick['new_keywords'])}; w={pick['weight']}) {pick['text']}")
        if obj["uncovered"]:
            print(f"  uncovered: {' '.join(obj['uncovered'])}")
    return 0


def cmd_rank(args, parser) -> int:
    if args.top_k < 1:
        parser.error("--top-k must be >= 1")
    for obj in _load(args.reports):
        if obj["segment"] != args.segment:
            continue
        report = SegmentReport.from_json(obj)
        if args.measure not in report.vectors:
            parser.error(f"measure {args.measure} is not in the reports")
        print("segment,rank,keyword,score")
        for i, (kw, score) in enumerate(rank_top_k(report.vectors[args.measure], args.top_k), start=1):
            print(f"{args.segment},{i},{kw},{format(score, '.12g')}")
        return 0
    print(f"trendgraph: error: segment {args.segment} not found in {args.reports}", file=sys.stderr)
    return 1


def cmd_synth(args, parser) -> int:
    try:
        docs = generate(
            vocab_size=args.vocab_size,
            docs_per_segment=args.docs_per_segment,
            segments=args.segments,
            zipf=args.zipf,
            seed=args.seed,
            events=args.event,
            doc_length=args.doc_length,
            segment_width=args.segment_width,
            start=args.start,
        )
        if args.output is None:
            write_stream(docs, sys.stdout)
        else:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                write_stream(docs, fh)
    except ValueError as exc:
        parser.error(str(exc))
    return 0


def cmd_evaluate(args, parser) -> int:
    reports = [SegmentReport.from_json(obj) for obj in _load(args.reports)]
    events = [GroundTruthEvent(e.keyword, e.onset, e.duration, e.intensity) for e in args.event]
    try:
        rows = evaluate(reports, events, args.top_k, window_p=args.window_p)
    except ValueError as exc:
        parser.error(str(exc))
    if args.output is None:
        write_detections(rows, sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_detections(rows, fh)
    return 0


COMMANDS = {
    "run": cmd_run,
    "timeseries": cmd_timeseries,
    "summarize": cmd_summarize,
    "rank": cmd_rank,
    "synth": cmd_synth,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
