"""Emergent keyword detection and summarization over timestamped document streams."""

from .centrality import (
    ALL_MEASURES,
    CentralityVector,
    EigenSolveParams,
    HistoryBuffer,
    Measure,
    degree_centrality,
    dynamic,
    eigenvector_centrality,
    frequency_centrality,
    rank_top_k,
    slope,
)
from .evalharness import GroundTruthEvent, evaluate
from .graph import SemanticGraph, restore, snapshot
from .ingest import Document, NormalizationConfig, RawDocument, assign_segment, normalize, read_stream
from .pipeline import PipelineConfig, SegmentReport, TrendEngine, run
from .summarize import CoverInstance, Summary, document_weight, greedy_cover, summarize_segment

__version__ = "0.1.0"

__all__ = [
    "ALL_MEASURES",
    "CentralityVector",
    "CoverInstance",
    "Document",
    "EigenSolveParams",
    "GroundTruthEvent",
    "HistoryBuffer",
    "Measure",
    "NormalizationConfig",
    "PipelineConfig",
    "RawDocument",
    "SegmentReport",
    "SemanticGraph",
    "Summary",
    "TrendEngine",
    "assign_segment",
    "degree_centrality",
    "document_weight",
    "dynamic",
    "eigenvector_centrality",
    "evaluate",
    "frequency_centrality",
    "greedy_cover",
    "normalize",
    "rank_top_k",
    "read_stream",
    "restore",
    "run",
    "slope",
    "snapshot",
    "summarize_segment",
]
