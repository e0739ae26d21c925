"""Static and slope-weighted (dynamic) keyword centralities."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import SemanticGraph

class Measure(str, enum.Enum):
    FREQUENCY = "frequency"
    DEGREE = "degree"
    EIGENVECTOR = "eigenvector"
    DYNAMIC_FREQUENCY = "dynamic-frequency"
    DYNAMIC_DEGREE = "dynamic-degree"
    DYNAMIC_EIGENVECTOR = "dynamic-eigenvector"

    @property
    def is_dynamic(self) -> bool:
        return self in _BASE_OF

    @property
    def base(self) -> "Measure":
        return _BASE_OF.get(self, self)

    def __str__(self) -> str:
        return self.value


_BASE_OF = {
    Measure.DYNAMIC_FREQUENCY: Measure.FREQUENCY,
    Measure.DYNAMIC_DEGREE: Measure.DEGREE,
    Measure.DYNAMIC_EIGENVECTOR: Measure.EIGENVECTOR,
}
BASE_MEASURES = (Measure.FREQUENCY, Measure.DEGREE, Measure.EIGENVECTOR)
DYNAMIC_MEASURES = tuple(_BASE_OF)
ALL_MEASURES = tuple(Measure)


def parse_measure(name: str | Measure) -> Measure:
    try:
        return Measure(name)
    except ValueError:
        known = ", ".join(m.value for m in Measure)
        raise ValueError(f"unknown measure {name!r} (expected one of: {known})") from None


@dataclass
class CentralityVector:
    segment: int
    measure: Measure
    scores: dict[str, float]
    # Unclamped slope * score products; only filled for dynamic measures.
    raw: dict[str, float] | None = None

    def get(self, keyword: str) -> float:
        return self.scores.get(keyword, 0.0)


@dataclass(frozen=True)
class EigenSolveParams:
    tolerance: float = 1e-10
    max_iterations: int = 1000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class EigenConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int, vector: CentralityVector):
        super().__init__(f"power iteration did not converge in {iterations} steps (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations
        self.vector = vector


def max_normalize(values: Mapping[str, float]) -> dict[str, float]:
    top = max(values.values(), default=0.0)
    if top <= 0:
        return {k: 0.0 for k in values}
    return {k: v / top for k, v in values.items()}


def frequency_centrality(graph: SemanticGraph, segment: int | None = None) -> CentralityVector:
    freqs = {k: v for k, v in sorted(graph.frequencies().items()) if v > 0}
    return CentralityVector(_segment(graph, segment), Measure.FREQUENCY, max_normalize(freqs))


def degree_centrality(graph: SemanticGraph, segment: int | None = None) -> CentralityVector:
    degrees = {k: v for k, v in sorted(graph.degrees().items()) if v > 0}
    return CentralityVector(_segment(graph, segment), Measure.DEGREE, max_normalize(degrees))


def _segment(graph: SemanticGraph, segment: int | None) -> int:
    if segment is not None:
        return segment
    return -1 if graph.current_segment is None else graph.current_segment


def power_iteration(matrix, params: EigenSolveParams = EigenSolveParams()):
    """Dominant eigenvector of a symmetric nonnegative matrix, max entry scaled to 1.

    Iterates on ``A + s*I`` with ``s`` the mean row sum.  The shift leaves the
    eigenvectors alone but keeps ``-lambda_max`` (bipartite graphs such as a
    star) from matching the Perron root in magnitude, which would make the
    plain iteration oscillate.  Returns ``(x, residual, iterations, converged)``.
    """
    n = matrix.shape[0]
    x = np.ones(n)
    row_sums = np.asarray(matrix.sum(axis=1)).ravel()
    shift = float(row_sums.sum()) / n if n else 0.0
    residual = np.inf
    for it in range(1, params.max_iterations + 1):
        y = matrix @ x + shift * x
        top = y.max()
        if top <= 0:
            return np.zeros(n), 0.0, it, True
        y /= top
        residual = float(np.abs(y - x).max())
        x = y
        if residual < params.tolerance:
            return x, residual, it, True
    return x, residual, params.max_iterations, False


def adjacency_matrix(graph: SemanticGraph):
    keys, rows, cols, vals = graph.adjacency_arrays()
    n = len(keys)
    matrix = sp.csr_matrix(
        (np.asarray(vals + vals, dtype=float), (np.asarray(rows + cols), np.asarray(cols + rows))),
        shape=(n, n),
    )
    return keys, matrix


def eigenvector_centrality(
    graph: SemanticGraph, params: EigenSolveParams = EigenSolveParams(), segment: int | None = None
) -> CentralityVector:
    """Perron-vector centrality of the weighted adjacency, one entry per connected keyword.

    On a disconnected graph the component with the largest eigenvalue takes
    all the mass; the rest come out at (or numerically near) zero.
    """
    keys, matrix = adjacency_matrix(graph)
    seg = _segment(graph, segment)
    if not keys:
        return CentralityVector(seg, Measure.EIGENVECTOR, {})
    x, residual, iterations, converged = power_iteration(matrix, params)
    vector = CentralityVector(seg, Measure.EIGENVECTOR, dict(zip(keys, (x / x.max()).tolist())))
    if not converged:
        raise EigenConvergenceError(residual, iterations, vector)
    return vector


def compute_base(
    graph: SemanticGraph, params: EigenSolveParams = EigenSolveParams(), segment: int | None = None
) -> dict[Measure, CentralityVector]:
    return {
        Measure.FREQUENCY: frequency_centrality(graph, segment),
        Measure.DEGREE: degree_centrality(graph, segment),
        Measure.EIGENVECTOR: eigenvector_centrality(graph, params, segment),
    }


def slope(series: Sequence[float]) -> float:
    """Least-squares slope of ``series`` against time indices 1..P."""
    p = len(series)
    if p < 2:
        raise ValueError("slope needs at least two points")
    t_mean = (p + 1) / 2
    y_mean = sum(series) / p
    num = sum((i - t_mean) * (y - y_mean) for i, y in enumerate(series, start=1))
    den = sum((i - t_mean) ** 2 for i in range(1, p + 1))
    return num / den


def slope_weights(p: int) -> np.ndarray:
    if p < 2:
        raise ValueError("slope needs at least two points")
    centered = np.arange(1, p + 1) - (p + 1) / 2
    return centered / (centered**2).sum()


def slopes(histories: np.ndarray) -> np.ndarray:
    """Row-wise least-squares slopes of a (keywords, P) array, oldest column first."""
    histories = np.asarray(histories, dtype=float)
    weights = slope_weights(histories.shape[1])
    centered = histories - histories.mean(axis=1, keepdims=True)
    return centered @ weights


@dataclass
class HistoryBuffer:
    """Last ``window`` normalized scores per keyword for each base measure.

    Keywords whose whole window is zero are dropped; reading them back yields
    the all-zero history, which is what front-padding would have produced.
    """

    window: int
    series: dict[Measure, dict[str, tuple[float, ...]]] = field(default_factory=dict)
    segments_seen: int = 0

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("history window P must be >= 2")
        for m in BASE_MEASURES:
            self.series.setdefault(m, {})

    def push(self, vectors: Mapping[Measure, CentralityVector]) -> None:
        """Append one segment.  Every base measure gets a value (0 if absent)."""
        for measure in BASE_MEASURES:
            vector = vectors.get(measure)
            scores = vector.scores if vector is not None else {}
            old = self.series[measure]
            pad = (0.0,) * self.window
            updated = {}
            for keyword in sorted(old.keys() | scores.keys()):
                hist = old.get(keyword, pad)[1:] + (float(scores.get(keyword, 0.0)),)
                if any(hist):
                    updated[keyword] = hist
            self.series[measure] = updated
        self.segments_seen += 1

    def history(self, measure: Measure, keyword: str) -> tuple[float, ...]:
        return self.series[measure.base].get(keyword, (0.0,) * self.window)

    def to_records(self) -> list[dict]:
        records = [{"kind": "history", "window": self.window, "segments_seen": self.segments_seen}]
        for measure in BASE_MEASURES:
            records.append(
                {
                    "kind": "history-series",
                    "measure": measure.value,
                    "series": [[k, list(v)] for k, v in sorted(self.series[measure].items())],
                }
            )
        return records

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "HistoryBuffer":
        head = next(r for r in records if r.get("kind") == "history")
        buf = cls(head["window"], segments_seen=head["segments_seen"])
        for rec in records:
            if rec.get("kind") == "history-series":
                buf.series[Measure(rec["measure"])] = {k: tuple(float(x) for x in v) for k, v in rec["series"]}
        return buf


def dynamic(measure: Measure, history: HistoryBuffer, current: CentralityVector) -> CentralityVector:
    """Slope of the recent history times the current score, clamped at 0, max-normalized.

    ``history`` must already include the current segment as its newest entry.
    """
    measure = parse_measure(measure)
    base = measure.base
    if not measure.is_dynamic:
        raise ValueError(f"{measure} is not a dynamic measure")
    if current.measure != base:
        raise ValueError(f"{measure} needs the current {base} vector, got {current.measure}")
    keys = list(current.scores)
    if not keys:
        return CentralityVector(current.segment, measure, {}, {})
    hist = np.array([history.history(base, k) for k in keys])
    raw = slopes(hist) * np.array([current.scores[k] for k in keys])
    clamped = np.maximum(raw, 0.0)
    top = clamped.max()
    normalized = clamped / top if top > 0 else clamped
    return CentralityVector(
        current.segment,
        measure,
        dict(zip(keys, normalized.tolist())),
        dict(zip(keys, raw.tolist())),
    )


def rank_top_k(vector: CentralityVector | Mapping[str, float], k: int) -> list[tuple[str, float]]:
    """Positive-score keywords, best first, ties broken alphabetically."""
    scores = vector.scores if isinstance(vector, CentralityVector) else vector
    ranked = sorted(((kw, s) for kw, s in scores.items() if s > 0), key=lambda item: (-item[1], item[0]))
    return ranked[:k]
