import io
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trendgraph.pipeline import MemorySink, PipelineConfig, run  # noqa: E402
from trendgraph.synth import PlantedEvent, generate, write_stream  # noqa: E402

# Five bursts spread over a 60-segment stream, each well past the P-segment warm-up.
ACCEPTANCE_EVENTS = tuple(
    PlantedEvent.parse(s)
    for s in (
        "explosion@10:3:0.15",
        "photo@20:3:0.15",
        "mit@30:3:0.15",
        "tsarnaev@40:3:0.15",
        "boat@50:3:0.15",
    )
)
ACCEPTANCE_SEED = 0

RESULTS: list[tuple[str, bool, str]] = []


def synth_bytes(events=ACCEPTANCE_EVENTS, seed=ACCEPTANCE_SEED, **kwargs) -> bytes:
    params = dict(vocab_size=2000, docs_per_segment=200, segments=60, zipf=1.1)
    params.update(kwargs)
    buf = io.StringIO()
    write_stream(generate(seed=seed, events=events, **params), buf)
    return buf.getvalue().encode()


def run_bytes(data: bytes, config: PipelineConfig | None = None, **kwargs):
    sink = MemorySink()
    result = run(config or PipelineConfig(), io.BytesIO(data), [sink], **kwargs)
    return sink, result


@pytest.fixture(scope="session")
def planted_stream() -> bytes:
    return synth_bytes()


@pytest.fixture(scope="session")
def planted_run(planted_stream):
    sink, _ = run_bytes(planted_stream)
    return sink


@pytest.fixture
def record():
    """Record one acceptance criterion verdict; echoed as a PASS/FAIL line."""

    def _record(name: str, ok: bool, detail: str = "") -> bool:
        RESULTS.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
