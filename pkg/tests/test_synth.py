from collections import Counter

import numpy as np
import pytest

from trendgraph.ingest import normalize
from trendgraph.synth import COMPANIONS_PER_EVENT, PlantedEvent, generate, pseudo_words, zipf_probabilities


def by_segment(docs, start, width=3600):
    out = {}
    for d in docs:
        out.setdefault((d.timestamp - start) // width, []).append(d)
    return out


def test_parse_event():
    e = PlantedEvent.parse("boom@20:3:0.15")
    assert (e.keyword, e.onset, e.duration, e.intensity, e.end) == ("boom", 20, 3, 0.15, 22)
    assert str(e) == "boom@20:3:0.15"
    for bad in ("boom", "boom@a:1:0.1", "boom@1:1:0", "boom@1:0:0.5", "running@1:1:0.5"):
        with pytest.raises(ValueError):
            PlantedEvent.parse(bad)


def test_generate_shape_and_order():
    docs = list(generate(vocab_size=50, docs_per_segment=10, segments=4, seed=3, start=1000, segment_width=100))
    assert len(docs) == 40
    assert [d.timestamp for d in docs] == sorted(d.timestamp for d in docs)
    assert all(1000 <= d.timestamp < 1400 for d in docs)
    assert len({d.id for d in docs}) == 40
    for d in docs:
        toks = d.text.split()
        assert 2 <= len(toks) <= 3 and len(set(toks)) == len(toks)
        assert normalize(d.text) == toks


def test_same_seed_same_stream_other_seed_differs():
    a = list(generate(vocab_size=80, docs_per_segment=20, segments=3, seed=5))
    assert a == list(generate(vocab_size=80, docs_per_segment=20, segments=3, seed=5))
    assert a != list(generate(vocab_size=80, docs_per_segment=20, segments=3, seed=6))


def test_planted_event_injection():
    event = PlantedEvent("boom", 3, 2, 0.25)
    docs = list(generate(vocab_size=100, docs_per_segment=40, segments=7, seed=1, events=[event]))
    segs = by_segment(docs, docs[0].timestamp - docs[0].timestamp % 3600)
    counts = {s: sum("boom" in d.text.split() for d in ds) for s, ds in segs.items()}
    assert counts == {0: 0, 1: 0, 2: 0, 3: 10, 4: 10, 5: 0, 6: 0}
    # companions show up only alongside the keyword
    companions = Counter()
    for d in docs:
        toks = d.text.split()
        if "boom" in toks:
            companions.update(toks[toks.index("boom") + 1 :])
    assert 1 <= len(companions) <= COMPANIONS_PER_EVENT
    for word in companions:
        assert all("boom" in d.text.split() for d in docs if word in d.text.split())


def test_generate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        list(generate(segments=5, events=[PlantedEvent("boom", 4, 3, 0.1)]))
    with pytest.raises(ValueError):
        list(generate(events=[PlantedEvent("boom", 4, 3, 0.1), PlantedEvent("boom", 10, 1, 0.1)]))
    with pytest.raises(ValueError):
        list(generate(doc_length=(3, 2)))


def test_zipf_and_words():
    p = zipf_probabilities(100, 1.1)
    assert p.sum() == pytest.approx(1.0) and np.all(np.diff(p) < 0)
    words = pseudo_words(np.random.default_rng(0), 200, {"boom"})
    assert len(set(words)) == 200 and "boom" not in words
    assert all(normalize(w) == [w] for w in words)
