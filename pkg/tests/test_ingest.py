import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendgraph.ingest import (
    DEFAULT_STOPWORDS,
    NormalizationConfig,
    RawDocument,
    RejectedRecord,
    assign_segment,
    ascii_letter_ratio,
    default_origin,
    lemmatize,
    normalize,
    passes_english_filter,
    read_stream,
    to_document,
)


def test_empty_text():
    assert normalize("") == []


def test_mixed_case_url_and_stopwords():
    assert normalize("Explosion! http://t.co/x at the FINISH line") == ["explosion", "finish", "line"]


def _step_by_step(text):
    # Independent hand-ordered trace of the five steps for the example above.
    lowered = text.lower()
    no_url = " ".join(w for w in lowered.split() if not w.startswith(("http://", "https://", "www.")))
    cleaned = "".join(c if c.isalnum() or c in "'#" else " " for c in no_url)
    tokens = [t.strip("'#") for t in cleaned.split()]
    return [t for t in tokens if t and t not in {"at", "the"}]


def test_example_matches_step_by_step_trace():
    text = "Explosion! http://t.co/x at the FINISH line"
    assert normalize(text) == _step_by_step(text)


def test_duplicates_kept_in_order():
    assert normalize("Boston boston BOSTON") == ["boston", "boston", "boston"]


def test_hashtags_merge_with_bare_words():
    assert normalize("#Boston boston") == ["boston", "boston"]


def test_numbers_removed_by_default_and_kept_on_request():
    assert normalize("route 66 to boston2013") == ["route", "boston"]
    assert normalize("route 66", NormalizationConfig(remove_numbers=False)) == ["route", "66"]


def test_www_urls_and_html_removed():
    assert normalize("see www.example.com/x <b>now</b> &amp; later") == ["see", "now", "later"]


def test_tweet_speak_survives_default_stopwords():
    assert "rt" not in DEFAULT_STOPWORDS and "ha" not in DEFAULT_STOPWORDS
    assert normalize("RT ha ha") == ["rt", "ha", "ha"]


@pytest.mark.parametrize(
    "word, lemma",
    [
        ("explosions", "explosion"),
        ("buses", "bus"),
        ("running", "run"),
        ("falling", "fall"),
        ("stopped", "stop"),
        ("parties", "party"),
        ("boss", "boss"),
        ("analysis", "analysis"),
        ("string", "string"),
        ("breeding", "breeding"),  # breed -> bre would break idempotency
        ("photo", "photo"),
    ],
)
def test_lemmatize(word, lemma):
    assert lemmatize(word) == lemma


def test_lemmatization_can_be_disabled():
    assert normalize("explosions", NormalizationConfig(suffix_rules=())) == ["explosions"]


def test_custom_stopwords():
    config = NormalizationConfig(stopwords={"boston"})
    assert normalize("the boston marathon", config) == ["the", "marathon"]


text_strategy = st.lists(
    st.one_of(
        st.characters(codec="utf-8", exclude_categories=("Cs",)),
        st.sampled_from(list("abcdefghij ABC#'!.,:/ 0123456789")),
        st.sampled_from(["http://x.co/a ", "www.a.b ", "&amp;", "<p>", " running ", " parties ", " the "]),
    ),
    max_size=40,
).map("".join)


@settings(max_examples=400, deadline=None)
@given(text_strategy)
def test_normalize_is_idempotent(text):
    once = normalize(text)
    assert normalize(" ".join(once)) == once


@settings(max_examples=300, deadline=None)
@given(text_strategy)
def test_output_tokens_are_clean(text):
    config = NormalizationConfig()
    for token in normalize(text, config):
        assert token and token == token.lower()
        assert token not in config.stopwords
        assert not token.startswith(("'", "#")) and not token.endswith(("'", "#"))
        assert all(c.isalpha() or c in "'#" for c in token)


@pytest.mark.parametrize(
    "offset, expected",
    [(0, 0), (3600, 1), (5399, 1), (7199, 1), (7200, 2)],
)
def test_assign_segment(offset, expected):
    origin = 1366027200
    assert assign_segment(origin + offset, origin, 3600) == expected
    assert assign_segment(origin + offset, origin, 3600) == (offset // 3600)


def test_assign_segment_rejects_early_records():
    with pytest.raises(RejectedRecord) as err:
        assign_segment(99, 100, 10, doc_id="tw-1")
    assert err.value.doc_id == "tw-1"
    with pytest.raises(ValueError):
        assign_segment(5, 0, 0)


@given(st.integers(0, 10**7), st.integers(0, 10**7), st.integers(1, 10**5))
def test_assign_segment_monotone(a, b, width):
    lo, hi = sorted((a, b))
    assert assign_segment(lo, 0, width) <= assign_segment(hi, 0, width)
    assert assign_segment(width * (lo // width), 0, width) == lo // width


def test_default_origin_aligns_to_width():
    assert default_origin(1366030000, 3600) == 1366027200


def _lines(*records):
    return io.BytesIO("\n".join(records).encode("utf-8") + b"\n")


def test_read_stream_single_record():
    reader = read_stream(_lines('{"id": "a", "timestamp": 5, "text": "hello"}'))
    assert list(reader) == [RawDocument("a", 5, "hello")]
    assert (reader.lines, reader.emitted, reader.malformed) == (1, 1, 0)


def test_read_stream_skips_missing_timestamp():
    reader = read_stream(_lines('{"id": "a", "text": "hello"}'))
    assert list(reader) == []
    assert reader.malformed == 1
    assert "line 1" in reader.warnings[0]


def test_read_stream_preserves_order_and_ignores_comments():
    recs = [f'{{"id": "d{i}", "timestamp": {i}, "text": "t"}}' for i in range(7)]
    reader = read_stream(_lines("# header", *recs, ""))
    assert [d.id for d in reader] == [f"d{i}" for i in range(7)]


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        "[1, 2]",
        '{"id": "", "timestamp": 1, "text": "x"}',
        '{"id": "a", "timestamp": "1", "text": "x"}',
        '{"id": "a", "timestamp": 1.5, "text": "x"}',
        '{"id": "a", "timestamp": true, "text": "x"}',
        '{"id": "a", "timestamp": 1}',
    ],
)
def test_read_stream_malformed_variants(line):
    reader = read_stream(_lines(line))
    assert list(reader) == [] and reader.malformed == 1


@given(st.lists(st.one_of(st.just("good"), st.just("bad"), st.just("comment")), max_size=30))
def test_emitted_plus_skipped_equals_lines(kinds):
    lines = []
    for i, kind in enumerate(kinds):
        if kind == "good":
            lines.append(f'{{"id": "d{i}", "timestamp": {i}, "text": "x"}}')
        elif kind == "bad":
            lines.append('{"id": 3}')
        else:
            lines.append("# comment")
    reader = read_stream(_lines(*lines))
    emitted = len(list(reader))
    assert emitted + reader.malformed == reader.lines == sum(k != "comment" for k in kinds)


def test_english_heuristic():
    assert ascii_letter_ratio("hello") == 1.0
    assert ascii_letter_ratio("привет hi") == pytest.approx(2 / 8)
    on = NormalizationConfig(english_threshold=0.9)
    assert passes_english_filter("hello world", on)
    assert not passes_english_filter("привет мир", on)
    assert passes_english_filter("привет мир", NormalizationConfig())
    with pytest.raises(ValueError):
        NormalizationConfig(english_threshold=1.5)


def test_to_document_drops_empty_and_filtered():
    config = NormalizationConfig(english_threshold=0.9)
    assert to_document(RawDocument("a", 0, "the and of"), 0, config) is None
    assert to_document(RawDocument("b", 0, "привет мир"), 0, config) is None
    doc = to_document(RawDocument("c", 0, "Boston Marathon"), 3, config)
    assert doc.tokens == ("boston", "marathon") and doc.segment == 3 and doc.text == "Boston Marathon"
