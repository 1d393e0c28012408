import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import GOLDEN
from subs2net.errors import EmptyDocument, EncodingError
from subs2net.subtitles import (
    SubtitleDocument, extract_hearing_impaired, format_timestamp, parse_srt, strip_markup, to_srt,
)


def test_basic_block():
    doc = parse_srt(b"1\n00:00:01,000 --> 00:00:02,500\nHello.\n", "m")
    (cue,) = doc.cues
    assert (cue.index, cue.start_ms, cue.end_ms, cue.lines) == (1, 1000, 2500, ("Hello.",))
    assert not doc.hearing_impaired and doc.skipped_count == 0


def test_markup_stripped():
    doc = parse_srt(b'1\n00:00:01,000 --> 00:00:02,000\n<i>Hello</i> <font color="red">you</font>\n', "m")
    assert doc.cues[0].lines == ("Hello you",)
    assert strip_markup("{\\an8}<b>x</b>") == "x"


def test_malformed_block_skipped():
    raw = b"1\n00:00:01,000 --> 00:00:02,000\nok\n\n2\n00:00:xx,000 --> 00:00:03,000\nbroken\n"
    doc = parse_srt(raw, "m")
    assert len(doc.cues) == 1 and doc.skipped_count == 1


def test_empty_document():
    with pytest.raises(EmptyDocument):
        parse_srt(b"garbage\n\nmore garbage\n", "m")
    with pytest.raises(EmptyDocument):
        parse_srt(b"", "m")


def test_nul_bytes_rejected():
    with pytest.raises(EncodingError):
        parse_srt("1\n00:00:01,000 --> 00:00:02,000\nhi\n".encode("utf-16"), "m")


def test_encodings_bom_latin1_crlf():
    text = "1\r\n00:00:01,000 --> 00:00:02,000\r\nJosé, ¿qué?\r\n"
    for raw in (text.encode("utf-8"), b"\xef\xbb\xbf" + text.encode("utf-8"), text.encode("latin-1")):
        assert parse_srt(raw, "m").cues[0].lines == ("José, ¿qué?",)


def test_short_fraction_and_dot_separator():
    doc = parse_srt(b"1\n00:01:02.5 --> 01:00:00,040\nx\n", "m")
    assert doc.cues[0].start_ms == 62_500 and doc.cues[0].end_ms == 3_600_040


def test_cues_sorted_by_start():
    raw = b"2\n00:00:05,000 --> 00:00:06,000\nb\n\n1\n00:00:01,000 --> 00:00:02,000\na\n\n3\n00:00:01,000 --> 00:00:02,000\nc\n"
    doc = parse_srt(raw, "m")
    assert [c.index for c in doc.cues] == [1, 3, 2]


def test_end_before_start_is_malformed():
    raw = b"1\n00:00:05,000 --> 00:00:01,000\nx\n\n2\n00:00:05,000 --> 00:00:06,000\ny\n"
    assert parse_srt(raw, "m").skipped_count == 1


def test_hearing_impaired_examples():
    tags, cues, clean = extract_hearing_impaired(["MORPHEUS:", "I've been looking for you, Neo."])
    assert tags == ["MORPHEUS"] and cues == [] and clean == ["I've been looking for you, Neo."]
    assert extract_hearing_impaired(["[PHONE RINGS]"]) == ([], ["PHONE RINGS"], [])
    assert extract_hearing_impaired(["Hello there."]) == ([], [], ["Hello there."])


def test_hearing_impaired_edge_cases():
    # clock times and single capitals are not speakers
    assert extract_hearing_impaired(["A: no"])[0] == []
    assert extract_hearing_impaired(["At 10:30 we go"])[0] == []
    tags, cues, clean = extract_hearing_impaired(["- DR. JONES: (SIGHS) fine (quietly)"])
    assert tags == ["DR. JONES"] and cues == ["SIGHS"]
    assert clean == ["fine (quietly)"]


def test_document_flags_hi():
    doc = parse_srt(b"1\n00:00:01,000 --> 00:00:02,000\nNEO: Hi\n", "m")
    assert doc.hearing_impaired and doc.cues[0].speaker_tags == ("NEO",)
    assert doc.cues[0].dialogue == ["Hi"]


def test_json_roundtrip():
    doc = parse_srt((GOLDEN / "srt" / "g03.srt").read_bytes(), "g03")
    again = SubtitleDocument.from_dict(doc.to_dict())
    assert again.cues == doc.cues and again.hearing_impaired == doc.hearing_impaired
    assert set(doc.to_dict()) == {"movie_id", "hearing_impaired", "cues"}


@pytest.mark.parametrize("path", sorted((GOLDEN / "srt").glob("*.srt")), ids=lambda p: p.stem)
def test_golden_roundtrip_and_determinism(path):
    raw = path.read_bytes()
    doc = parse_srt(raw, path.stem)
    assert parse_srt(raw, path.stem) == doc
    again = parse_srt(to_srt(doc).encode("utf-8"), path.stem)
    assert [(c.index, c.start_ms, c.end_ms, c.lines) for c in again.cues] == [
        (c.index, c.start_ms, c.end_ms, c.lines) for c in doc.cues
    ]


def test_latin1_golden_file():
    doc = parse_srt((GOLDEN / "srt" / "g08.srt").read_bytes(), "g08")
    assert any("Úrsula" in line for c in doc.cues for line in c.lines)
    assert doc.skipped_count == 1


line_text = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" ,.!?'"),
    min_size=1, max_size=30,
).map(str.strip).filter(bool)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**7), st.integers(0, 5000), st.lists(line_text, min_size=1, max_size=3)), min_size=1, max_size=8))
def test_roundtrip_property(blocks):
    rng = random.Random(len(blocks))
    order = list(range(len(blocks)))
    rng.shuffle(order)
    parts = []
    for i in order:
        start, dur, lines = blocks[i]
        parts.append(f"{i + 1}\n{format_timestamp(start)} --> {format_timestamp(start + dur)}\n" + "\n".join(lines))
    doc = parse_srt("\n\n".join(parts).encode("utf-8"), "p")
    starts = [c.start_ms for c in doc.cues]
    assert starts == sorted(starts)
    again = parse_srt(to_srt(doc).encode("utf-8"), "p")
    assert again.cues == doc.cues
