"""Round-trip and fidelity tests for SRT, RTTM, timecodes and the manifest."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dubkit.flow import ConditioningPlan
from dubkit.formats import (
    FilterVerdict,
    FrameInterval,
    ManifestError,
    RttmParseError,
    RttmSegment,
    SampleRecord,
    Scene,
    SrtCue,
    SrtParseError,
    Timecode,
    frame_to_timecode,
    parse_manifest,
    parse_rttm,
    parse_srt,
    serialize_manifest,
    serialize_rttm,
    serialize_srt,
    timecode_to_frame,
)
from dubkit.tst import AgeGroup, Gender, TimestampSpeakerTuple

# ---------------------------------------------------------------- generators

_TEXT_ALPHABET = "abcXYZ 你好吗电影配音 0123,.!?-"


def random_timecode(rng, max_ms=3_600_000):
    return Timecode.from_milliseconds(int(rng.integers(0, max_ms)))


def random_cue_text(rng):
    n_lines = int(rng.integers(1, 4))
    lines = []
    for _ in range(n_lines):
        chars = rng.choice(list(_TEXT_ALPHABET), size=int(rng.integers(1, 30)))
        line = "".join(chars).strip()
        lines.append(line or "x")
    return "\n".join(lines)


def random_cues(rng, max_cues=8):
    cues = []
    index = 0
    for _ in range(int(rng.integers(0, max_cues + 1))):
        index += int(rng.integers(1, 4))
        start_ms = int(rng.integers(0, 3_000_000))
        end_ms = start_ms + int(rng.integers(1, 60_000))
        cues.append(
            SrtCue(
                index,
                Timecode.from_milliseconds(start_ms),
                Timecode.from_milliseconds(end_ms),
                random_cue_text(rng),
            )
        )
    return cues


def random_rttm_segments(rng, max_segments=10):
    segments = []
    for _ in range(int(rng.integers(0, max_segments + 1))):
        onset = int(rng.integers(0, 10_000_000)) / 1000.0
        duration = (1 + int(rng.integers(0, 600_000))) / 1000.0
        segments.append(
            RttmSegment(
                file_id=f"clip{int(rng.integers(0, 100))}",
                onset=onset,
                duration=duration,
                speaker=f"spk{int(rng.integers(0, 8))}",
            )
        )
    return segments


def random_record(rng, idx=0):
    n_tuples = int(rng.integers(0, 5))
    tuples = []
    cursor = 0
    for _ in range(n_tuples):
        start = cursor + int(rng.integers(0, 10))
        end = start + int(rng.integers(1, 40))
        if end > 1500:
            break
        tuples.append(
            TimestampSpeakerTuple(
                start,
                int(rng.integers(0, 16)),
                list(Gender)[int(rng.integers(0, len(Gender)))],
                list(AgeGroup)[int(rng.integers(0, len(AgeGroup)))],
                end,
            )
        )
        cursor = end
    plan = None
    if rng.random() < 0.4:
        plan = ConditioningPlan(((0, 0), (5, 1)), source_len=100)
    record = SampleRecord(
        clip_id=f"clip{idx:04d}",
        duration_s=float(np.round(rng.random() * 60, 3)),
        transcript=random_cue_text(rng).replace("\n", " "),
        clue="线索 " + random_cue_text(rng).replace("\n", " "),
        scene=list(Scene)[int(rng.integers(0, len(Scene)))] if rng.random() < 0.8 else None,
        tuples=tuple(tuples),
        artifacts={"vocal": f"audio/clip{idx}.wav"} if rng.random() < 0.7 else {},
        emotion=["neutral", "喜悦", None][int(rng.integers(0, 3))],
        verdicts=(
            [FilterVerdict("overlap-filter", True, "no overlap", 0.0)]
            if rng.random() < 0.5
            else []
        ),
        ssc_plan=plan,
        series=f"s{int(rng.integers(0, 5))}",
        extra={"segments": [[0, 10]]} if rng.random() < 0.5 else {},
    )
    return record


# ----------------------------------------------------------------------- SRT


def test_parse_srt_single_cue():
    cues = parse_srt("1\n00:00:01,000 --> 00:00:02,500\n你好\n\n".encode("utf-8"))
    assert len(cues) == 1
    cue = cues[0]
    assert cue.index == 1
    assert cue.start == Timecode(0, 0, 1, 0)
    assert cue.end == Timecode(0, 0, 2, 500)
    assert cue.text == "你好"


def test_parse_srt_empty_input():
    assert parse_srt(b"") == []
    assert parse_srt("\n\n") == []


def test_parse_srt_multiline_text_and_crlf():
    data = "1\r\n00:00:00,000 --> 00:00:01,000\r\nline one\r\nline two\r\n\r\n"
    (cue,) = parse_srt(data)
    assert cue.text == "line one\nline two"


@pytest.mark.parametrize(
    "data,fragment",
    [
        ("x\n00:00:00,000 --> 00:00:01,000\nhi\n", "expected cue index"),
        ("1\n00:00:00,000 -> 00:00:01,000\nhi\n", "malformed timing"),
        ("1\n00:00:02,000 --> 00:00:01,000\nhi\n", "not before end"),
        ("1\n00:00:00,000 --> 00:00:01,000\nhi\n\n1\n00:00:02,000 --> 00:00:03,000\nyo\n", "strictly increasing"),
        ("1\n00:61:00,000 --> 00:62:01,000\nhi\n", "minutes out of range"),
        ("1\n00:00:00,000 --> 00:00:01,000\n\n", "no text"),
    ],
)
def test_parse_srt_errors_carry_line_numbers(data, fragment):
    with pytest.raises(SrtParseError) as exc:
        parse_srt(data)
    assert fragment in str(exc.value)
    assert exc.value.line >= 1


def test_srt_round_trip_randomized():
    rng = np.random.default_rng(101)
    for _ in range(1000):
        cues = random_cues(rng)
        text = serialize_srt(cues)
        assert parse_srt(text) == cues
        # canonical fixity: serialize(parse(serialize(x))) is byte-identical
        assert serialize_srt(parse_srt(text)) == text


def test_serialize_srt_empty_is_empty():
    assert serialize_srt([]) == ""


# ---------------------------------------------------------------------- RTTM


def test_parse_rttm_speaker_line():
    (seg,) = parse_rttm("SPEAKER clip1 1 0.50 2.00 <NA> <NA> spk0 <NA> <NA>\n")
    assert seg == RttmSegment("clip1", 0.5, 2.0, "spk0")


def test_parse_rttm_empty():
    assert parse_rttm("") == []
    assert parse_rttm(b"\n\n") == []


def test_parse_rttm_skips_other_record_types(caplog):
    data = (
        "SPKR-INFO clip1 1 <NA> <NA> <NA> unknown spk0 <NA>\n"
        "SPEAKER clip1 1 1.00 2.00 <NA> <NA> spk0 <NA> <NA>\n"
    )
    with caplog.at_level("WARNING"):
        segments = parse_rttm(data)
    assert len(segments) == 1
    assert "SPKR-INFO" in caplog.text


def test_parse_rttm_rejects_bad_durations():
    with pytest.raises(RttmParseError):
        parse_rttm("SPEAKER clip1 1 0.50 -2.00 <NA> <NA> spk0 <NA> <NA>\n")
    with pytest.raises(RttmParseError):
        parse_rttm("SPEAKER clip1 1 0.50 0.00 <NA> <NA> spk0 <NA> <NA>\n")
    with pytest.raises(RttmParseError):
        parse_rttm("SPEAKER clip1 1 abc 2.00 <NA> <NA> spk0 <NA> <NA>\n")


def test_rttm_round_trip_randomized():
    rng = np.random.default_rng(202)
    for _ in range(1000):
        segments = random_rttm_segments(rng)
        text = serialize_rttm(segments)
        assert parse_rttm(text) == segments
        assert serialize_rttm(parse_rttm(text)) == text


# ----------------------------------------------------------------- timecodes


def test_timecode_to_frame_examples():
    assert timecode_to_frame(Timecode(0, 0, 1, 0), 25) == 25
    assert timecode_to_frame(Timecode(0, 0, 0, 0), 25) == 0
    # 60.040 s at 25 fps: 60*25 frames plus one 40 ms frame period
    assert timecode_to_frame(Timecode(0, 1, 0, 40), 25) == 1501


def test_frame_timecode_round_trip_loses_at_most_one_frame():
    rng = np.random.default_rng(3)
    for _ in range(500):
        t = random_timecode(rng)
        frame = timecode_to_frame(t, 25)
        back = frame_to_timecode(frame, 25)
        assert back <= t
        assert t.total_milliseconds - back.total_milliseconds < 40  # one 25-fps period
    for _ in range(500):
        # rates that do not divide 1000 ms add sub-millisecond floor slack
        fps = int(rng.integers(1, 61))
        t = random_timecode(rng)
        loss = t.total_milliseconds - frame_to_timecode(timecode_to_frame(t, fps), fps).total_milliseconds
        assert loss * fps < 1000 + fps


@given(st.integers(min_value=0, max_value=10**9), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=200)
def test_timecode_to_frame_monotone(ms, delta):
    a = Timecode.from_milliseconds(ms)
    b = Timecode.from_milliseconds(ms + delta)
    assert timecode_to_frame(a) <= timecode_to_frame(b)


def test_timecode_validation():
    with pytest.raises(ValueError):
        Timecode(0, 60, 0, 0)
    with pytest.raises(ValueError):
        Timecode(0, 0, 0, 1000)
    with pytest.raises(ValueError):
        Timecode(-1, 0, 0, 0)


def test_frame_interval_validation():
    iv = FrameInterval(0, 25)
    assert iv.n_frames == 25
    assert iv.duration_seconds == 1.0
    with pytest.raises(ValueError):
        FrameInterval(5, 5)
    with pytest.raises(ValueError):
        FrameInterval(-1, 5)


# ------------------------------------------------------------------ manifest


def test_manifest_empty():
    assert serialize_manifest([]) == ""
    assert parse_manifest("") == []


def test_manifest_minimal_record():
    record = SampleRecord(clip_id="c1", duration_s=3.2)
    text = serialize_manifest([record])
    (back,) = parse_manifest(text)
    assert back == record


def test_manifest_round_trip_randomized():
    rng = np.random.default_rng(303)
    for i in range(1000):
        records = [random_record(rng, idx=i * 3 + k) for k in range(int(rng.integers(0, 3)))]
        text = serialize_manifest(records)
        assert parse_manifest(text) == records
        assert serialize_manifest(parse_manifest(text)) == text


def test_manifest_preserves_unknown_fields():
    line = '{"clip_id":"c1","duration_s":1.0,"custom_field":{"a":[1,2]}}\n'
    (record,) = parse_manifest(line)
    assert record.extra["custom_field"] == {"a": [1, 2]}
    assert '"custom_field":{"a":[1,2]}' in serialize_manifest([record])


def test_manifest_errors_carry_line_numbers():
    with pytest.raises(ManifestError) as exc:
        parse_manifest('{"clip_id":"a","duration_s":1.0}\nnot json\n')
    assert exc.value.line == 2
    with pytest.raises(ManifestError) as exc:
        parse_manifest('{"duration_s":1.0}\n')
    assert "clip_id" in str(exc.value)


def test_record_rejects_overlapping_tuples():
    t1 = TimestampSpeakerTuple(0, 0, Gender.MALE, AgeGroup.ADULT, 10)
    t2 = TimestampSpeakerTuple(5, 1, Gender.FEMALE, AgeGroup.CHILD, 15)
    with pytest.raises(ValueError):
        SampleRecord(clip_id="c", duration_s=1.0, tuples=(t1, t2))
    # touching segments are fine
    t3 = TimestampSpeakerTuple(10, 1, Gender.FEMALE, AgeGroup.CHILD, 15)
    SampleRecord(clip_id="c", duration_s=1.0, tuples=(t1, t3))
