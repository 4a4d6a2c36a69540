"""Bit-exact readers/writers for SRT, RTTM and the sample manifest."""

from dubkit.formats.manifest import (
    FilterVerdict,
    ManifestError,
    SampleRecord,
    Scene,
    SCENE_ORDER,
    parse_manifest,
    read_manifest,
    serialize_manifest,
    write_manifest,
)
from dubkit.formats.rttm import (
    RttmParseError,
    RttmSegment,
    parse_rttm,
    read_rttm,
    serialize_rttm,
    write_rttm,
)
from dubkit.formats.srt import (
    SrtCue,
    SrtParseError,
    parse_srt,
    read_srt,
    serialize_srt,
    write_srt,
)
from dubkit.formats.timecode import (
    DEFAULT_FPS,
    FrameInterval,
    Timecode,
    frame_to_timecode,
    timecode_to_frame,
)

__all__ = [
    "DEFAULT_FPS",
    "FilterVerdict",
    "FrameInterval",
    "ManifestError",
    "RttmParseError",
    "RttmSegment",
    "SampleRecord",
    "Scene",
    "SCENE_ORDER",
    "SrtCue",
    "SrtParseError",
    "Timecode",
    "frame_to_timecode",
    "parse_manifest",
    "parse_rttm",
    "parse_srt",
    "read_manifest",
    "read_rttm",
    "read_srt",
    "serialize_manifest",
    "serialize_rttm",
    "serialize_srt",
    "timecode_to_frame",
    "write_manifest",
    "write_rttm",
    "write_srt",
]
