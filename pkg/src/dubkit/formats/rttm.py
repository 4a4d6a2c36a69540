"""RTTM (Rich Transcription Time Marked) SPEAKER-line IO.

Only SPEAKER records carry diarization content; other record types are
skipped with a warning. Onset and duration serialize with three decimal
places, which is exact on the millisecond grid used throughout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

log = logging.getLogger(__name__)


class RttmParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class RttmSegment:
    file_id: str
    onset: float
    duration: float
    speaker: str

    def __post_init__(self) -> None:
        for name in ("file_id", "speaker"):
            value = getattr(self, name)
            if not value or any(ch.isspace() for ch in value):
                raise ValueError(f"{name} must be nonempty without whitespace: {value!r}")
        if self.onset < 0:
            raise ValueError(f"negative onset: {self.onset}")
        if self.duration <= 0:
            raise ValueError(f"duration must be positive: {self.duration}")


def parse_rttm(data: bytes | str) -> list[RttmSegment]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    segments: list[RttmSegment] = []
    for lineno, raw in enumerate(data.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] != "SPEAKER":
            log.warning("rttm line %d: skipping record type %r", lineno, fields[0])
            continue
        if len(fields) < 8:
            raise RttmParseError(lineno, f"SPEAKER record has {len(fields)} fields, expected >= 8")
        try:
            onset = float(fields[3])
            duration = float(fields[4])
        except ValueError:
            raise RttmParseError(lineno, f"non-numeric onset/duration in {line!r}") from None
        try:
            segments.append(RttmSegment(fields[1], onset, duration, fields[7]))
        except ValueError as exc:
            raise RttmParseError(lineno, str(exc)) from None
    return segments


def serialize_rttm(segments: list[RttmSegment]) -> str:
    lines = [
        f"SPEAKER {s.file_id} 1 {s.onset:.3f} {s.duration:.3f} <NA> <NA> {s.speaker} <NA> <NA>"
        for s in segments
    ]
    return "\n".join(lines) + "\n" if lines else ""


def read_rttm(path) -> list[RttmSegment]:
    with open(path, "rb") as fh:
        return parse_rttm(fh.read())


def write_rttm(path, segments: list[RttmSegment]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_rttm(segments))
