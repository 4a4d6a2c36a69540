"""Timecodes and frame-grid arithmetic.

All frame indices in one manifest share a single frame rate, taken from
the pipeline config (default 25 fps). Conversions use exact integer
arithmetic so that floor rounding never suffers float drift.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_FPS = 25


@dataclass(frozen=True, order=True)
class Timecode:
    """Wall-clock offset with millisecond resolution (HH:MM:SS,mmm)."""

    hours: int
    minutes: int
    seconds: int
    milliseconds: int

    def __post_init__(self) -> None:
        if self.hours < 0:
            raise ValueError(f"negative hours: {self.hours}")
        if not 0 <= self.minutes <= 59:
            raise ValueError(f"minutes out of range: {self.minutes}")
        if not 0 <= self.seconds <= 59:
            raise ValueError(f"seconds out of range: {self.seconds}")
        if not 0 <= self.milliseconds <= 999:
            raise ValueError(f"milliseconds out of range: {self.milliseconds}")

    @property
    def total_milliseconds(self) -> int:
        return ((self.hours * 60 + self.minutes) * 60 + self.seconds) * 1000 + self.milliseconds

    @classmethod
    def from_milliseconds(cls, ms: int) -> Timecode:
        if ms < 0:
            raise ValueError(f"negative duration: {ms} ms")
        seconds, milliseconds = divmod(ms, 1000)
        minutes, seconds = divmod(seconds, 60)
        hours, minutes = divmod(minutes, 60)
        return cls(hours, minutes, seconds, milliseconds)

    def __str__(self) -> str:
        return f"{self.hours:02d}:{self.minutes:02d}:{self.seconds:02d},{self.milliseconds:03d}"


@dataclass(frozen=True)
class FrameInterval:
    """Half-open frame-index interval [start, end) on a fixed frame grid."""

    start: int
    end: int
    fps: int = DEFAULT_FPS

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"negative start frame: {self.start}")
        if self.end <= self.start:
            raise ValueError(f"empty interval: [{self.start}, {self.end})")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")

    @property
    def n_frames(self) -> int:
        return self.end - self.start

    @property
    def duration_seconds(self) -> float:
        return self.n_frames / self.fps


def timecode_to_frame(t: Timecode, fps: int = DEFAULT_FPS) -> int:
    """Floor a timecode onto the frame grid."""
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    return t.total_milliseconds * fps // 1000


def frame_to_timecode(frame: int, fps: int = DEFAULT_FPS) -> Timecode:
    """Inverse of timecode_to_frame; loses at most one frame period.

    (Plus sub-millisecond floor slack for rates that do not divide
    1000 ms evenly; exact for the default 25 fps grid.)
    """
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    if frame < 0:
        raise ValueError(f"negative frame index: {frame}")
    return Timecode.from_milliseconds(frame * 1000 // fps)
