"""SubRip subtitle (SRT) reading and writing.

The parser is strict: every cue must be an index line, a
`HH:MM:SS,mmm --> HH:MM:SS,mmm` timing line and at least one text line,
with cues separated by blank lines. Cue text is preserved byte-exactly;
the only normalization applied is line endings to `\\n`. serialize_srt
emits the canonical form, so parse -> serialize is the identity on
canonical files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from dubkit.formats.timecode import Timecode

_TIMING_RE = re.compile(
    r"^(\d{2,}):(\d{2}):(\d{2}),(\d{3}) --> (\d{2,}):(\d{2}):(\d{2}),(\d{3})$"
)


class SrtParseError(ValueError):
    """Malformed SRT input; carries the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class SrtCue:
    index: int
    start: Timecode
    end: Timecode
    text: str

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"cue index must be >= 1, got {self.index}")
        if not self.start < self.end:
            raise ValueError(f"cue start {self.start} must precede end {self.end}")
        if not self.text:
            raise ValueError("cue text must be nonempty")
        if "\n\n" in self.text or self.text.startswith("\n") or self.text.endswith("\n"):
            raise ValueError("cue text must not contain blank lines")


def parse_srt(data: bytes | str) -> list[SrtCue]:
    """Parse SRT content into cues, in file order."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    cues: list[SrtCue] = []
    prev_index = 0
    pos = 0
    while pos < len(lines):
        if not lines[pos].strip():
            pos += 1
            continue

        index_line = pos
        try:
            index = int(lines[pos])
        except ValueError:
            raise SrtParseError(pos + 1, f"expected cue index, got {lines[pos]!r}") from None
        if index <= prev_index:
            raise SrtParseError(
                pos + 1, f"cue indices must be strictly increasing ({index} after {prev_index})"
            )
        pos += 1

        if pos >= len(lines):
            raise SrtParseError(index_line + 1, "cue truncated before timing line")
        m = _TIMING_RE.match(lines[pos])
        if m is None:
            raise SrtParseError(pos + 1, f"malformed timing line {lines[pos]!r}")
        try:
            start = Timecode(*(int(g) for g in m.groups()[:4]))
            end = Timecode(*(int(g) for g in m.groups()[4:]))
        except ValueError as exc:
            raise SrtParseError(pos + 1, str(exc)) from None
        if not start < end:
            raise SrtParseError(pos + 1, f"cue start {start} is not before end {end}")
        pos += 1

        text_lines = []
        while pos < len(lines) and lines[pos]:
            text_lines.append(lines[pos])
            pos += 1
        if not text_lines:
            raise SrtParseError(pos, "cue has no text lines")

        cues.append(SrtCue(index, start, end, "\n".join(text_lines)))
        prev_index = index
    return cues


def serialize_srt(cues: list[SrtCue]) -> str:
    """Render cues in canonical form. Inverse of parse_srt."""
    prev_index = 0
    for cue in cues:
        if cue.index <= prev_index:
            raise ValueError(
                f"cue indices must be strictly increasing ({cue.index} after {prev_index})"
            )
        prev_index = cue.index
    if not cues:
        return ""
    blocks = [f"{c.index}\n{c.start} --> {c.end}\n{c.text}" for c in cues]
    return "\n\n".join(blocks) + "\n"


def read_srt(path) -> list[SrtCue]:
    with open(path, "rb") as fh:
        return parse_srt(fh.read())


def write_srt(path, cues: list[SrtCue]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_srt(cues))
