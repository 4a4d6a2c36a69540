"""Timestamp-speaker tuple tokenizer.

Bijectively encodes per-segment (start, speaker, gender, age, end)
records as a discrete token sequence over a 1500-entry frame-index
codebook plus speaker/gender/age attribute tokens and structural
markers. Clips are at most 60 s at 25 fps, hence 1500 frame positions.

Vocabulary layout is a pure function of the config: contiguous id
blocks in the order [structural | frame index | speaker | gender |
age]. Interval ends are half-open, so the end slot stores the last
occupied frame (end - 1), keeping every emitted id inside the
frame-index block.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


class AgeGroup(str, Enum):
    CHILD = "child"
    TEENAGER = "teenager"
    ADULT = "adult"
    MIDDLE_AGED = "middle-aged"
    ELDERLY = "elderly"
    UNKNOWN = "unknown"


_GENDER_ORDER = (Gender.MALE, Gender.FEMALE, Gender.UNKNOWN)
_AGE_ORDER = (
    AgeGroup.CHILD,
    AgeGroup.TEENAGER,
    AgeGroup.ADULT,
    AgeGroup.MIDDLE_AGED,
    AgeGroup.ELDERLY,
    AgeGroup.UNKNOWN,
)


@dataclass(frozen=True)
class TimestampSpeakerTuple:
    """One non-silent segment: frame span plus clip-local speaker attributes."""

    start: int
    spk: int
    gender: Gender
    age: AgeGroup
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"negative start frame: {self.start}")
        if self.end <= self.start:
            raise ValueError(f"segment must be nonempty: [{self.start}, {self.end})")
        if self.spk < 0:
            raise ValueError(f"negative speaker index: {self.spk}")
        object.__setattr__(self, "gender", Gender(self.gender))
        object.__setattr__(self, "age", AgeGroup(self.age))


class TstEncodeError(ValueError):
    pass


class TstDecodeError(ValueError):
    """Invalid token sequence; carries the offending token offset."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"token offset {offset}: {message}")
        self.offset = offset


@dataclass(frozen=True)
class TstVocabulary:
    """Token-id layout for the timestamp-speaker codebook."""

    max_speakers: int = 16
    n_frames: int = 1500

    # structural ids
    bos: int = 0
    eos: int = 1
    sep: int = 2

    def __post_init__(self) -> None:
        if self.max_speakers < 1:
            raise ValueError(f"max_speakers must be >= 1, got {self.max_speakers}")
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be >= 1, got {self.n_frames}")
        structural = (self.bos, self.eos, self.sep)
        if len(set(structural)) != 3 or not all(0 <= t < 3 for t in structural):
            raise ValueError(f"structural tokens must be a permutation of 0..2, got {structural}")

    @property
    def frame_base(self) -> int:
        return 3

    @property
    def speaker_base(self) -> int:
        return self.frame_base + self.n_frames

    @property
    def gender_base(self) -> int:
        return self.speaker_base + self.max_speakers

    @property
    def age_base(self) -> int:
        return self.gender_base + len(_GENDER_ORDER)

    @property
    def size(self) -> int:
        return self.age_base + len(_AGE_ORDER)

    def frame_token(self, frame: int) -> int:
        if not 0 <= frame < self.n_frames:
            raise TstEncodeError(f"frame index {frame} outside codebook [0, {self.n_frames})")
        return self.frame_base + frame

    def speaker_token(self, spk: int) -> int:
        if not 0 <= spk < self.max_speakers:
            raise TstEncodeError(f"speaker index {spk} outside [0, {self.max_speakers})")
        return self.speaker_base + spk

    def gender_token(self, gender: Gender) -> int:
        return self.gender_base + _GENDER_ORDER.index(Gender(gender))

    def age_token(self, age: AgeGroup) -> int:
        return self.age_base + _AGE_ORDER.index(AgeGroup(age))

    @property
    def gender_unknown_token(self) -> int:
        return self.gender_token(Gender.UNKNOWN)

    @property
    def age_unknown_token(self) -> int:
        return self.age_token(AgeGroup.UNKNOWN)


def validate_tuples(tuples, n_frames: int | None = None) -> None:
    """Reject unsorted or overlapping segments (and out-of-range ones when
    n_frames is given). Unsorted input is an error, not a silent sort, so
    upstream ordering bugs surface here."""
    prev_end = None
    for i, t in enumerate(tuples):
        if n_frames is not None and t.end > n_frames:
            raise TstEncodeError(
                f"tuple {i}: end frame {t.end} exceeds codebook limit {n_frames}"
            )
        if prev_end is not None and t.start < prev_end:
            raise TstEncodeError(
                f"tuple {i}: starts at {t.start} before previous segment end {prev_end}"
            )
        prev_end = t.end


def encode(tuples, vocab: TstVocabulary = TstVocabulary()) -> np.ndarray:
    """Encode sorted, non-overlapping tuples as an int32 token array.

    Sequence shape: [bos] (seg [sep] seg ...) [eos], each segment being
    the five slots (start, speaker, gender, age, end).
    """
    tuples = list(tuples)
    validate_tuples(tuples, vocab.n_frames)
    tokens = [vocab.bos]
    for i, t in enumerate(tuples):
        if i:
            tokens.append(vocab.sep)
        tokens.extend(
            (
                vocab.frame_token(t.start),
                vocab.speaker_token(t.spk),
                vocab.gender_token(t.gender),
                vocab.age_token(t.age),
                vocab.frame_token(t.end - 1),
            )
        )
    tokens.append(vocab.eos)
    return np.array(tokens, dtype=np.int32)


def _expect_slot(tokens, offset: int, base: int, size: int, slot: str) -> int:
    if offset >= len(tokens) - 1:  # never read past the final marker
        raise TstDecodeError(offset, f"truncated segment, expected {slot} token")
    value = int(tokens[offset]) - base
    if not 0 <= value < size:
        raise TstDecodeError(offset, f"token {int(tokens[offset])} is not a valid {slot} token")
    return value


def decode(tokens, vocab: TstVocabulary = TstVocabulary()) -> list[TimestampSpeakerTuple]:
    """Inverse of encode: decode(encode(x)) == x for all valid x."""
    tokens = np.asarray(tokens)
    if tokens.ndim != 1 or len(tokens) < 2:
        raise TstDecodeError(0, "sequence must hold at least begin/end markers")
    if int(tokens[0]) != vocab.bos:
        raise TstDecodeError(0, f"expected begin marker {vocab.bos}, got {int(tokens[0])}")
    if int(tokens[-1]) != vocab.eos:
        raise TstDecodeError(len(tokens) - 1, f"expected end marker {vocab.eos}")

    out: list[TimestampSpeakerTuple] = []
    pos = 1
    while pos < len(tokens) - 1:
        if out:
            if int(tokens[pos]) != vocab.sep:
                raise TstDecodeError(pos, f"expected segment separator {vocab.sep}")
            pos += 1
        start = _expect_slot(tokens, pos, vocab.frame_base, vocab.n_frames, "start frame")
        spk = _expect_slot(tokens, pos + 1, vocab.speaker_base, vocab.max_speakers, "speaker")
        gender = _expect_slot(tokens, pos + 2, vocab.gender_base, len(_GENDER_ORDER), "gender")
        age = _expect_slot(tokens, pos + 3, vocab.age_base, len(_AGE_ORDER), "age")
        last = _expect_slot(tokens, pos + 4, vocab.frame_base, vocab.n_frames, "end frame")
        end = last + 1
        if start >= end:
            raise TstDecodeError(pos + 4, f"segment start {start} is not before end {end}")
        out.append(
            TimestampSpeakerTuple(start, spk, _GENDER_ORDER[gender], _AGE_ORDER[age], end)
        )
        pos += 5
    return out


def mask_unknown(tokens, vocab: TstVocabulary = TstVocabulary()):
    """Boolean mask flagging the `unknown` gender/age attribute positions.

    Tokens are returned unchanged; the mask is the loss-masking view used
    when unknown attributes must not contribute to training targets.
    """
    tokens = np.asarray(tokens)
    mask = (tokens == vocab.gender_unknown_token) | (tokens == vocab.age_unknown_token)
    return tokens, mask


def reindex_speakers(labels) -> list[int]:
    """Densely re-index speaker labels to 0..M-1 in first-appearance order."""
    mapping: dict = {}
    out = []
    for label in labels:
        if label not in mapping:
            mapping[label] = len(mapping)
        out.append(mapping[label])
    return out
