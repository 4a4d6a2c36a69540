"""Bidirectional verification filters and scene categorization.

Transcripts from the corrector are trusted only when close to the ASR
transcript under normalized edit distance; speaker outputs are trusted
only when they match the diarization labels one-to-one. Kept samples
have unreliable attributes patched to unknown rather than discarded.
"""

from __future__ import annotations

import re

from dubkit.correct.client import CorrectionResponse, SpeakerAttrs
from dubkit.formats.manifest import FilterVerdict, Scene
from dubkit.metrics import edit_distance
from dubkit.tst import AgeGroup, Gender

_LABEL_RE = re.compile(r"(?:speaker|spk|s)[_\- ]?(\d+)$")


def transcript_ratio(a: str, b: str, *, mode: str = "char") -> float:
    """Normalized edit distance in [0, 1]; char for CJK, word for Latin."""
    if mode == "char":
        seq_a, seq_b = a, b
    elif mode == "word":
        seq_a, seq_b = a.split(), b.split()
    else:
        raise ValueError(f"mode must be 'char' or 'word', got {mode!r}")
    return edit_distance(seq_a, seq_b) / max(len(seq_a), len(seq_b), 1)


def verify_transcript(
    asr: str,
    corrected: str,
    *,
    mode: str = "char",
    max_ratio: float = 0.5,
    stage: str = "transcript",
) -> FilterVerdict:
    """Keep iff the normalized edit ratio does not exceed max_ratio.

    Both inputs are expected to be pre-normalized (normalize_text). The
    threshold itself is kept: only strictly larger ratios discard.
    """
    ratio = transcript_ratio(asr, corrected, mode=mode)
    if ratio <= max_ratio:
        return FilterVerdict(stage, True, f"edit ratio {ratio:.3f} within {max_ratio}", ratio)
    return FilterVerdict(stage, False, f"edit ratio {ratio:.3f} exceeds {max_ratio}", ratio)


def canonical_label(label: str) -> str:
    lowered = str(label).strip().lower()
    m = _LABEL_RE.fullmatch(lowered)
    return m.group(1) if m else lowered


def verify_speakers(
    diar_labels,
    response: CorrectionResponse,
    *,
    reference_attrs=None,
    stage: str = "speakers",
):
    """Cross-check corrector speakers against diarization labels.

    Discards on a count mismatch or when the label sets cannot be
    matched one-to-one (after canonicalization: spk0 == speaker_0 == 0).
    For kept samples, returns attributes patched so that anything absent
    or contradicted by `reference_attrs` (canonical label -> (gender,
    age)) becomes unknown.
    """
    diar = {canonical_label(lab) for lab in diar_labels}
    resp_labels = [canonical_label(a.label) for a in response.speakers]
    if len(diar) != len(response.speakers):
        verdict = FilterVerdict(
            stage,
            False,
            f"speaker count mismatch: diarization {len(diar)}, corrector {len(response.speakers)}",
            float(len(response.speakers)),
        )
        return verdict, ()
    if len(set(resp_labels)) != len(resp_labels) or set(resp_labels) != diar:
        verdict = FilterVerdict(
            stage,
            False,
            f"speaker labels do not match 1-1: diarization {sorted(diar)}, corrector {sorted(resp_labels)}",
        )
        return verdict, ()

    reference = {canonical_label(k): v for k, v in (reference_attrs or {}).items()}
    patched = []
    for attrs in response.speakers:
        gender, age = attrs.gender, attrs.age
        ref = reference.get(canonical_label(attrs.label))
        if ref is not None:
            ref_gender, ref_age = ref
            if ref_gender not in (Gender.UNKNOWN, gender):
                gender = Gender.UNKNOWN
            if ref_age not in (AgeGroup.UNKNOWN, age):
                age = AgeGroup.UNKNOWN
        patched.append(SpeakerAttrs(attrs.label, gender, age, attrs.timbre))
    verdict = FilterVerdict(stage, True, "speaker labels match 1-1", float(len(patched)))
    return verdict, tuple(patched)


def categorize_scene(has_face_data: bool, n_speakers: int) -> Scene:
    """Decision table over face presence and active-speaker count."""
    if n_speakers < 1:
        raise ValueError(f"scene categorization needs >= 1 speaker, got {n_speakers}")
    if n_speakers == 1:
        return Scene.MONOLOGUE if has_face_data else Scene.NARRATION
    if n_speakers == 2:
        return Scene.DIALOGUE
    return Scene.MULTI_SPEAKER
