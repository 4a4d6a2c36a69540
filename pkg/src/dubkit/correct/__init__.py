"""Multimodal correction harness: prompts, client contract, verification."""

from dubkit.correct.client import (
    CorrectionRequest,
    CorrectionResponse,
    HttpTransport,
    MllmClient,
    MockTransport,
    ResponseParseError,
    SpeakerAttrs,
    SubprocessTransport,
    TemplateNotFoundError,
    parse_response,
    render_prompt,
)
from dubkit.correct.textnorm import DEFAULT_TABLES, NormalizationTables, load_tables, normalize_text
from dubkit.correct.verify import (
    canonical_label,
    categorize_scene,
    transcript_ratio,
    verify_speakers,
    verify_transcript,
)
from dubkit.formats.manifest import FilterVerdict

__all__ = [
    "CorrectionRequest",
    "CorrectionResponse",
    "DEFAULT_TABLES",
    "FilterVerdict",
    "HttpTransport",
    "MllmClient",
    "MockTransport",
    "NormalizationTables",
    "ResponseParseError",
    "SpeakerAttrs",
    "SubprocessTransport",
    "TemplateNotFoundError",
    "canonical_label",
    "categorize_scene",
    "load_tables",
    "normalize_text",
    "parse_response",
    "render_prompt",
    "transcript_ratio",
    "verify_speakers",
    "verify_transcript",
]
