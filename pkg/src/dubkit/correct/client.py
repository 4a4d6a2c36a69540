"""Client contract for the external multimodal correction service.

The toolkit never runs the correction model itself. A request carries
the clean vocal-track reference, the ASR transcript and the diarization
tuples; any transport that accepts the canonical JSON payload and
returns the documented JSON response satisfies the contract
(docs/mllm-contract.md). Requests are content-addressed with a sha-256
key so retries are idempotent; the mock transport is deterministic and
is what every test uses.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from dubkit.tst import AgeGroup, Gender

_REQUIRED_FIELDS = (
    "transcript",
    "speaker_count",
    "speakers",
    "clue_long",
    "clue_short",
    "emotion",
)


class ResponseParseError(ValueError):
    pass


class TemplateNotFoundError(KeyError):
    pass


@dataclass(frozen=True)
class CorrectionRequest:
    """Inputs handed to the corrector for one clip."""

    vocal_ref: str
    transcript: str
    tuples: tuple  # (start_s, speaker_label, end_s), sorted, non-overlapping

    def __post_init__(self) -> None:
        tuples = tuple((float(s), str(spk), float(e)) for s, spk, e in self.tuples)
        prev_end = None
        for start, _spk, end in tuples:
            if start < 0 or end <= start:
                raise ValueError(f"invalid tuple span [{start}, {end})")
            if prev_end is not None and start < prev_end:
                raise ValueError("diarization tuples must be sorted and non-overlapping")
            prev_end = end
        object.__setattr__(self, "tuples", tuples)

    def to_payload(self) -> dict:
        return {
            "vocal_ref": self.vocal_ref,
            "transcript": self.transcript,
            "tuples": [[s, spk, e] for s, spk, e in self.tuples],
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_payload(), ensure_ascii=False, sort_keys=True)

    def request_key(self) -> str:
        """Content address used for retry idempotence and mock fixtures."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class SpeakerAttrs:
    label: str
    gender: Gender
    age: AgeGroup
    timbre: tuple[str, ...] = ()


@dataclass(frozen=True)
class CorrectionResponse:
    transcript: str
    speakers: tuple[SpeakerAttrs, ...]
    clue_long: str
    clue_short: str
    emotion: str

    @property
    def speaker_count(self) -> int:
        return len(self.speakers)


def _coerce_enum(enum_cls, raw) -> object:
    try:
        return enum_cls(str(raw).strip().lower())
    except ValueError:
        return enum_cls.UNKNOWN


def parse_response(raw: str) -> CorrectionResponse:
    """Parse and normalize a corrector response.

    Unrecognized gender/age strings coerce to `unknown`; missing
    required fields are an error listing all of them at once.
    """
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ResponseParseError(f"response is not valid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ResponseParseError("response must be a JSON object")
    missing = [f for f in _REQUIRED_FIELDS if f not in obj]
    if missing:
        raise ResponseParseError(f"missing required fields: {', '.join(missing)}")
    raw_speakers = obj["speakers"]
    if not isinstance(raw_speakers, list):
        raise ResponseParseError("'speakers' must be a list")
    speakers = []
    for i, spk in enumerate(raw_speakers):
        if not isinstance(spk, dict) or "label" not in spk:
            raise ResponseParseError(f"speaker {i} must be an object with a 'label'")
        timbre = spk.get("timbre") or []
        if isinstance(timbre, str):
            timbre = timbre.split()
        speakers.append(
            SpeakerAttrs(
                label=str(spk["label"]),
                gender=_coerce_enum(Gender, spk.get("gender", "unknown")),
                age=_coerce_enum(AgeGroup, spk.get("age", "unknown")),
                timbre=tuple(str(t) for t in timbre),
            )
        )
    if int(obj["speaker_count"]) != len(speakers):
        raise ResponseParseError(
            f"speaker_count {obj['speaker_count']} does not match {len(speakers)} speaker entries"
        )
    return CorrectionResponse(
        transcript=str(obj["transcript"]),
        speakers=tuple(speakers),
        clue_long=str(obj["clue_long"]),
        clue_short=str(obj["clue_short"]),
        emotion=str(obj["emotion"]),
    )


def render_prompt(request: CorrectionRequest, template_id: str = "correction_v1", template_dir=None) -> str:
    """Fill the named template with the request fields (deterministic)."""
    if template_dir is not None:
        path = Path(template_dir) / f"{template_id}.txt"
        if not path.is_file():
            raise TemplateNotFoundError(f"no template {template_id!r} in {template_dir}")
        template = path.read_text(encoding="utf-8")
    else:
        ref = resources.files("dubkit.correct") / "templates" / f"{template_id}.txt"
        if not ref.is_file():
            raise TemplateNotFoundError(f"no bundled template {template_id!r}")
        template = ref.read_text(encoding="utf-8")
    if request.tuples:
        table = "\n".join(f"{s:.3f}\t{spk}\t{e:.3f}" for s, spk, e in request.tuples)
    else:
        table = "(none)"
    return template.format(
        vocal_ref=request.vocal_ref,
        transcript=request.transcript,
        tuple_count=len(request.tuples),
        tuple_table=table,
    )


class SubprocessTransport:
    """Pipe the payload into a local command; stdout is the response."""

    def __init__(self, argv: list[str]):
        self.argv = list(argv)

    def send(self, payload: str, *, timeout_s: float) -> str:
        proc = subprocess.run(
            self.argv,
            input=payload.encode("utf-8"),
            stdout=subprocess.PIPE,
            timeout=timeout_s,
            check=True,
        )
        return proc.stdout.decode("utf-8")


class HttpTransport:
    """POST the payload as JSON; the response body is the raw response."""

    def __init__(self, endpoint: str):
        self.endpoint = endpoint

    def send(self, payload: str, *, timeout_s: float) -> str:
        req = urllib.request.Request(
            self.endpoint,
            data=payload.encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=timeout_s) as resp:
            return resp.read().decode("utf-8")


class MockTransport:
    """Deterministic stand-in used by every test.

    With a fixture directory, a request whose key matches
    <fixture_dir>/<request_key>.json gets that canned response;
    otherwise the response echoes the transcript, reports the request's
    own speaker labels with unknown attributes, and derives the clues
    from the payload. Stateless, so bounded-parallel calls are safe.
    """

    def __init__(self, fixture_dir=None):
        self.fixture_dir = Path(fixture_dir) if fixture_dir else None

    def send(self, payload: str, *, timeout_s: float) -> str:
        request = json.loads(payload)
        if self.fixture_dir is not None:
            key = hashlib.sha256(
                json.dumps(request, ensure_ascii=False, sort_keys=True).encode("utf-8")
            ).hexdigest()[:16]
            canned = self.fixture_dir / f"{key}.json"
            if canned.is_file():
                return canned.read_text(encoding="utf-8")
        labels = []
        for _s, spk, _e in request.get("tuples", []):
            if spk not in labels:
                labels.append(spk)
        transcript = request.get("transcript", "")
        response = {
            "transcript": transcript,
            "speaker_count": len(labels),
            "speakers": [
                {"label": lab, "gender": "unknown", "age": "unknown", "timbre": ["steady"]}
                for lab in labels
            ],
            "clue_long": f"{len(labels)} speaker(s) deliver the line: {transcript}",
            "clue_short": f"{len(labels)} speaker(s)",
            "emotion": "neutral",
        }
        return json.dumps(response, ensure_ascii=False)


class MllmClient:
    """Issues correction requests over a transport and parses the result."""

    def __init__(self, transport, *, timeout_s: float = 60.0):
        self.transport = transport
        self.timeout_s = timeout_s

    def correct(self, request: CorrectionRequest) -> CorrectionResponse:
        raw = self.transport.send(request.canonical_json(), timeout_s=self.timeout_s)
        return parse_response(raw)
