"""Line-delimited manifest of per-clip sample records.

One JSON object per line, UTF-8, schema documented in docs/manifest.md.
Known fields are written in a fixed order and unknown fields are
preserved verbatim (SampleRecord.extra), so write -> read -> write is
byte-identical and the format stays forward compatible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from dubkit.flow import ConditioningPlan
from dubkit.tst import AgeGroup, Gender, TimestampSpeakerTuple, validate_tuples


class Scene(str, Enum):
    MONOLOGUE = "monologue"
    NARRATION = "narration"
    DIALOGUE = "dialogue"
    MULTI_SPEAKER = "multi-speaker"


# canonical ordering used by reports and test-set construction
SCENE_ORDER = (Scene.MONOLOGUE, Scene.NARRATION, Scene.DIALOGUE, Scene.MULTI_SPEAKER)


class ManifestError(ValueError):
    """Schema violation; carries the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class FilterVerdict:
    """Outcome of one filtering stage for one sample."""

    stage: str
    keep: bool
    reason: str
    value: float | None = None

    def __post_init__(self) -> None:
        if not self.stage:
            raise ValueError("verdict stage must be nonempty")
        if not self.keep and not self.reason:
            raise ValueError("a discarding verdict must state its reason")


@dataclass
class SampleRecord:
    """Full annotation bundle for one video-audio clip."""

    clip_id: str
    duration_s: float
    transcript: str = ""
    clue: str = ""
    scene: Scene | None = None
    tuples: tuple[TimestampSpeakerTuple, ...] = ()
    artifacts: dict[str, str] = field(default_factory=dict)
    emotion: str | None = None
    verdicts: list[FilterVerdict] = field(default_factory=list)
    ssc_plan: ConditioningPlan | None = None
    series: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.clip_id:
            raise ValueError("clip_id must be nonempty")
        if self.duration_s < 0:
            raise ValueError(f"negative duration: {self.duration_s}")
        self.tuples = tuple(self.tuples)
        validate_tuples(self.tuples)
        if self.scene is not None:
            self.scene = Scene(self.scene)

    @property
    def kept(self) -> bool:
        return all(v.keep for v in self.verdicts) and "failure" not in self.extra

    @property
    def failed(self) -> bool:
        return "failure" in self.extra

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "clip_id": self.clip_id,
            "series": self.series,
            "duration_s": self.duration_s,
            "scene": self.scene.value if self.scene else None,
            "transcript": self.transcript,
            "clue": self.clue,
            "emotion": self.emotion,
            "tuples": [
                [t.start, t.spk, t.gender.value, t.age.value, t.end] for t in self.tuples
            ],
            "artifacts": dict(self.artifacts),
            "verdicts": [
                {"stage": v.stage, "keep": v.keep, "reason": v.reason, "value": v.value}
                for v in self.verdicts
            ],
            "ssc_plan": self.ssc_plan.to_dict() if self.ssc_plan else None,
        }
        for key, value in self.extra.items():
            if key not in d:
                d[key] = value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SampleRecord":
        known = {
            "clip_id",
            "series",
            "duration_s",
            "scene",
            "transcript",
            "clue",
            "emotion",
            "tuples",
            "artifacts",
            "verdicts",
            "ssc_plan",
        }
        if "clip_id" not in d or "duration_s" not in d:
            missing = sorted({"clip_id", "duration_s"} - d.keys())
            raise ValueError(f"missing required fields: {', '.join(missing)}")
        tuples = tuple(
            TimestampSpeakerTuple(int(s), int(spk), Gender(g), AgeGroup(a), int(e))
            for s, spk, g, a, e in d.get("tuples") or []
        )
        verdicts = [
            FilterVerdict(v["stage"], bool(v["keep"]), v["reason"], v.get("value"))
            for v in d.get("verdicts") or []
        ]
        plan = d.get("ssc_plan")
        return cls(
            clip_id=d["clip_id"],
            duration_s=float(d["duration_s"]),
            transcript=d.get("transcript") or "",
            clue=d.get("clue") or "",
            scene=Scene(d["scene"]) if d.get("scene") else None,
            tuples=tuples,
            artifacts=dict(d.get("artifacts") or {}),
            emotion=d.get("emotion"),
            verdicts=verdicts,
            ssc_plan=ConditioningPlan.from_dict(plan) if plan else None,
            series=d.get("series"),
            extra={k: v for k, v in d.items() if k not in known},
        )


def serialize_manifest(records: list[SampleRecord]) -> str:
    lines = [
        json.dumps(r.to_dict(), ensure_ascii=False, separators=(",", ":")) for r in records
    ]
    return "\n".join(lines) + "\n" if lines else ""


def parse_manifest(data: bytes | str) -> list[SampleRecord]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    records = []
    for lineno, line in enumerate(data.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ManifestError(lineno, "record must be a JSON object")
        try:
            records.append(SampleRecord.from_dict(obj))
        except (ValueError, KeyError, TypeError) as exc:
            raise ManifestError(lineno, str(exc)) from None
    return records


def read_manifest(path) -> list[SampleRecord]:
    with open(path, "rb") as fh:
        return parse_manifest(fh.read())


def write_manifest(path, records: list[SampleRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_manifest(records))
