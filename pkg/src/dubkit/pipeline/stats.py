"""Dataset statistics and deterministic test-set construction.

Statistics cover the kept samples only (discarded and failed records
describe pipeline behavior, not the dataset). Clue lengths count CJK
characters as one token each plus whitespace-delimited runs otherwise,
so Chinese and Latin clues measure comparably.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from dubkit.formats.manifest import SampleRecord, Scene, SCENE_ORDER

log = logging.getLogger(__name__)

_CLUE_TOKEN_RE = re.compile(
    r"[㐀-䶿一-鿿]|[^\s㐀-䶿一-鿿]+"
)


def clue_token_count(text: str) -> int:
    return len(_CLUE_TOKEN_RE.findall(text))


@dataclass
class DatasetStats:
    total_samples: int = 0
    total_hours: float = 0.0
    avg_clip_seconds: float = 0.0
    scene_counts: dict[str, int] = field(default_factory=dict)
    scene_fractions: dict[str, float] = field(default_factory=dict)
    gender_counts: dict[str, int] = field(default_factory=dict)
    gender_fractions: dict[str, float] = field(default_factory=dict)
    age_counts: dict[str, int] = field(default_factory=dict)
    age_fractions: dict[str, float] = field(default_factory=dict)
    clue_length_mean: float = 0.0
    clue_length_variance: float = 0.0
    non_neutral_emotion_fraction: float = 0.0

    def to_dict(self) -> dict:
        return {
            "total_samples": self.total_samples,
            "total_hours": self.total_hours,
            "avg_clip_seconds": self.avg_clip_seconds,
            "scene_counts": dict(sorted(self.scene_counts.items())),
            "scene_fractions": dict(sorted(self.scene_fractions.items())),
            "gender_counts": dict(sorted(self.gender_counts.items())),
            "gender_fractions": dict(sorted(self.gender_fractions.items())),
            "age_counts": dict(sorted(self.age_counts.items())),
            "age_fractions": dict(sorted(self.age_fractions.items())),
            "clue_length_mean": self.clue_length_mean,
            "clue_length_variance": self.clue_length_variance,
            "non_neutral_emotion_fraction": self.non_neutral_emotion_fraction,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fractions(counts: dict[str, int]) -> dict[str, float]:
    total = sum(counts.values())
    if not total:
        return {}
    return {key: value / total for key, value in counts.items()}


def compute_stats(records, *, include_discarded: bool = False) -> DatasetStats:
    """Exact counting over the manifest; see module docstring for scope."""
    pool = [r for r in records if include_discarded or r.kept]
    stats = DatasetStats(total_samples=len(pool))
    if not pool:
        return stats

    durations = [r.duration_s for r in pool]
    stats.total_hours = sum(durations) / 3600.0
    stats.avg_clip_seconds = sum(durations) / len(durations)

    for record in pool:
        if record.scene is not None:
            key = record.scene.value
            stats.scene_counts[key] = stats.scene_counts.get(key, 0) + 1
        seen: dict[int, tuple] = {}
        for t in record.tuples:
            seen.setdefault(t.spk, (t.gender.value, t.age.value))
        for gender, age in seen.values():
            stats.gender_counts[gender] = stats.gender_counts.get(gender, 0) + 1
            stats.age_counts[age] = stats.age_counts.get(age, 0) + 1
    stats.scene_fractions = _fractions(stats.scene_counts)
    stats.gender_fractions = _fractions(stats.gender_counts)
    stats.age_fractions = _fractions(stats.age_counts)

    clue_lengths = [clue_token_count(r.clue) for r in pool if r.clue]
    if clue_lengths:
        mean = sum(clue_lengths) / len(clue_lengths)
        stats.clue_length_mean = mean
        stats.clue_length_variance = sum((x - mean) ** 2 for x in clue_lengths) / len(
            clue_lengths
        )

    non_neutral = sum(
        1 for r in pool if r.emotion is not None and r.emotion.lower() != "neutral"
    )
    stats.non_neutral_emotion_fraction = non_neutral / len(pool)
    return stats


def build_testset(records, per_series: int = 4):
    """Select per_series samples per series, one per scene category.

    Within a (series, scene) bucket the lexicographically smallest clip
    id wins; series lacking a scene contribute fewer samples, each
    logged as a warning. Returns (selected records, warnings).
    """
    if not 1 <= per_series <= len(SCENE_ORDER):
        raise ValueError(f"per_series must be in 1..{len(SCENE_ORDER)}, got {per_series}")
    kept = [r for r in records if r.kept]
    missing_series = sorted(r.clip_id for r in kept if not r.series)
    if missing_series:
        raise ValueError(
            f"records without a series id: {', '.join(missing_series[:5])}"
            + (" ..." if len(missing_series) > 5 else "")
        )

    by_bucket: dict[tuple[str, Scene], SampleRecord] = {}
    for record in kept:
        if record.scene is None:
            continue
        bucket = (record.series, record.scene)
        current = by_bucket.get(bucket)
        if current is None or record.clip_id < current.clip_id:
            by_bucket[bucket] = record

    warnings: list[str] = []
    selected: list[SampleRecord] = []
    wanted = SCENE_ORDER[:per_series]
    for series in sorted({r.series for r in kept}):
        for scene in wanted:
            record = by_bucket.get((series, scene))
            if record is None:
                message = f"series {series!r} has no {scene.value} sample"
                warnings.append(message)
                log.warning("%s", message)
            else:
                selected.append(record)
    return selected, warnings
