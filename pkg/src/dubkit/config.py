"""Pipeline configuration: one human-readable YAML file.

Every stage reads its block from here; fps is global because all frame
indices in one manifest share one grid. Unknown keys are rejected so
typos fail before any sample is processed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import yaml


class ConfigError(ValueError):
    pass


@dataclass
class VocabSettings:
    max_speakers: int = 16
    n_frames: int = 1500


@dataclass
class DiarizeSettings:
    beta: float = 0.3
    threshold: float = 0.35
    max_speakers: int = 16
    method: str = "ahc"
    merge_adjacent: bool = False


@dataclass
class CorrectSettings:
    template_id: str = "correction_v1"
    edit_mode: str = "char"          # char for CJK scripts, word for Latin
    max_ratio: float = 0.5
    transport: str = "mock"          # mock | subprocess | http
    fixture_dir: str | None = None
    command: list[str] | None = None
    endpoint: str | None = None
    timeout_s: float = 60.0
    parallelism: int = 4
    char_map_path: str | None = None


@dataclass
class SscSettings:
    neighborhood: int = 25


@dataclass
class MetricsSettings:
    vad_source: str = "external"     # recorded in report metadata


@dataclass
class PipelineConfig:
    fps: int = 25
    seed: int = 0
    jobs: int = 1
    vocab: VocabSettings = field(default_factory=VocabSettings)
    diarize: DiarizeSettings = field(default_factory=DiarizeSettings)
    correct: CorrectSettings = field(default_factory=CorrectSettings)
    ssc: SscSettings = field(default_factory=SscSettings)
    metrics: MetricsSettings = field(default_factory=MetricsSettings)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "vocab": VocabSettings,
    "diarize": DiarizeSettings,
    "correct": CorrectSettings,
    "ssc": SscSettings,
    "metrics": MetricsSettings,
}


def _build_section(cls, data, path: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    return cls(**data)


def config_from_dict(data: dict | None) -> PipelineConfig:
    if data is None:
        return PipelineConfig()
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    top_fields = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(data) - top_fields)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs: dict = {}
    for key in ("fps", "seed", "jobs"):
        if key in data:
            kwargs[key] = data[key]
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    cfg = PipelineConfig(**kwargs)
    if cfg.fps <= 0:
        raise ConfigError(f"fps must be positive, got {cfg.fps}")
    if cfg.jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {cfg.jobs}")
    return cfg


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return config_from_dict(data)
