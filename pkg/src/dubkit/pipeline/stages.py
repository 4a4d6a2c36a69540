"""Stage orchestration over manifest records.

Every stage is a pure per-record transform given the config; the runner
applies them in canonical order with sample-level data parallelism and
merges results in input order, so output manifests are byte-identical
for any worker count. Discarded samples keep their verdict history and
skip later stages; samples with missing artifacts are marked failed and
the run continues. Idempotence comes from per-stage content hashes
recorded on each record: re-running an already-processed manifest is a
no-op.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dubkit import artifacts, diarize, flow, metrics
from dubkit.config import ConfigError, PipelineConfig
from dubkit.correct import (
    CorrectionRequest,
    HttpTransport,
    MllmClient,
    MockTransport,
    SubprocessTransport,
    canonical_label,
    categorize_scene,
    normalize_text,
    verify_speakers,
    verify_transcript,
)
from dubkit.correct.textnorm import DEFAULT_TABLES, load_tables
from dubkit.formats.manifest import (
    FilterVerdict,
    SampleRecord,
    read_manifest,
    write_manifest,
)
from dubkit.formats.rttm import serialize_rttm
from dubkit.formats.srt import SrtParseError, read_srt
from dubkit.formats.timecode import FrameInterval, timecode_to_frame
from dubkit.metrics import IntervalSet
from dubkit.tst import TimestampSpeakerTuple, TstEncodeError, TstVocabulary
from dubkit.tst import encode as tst_encode

log = logging.getLogger(__name__)

STAGE_ORDER = (
    "segment-ingest",
    "separation-ingest",
    "overlap-filter",
    "diarize",
    "correct",
    "scene",
    "tokenize",
    "ssc-plan",
    "metrics",
    "stats",
)


class StageFailure(RuntimeError):
    """Per-sample hard failure (missing artifact, inconsistent data)."""


@dataclass(frozen=True)
class StagePlan:
    stages: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        unknown = [s for s in self.stages if s not in STAGE_ORDER]
        if unknown:
            raise ConfigError(f"unknown stages: {', '.join(unknown)}")
        if len(set(self.stages)) != len(self.stages):
            raise ConfigError("stages must be unique")
        order = [STAGE_ORDER.index(s) for s in self.stages]
        if order != sorted(order):
            raise ConfigError(
                f"stages must respect the canonical order {', '.join(STAGE_ORDER)}"
            )


@dataclass
class RunContext:
    config: PipelineConfig
    root: Path
    out_dir: Path
    client: MllmClient | None = None
    client_gate: threading.BoundedSemaphore | None = None
    tables: object = DEFAULT_TABLES

    def artifact_path(self, record: SampleRecord, role: str) -> Path:
        """Resolve an artifact ref; relative refs are manifest-relative."""
        ref = record.artifacts.get(role)
        if not ref:
            raise StageFailure(f"missing artifact: {role}")
        path = Path(ref)
        if not path.is_absolute():
            path = Path(os.path.normpath(self.root / path))
        if not path.is_file():
            raise StageFailure(f"missing artifact file: {role} -> {path}")
        return path


def _clip_frames(record: SampleRecord, fps: int) -> int:
    return int(math.ceil(record.duration_s * fps))


def _validate_segments(segments, limit: int):
    prev_end = 0
    out = []
    for raw in segments:
        start, end = int(raw[0]), int(raw[1])
        if start < prev_end:
            raise StageFailure(f"segments overlap or are unsorted at [{start}, {end})")
        if end <= start:
            raise StageFailure(f"empty segment [{start}, {end})")
        if end > limit:
            raise StageFailure(f"segment [{start}, {end}) extends beyond the {limit}-frame clip")
        out.append((start, end))
        prev_end = end
    return out


def stage_segment_ingest(record: SampleRecord, ctx: RunContext) -> None:
    fps = ctx.config.fps
    limit = _clip_frames(record, fps)
    if "srt" in record.artifacts:
        try:
            cues = read_srt(ctx.artifact_path(record, "srt"))
        except (OSError, SrtParseError) as exc:
            raise StageFailure(f"cannot ingest srt: {exc}") from None
        segments = []
        for cue in cues:
            start = timecode_to_frame(cue.start, fps)
            end = timecode_to_frame(cue.end, fps)
            # sub-frame cues still occupy their starting frame
            segments.append([start, max(end, start + 1)])
        record.extra["segments"] = _validate_segments(segments, limit)
        if not record.transcript:
            record.transcript = "\n".join(cue.text for cue in cues)
    else:
        record.extra["segments"] = _validate_segments(record.extra.get("segments", []), limit)


def stage_separation_ingest(record: SampleRecord, ctx: RunContext) -> None:
    ctx.artifact_path(record, "vocal")


def stage_overlap_filter(record: SampleRecord, ctx: RunContext) -> None:
    intervals = record.extra.get("overlap_intervals", [])
    overlap = IntervalSet.from_unsorted(intervals)
    limit = _clip_frames(record, ctx.config.fps)
    overlapped = overlap.overlap_frames(0, limit) if len(overlap) else 0
    if overlapped:
        record.verdicts.append(
            FilterVerdict(
                "overlap-filter",
                False,
                f"{overlapped} frames of overlapped speech intersect the clip",
                float(overlapped),
            )
        )
    else:
        record.verdicts.append(
            FilterVerdict("overlap-filter", True, "no overlapped speech detected", 0.0)
        )


def stage_diarize(record: SampleRecord, ctx: RunContext) -> None:
    segments = record.extra.get("segments", [])
    if not segments:
        record.verdicts.append(
            FilterVerdict("diarize", False, "no speech segments to diarize")
        )
        return
    cfg = ctx.config.diarize
    fps = ctx.config.fps
    intervals = tuple(FrameInterval(s, e, fps) for s, e in segments)
    audio = artifacts.read_array(ctx.artifact_path(record, "segment_audio_embeddings"))
    if audio.ndim != 2 or audio.shape[0] != len(intervals):
        raise StageFailure(
            f"segment_audio_embeddings holds {audio.shape[0]} rows for {len(intervals)} segments"
        )
    visual = None
    if "segment_visual_embeddings" in record.artifacts:
        visual = artifacts.read_array(ctx.artifact_path(record, "segment_visual_embeddings"))
        if visual.shape[0] != len(intervals):
            raise StageFailure("segment_visual_embeddings row count mismatch")
    embeddings = diarize.SegmentEmbeddings(intervals, audio, visual)
    labels = diarize.diarize_clip(
        embeddings,
        beta=cfg.beta,
        threshold=cfg.threshold,
        max_speakers=min(cfg.max_speakers, ctx.config.vocab.max_speakers),
        method=cfg.method,
        seed=ctx.config.seed,
    )
    record.tuples = tuple(
        TimestampSpeakerTuple(iv.start, int(lab), "unknown", "unknown", iv.end)
        for iv, lab in zip(intervals, labels)
    )
    rttm_dir = ctx.out_dir / "rttm"
    rttm_dir.mkdir(parents=True, exist_ok=True)
    rttm_path = rttm_dir / f"{record.clip_id}.rttm"
    entries = diarize.labels_to_rttm(
        labels, intervals, record.clip_id, merge_adjacent=cfg.merge_adjacent
    )
    rttm_path.write_text(serialize_rttm(entries), encoding="utf-8")
    record.artifacts["rttm"] = str(rttm_path)


def stage_correct(record: SampleRecord, ctx: RunContext) -> None:
    if ctx.client is None:
        raise StageFailure("no corrector transport configured")
    cfg = ctx.config.correct
    fps = ctx.config.fps
    request = CorrectionRequest(
        vocal_ref=record.artifacts.get("vocal", ""),
        transcript=record.transcript,
        tuples=tuple((t.start / fps, f"spk{t.spk}", t.end / fps) for t in record.tuples),
    )
    gate = ctx.client_gate if ctx.client_gate is not None else nullcontext()
    try:
        with gate:
            response = ctx.client.correct(request)
    except Exception as exc:
        raise StageFailure(f"corrector request failed: {exc}") from None

    asr_norm = normalize_text(record.transcript, ctx.tables)
    corrected_norm = normalize_text(response.transcript, ctx.tables)
    transcript_verdict = verify_transcript(
        asr_norm,
        corrected_norm,
        mode=cfg.edit_mode,
        max_ratio=cfg.max_ratio,
        stage="correct.transcript",
    )
    speakers_verdict, patched = verify_speakers(
        {f"spk{t.spk}" for t in record.tuples}, response, stage="correct.speakers"
    )
    record.verdicts.append(transcript_verdict)
    record.verdicts.append(speakers_verdict)
    if not (transcript_verdict.keep and speakers_verdict.keep):
        return

    record.transcript = corrected_norm
    record.clue = response.clue_long
    record.extra["clue_short"] = response.clue_short
    record.emotion = response.emotion
    attr_by_spk = {}
    for attrs in patched:
        key = canonical_label(attrs.label)
        if key.isdigit():
            attr_by_spk[int(key)] = attrs
    record.tuples = tuple(
        TimestampSpeakerTuple(
            t.start,
            t.spk,
            attr_by_spk[t.spk].gender if t.spk in attr_by_spk else t.gender,
            attr_by_spk[t.spk].age if t.spk in attr_by_spk else t.age,
            t.end,
        )
        for t in record.tuples
    )


def stage_scene(record: SampleRecord, ctx: RunContext) -> None:
    speakers = {t.spk for t in record.tuples}
    if not speakers:
        record.verdicts.append(FilterVerdict("scene", False, "no active speakers"))
        return
    has_face = "face_embeddings" in record.artifacts
    record.scene = categorize_scene(has_face, len(speakers))


def stage_tokenize(record: SampleRecord, ctx: RunContext) -> None:
    vocab = TstVocabulary(
        max_speakers=ctx.config.vocab.max_speakers, n_frames=ctx.config.vocab.n_frames
    )
    try:
        tokens = tst_encode(record.tuples, vocab)
    except TstEncodeError as exc:
        record.verdicts.append(FilterVerdict("tokenize", False, str(exc)))
        return
    token_dir = ctx.out_dir / "ts_tokens"
    token_dir.mkdir(parents=True, exist_ok=True)
    path = token_dir / f"{record.clip_id}.dka"
    artifacts.write_array(path, tokens.astype(np.uint32))
    record.artifacts["ts_tokens"] = str(path)


def stage_ssc_plan(record: SampleRecord, ctx: RunContext) -> None:
    tokens = artifacts.read_array(ctx.artifact_path(record, "speech_tokens"))
    if tokens.ndim != 1:
        raise StageFailure("speech_tokens artifact must be a 1-D token sequence")
    try:
        record.ssc_plan = flow.build_ssc_plan(
            tokens, record.tuples, neighborhood=ctx.config.ssc.neighborhood
        )
    except ValueError as exc:
        raise StageFailure(f"cannot build conditioning plan: {exc}") from None


def stage_metrics(record: SampleRecord, ctx: RunContext) -> None:
    row: dict[str, float] = {}
    have = record.artifacts.__contains__

    if have("ref_cepstra") and have("syn_cepstra"):
        ref = artifacts.read_array(ctx.artifact_path(record, "ref_cepstra"))
        syn = artifacts.read_array(ctx.artifact_path(record, "syn_cepstra"))
        row["MCD-DTW"] = metrics.mcd_dtw(ref, syn)
        row["MCD-DTW-SL"] = metrics.mcd_dtw_sl(ref, syn)

    if record.tuples and "syn_active" in record.extra:
        predicted = IntervalSet.from_unsorted(record.extra["syn_active"])
        reference = [(t.start, t.end) for t in record.tuples]
        row["SPK-TL"] = metrics.spk_tl(reference, predicted)

    syn_transcript = record.extra.get("syn_transcript")
    if syn_transcript is not None and record.transcript:
        row["CER(%)"] = 100.0 * metrics.cer(record.transcript, syn_transcript)
        if any(ch.isspace() for ch in record.transcript.strip()):
            row["WER(%)"] = 100.0 * metrics.wer(record.transcript, syn_transcript)

    if record.tuples and have("syn_speaker_frame_embeddings") and have("ref_speaker_embeddings"):
        frames = artifacts.read_array(ctx.artifact_path(record, "syn_speaker_frame_embeddings"))
        refs = artifacts.read_array(ctx.artifact_path(record, "ref_speaker_embeddings"))
        sims = []
        for spk in sorted({t.spk for t in record.tuples}):
            if spk >= refs.shape[0]:
                raise StageFailure(f"no reference speaker embedding for spk{spk}")
            intervals = [(t.start, t.end) for t in record.tuples if t.spk == spk]
            sims.append(metrics.spk_sim(frames, intervals, refs[spk]))
        row["SPK-SIM(%)"] = 100.0 * float(np.mean(sims))

    if have("ref_emotion_embedding") and have("syn_emotion_embedding"):
        ref = artifacts.read_array(ctx.artifact_path(record, "ref_emotion_embedding"))
        syn = artifacts.read_array(ctx.artifact_path(record, "syn_emotion_embedding"))
        row["EMO-SIM(%)"] = 100.0 * metrics.cosine_sim(ref, syn)

    for key, value in (record.extra.get("scores") or {}).items():
        row.setdefault(key, float(value))
    record.extra["metrics"] = row


_STAGE_FNS = {
    "segment-ingest": stage_segment_ingest,
    "separation-ingest": stage_separation_ingest,
    "overlap-filter": stage_overlap_filter,
    "diarize": stage_diarize,
    "correct": stage_correct,
    "scene": stage_scene,
    "tokenize": stage_tokenize,
    "ssc-plan": stage_ssc_plan,
    "metrics": stage_metrics,
}

# config surface each stage depends on, for idempotence hashing
_STAGE_CONFIG = {
    "segment-ingest": lambda c: {"fps": c.fps},
    "separation-ingest": lambda c: {},
    "overlap-filter": lambda c: {"fps": c.fps},
    "diarize": lambda c: {"fps": c.fps, "seed": c.seed, **vars(c.diarize)},
    "correct": lambda c: {"fps": c.fps, **vars(c.correct)},
    "scene": lambda c: {},
    "tokenize": lambda c: vars(c.vocab),
    "ssc-plan": lambda c: vars(c.ssc),
    "metrics": lambda c: vars(c.metrics),
}


def stage_hash(stage: str, config: PipelineConfig) -> str:
    payload = json.dumps(
        {"stage": stage, "config": _STAGE_CONFIG[stage](config)},
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


@dataclass
class RunReport:
    stages: tuple[str, ...]
    total: int
    kept: int
    discarded: int
    failed: int
    discarded_by_stage: dict[str, int] = field(default_factory=dict)
    failed_by_stage: dict[str, int] = field(default_factory=dict)

    def conservation_holds(self) -> bool:
        return self.total == self.kept + self.discarded + self.failed

    def to_dict(self) -> dict:
        return {
            "stages": list(self.stages),
            "total": self.total,
            "kept": self.kept,
            "discarded": self.discarded,
            "failed": self.failed,
            "discarded_by_stage": dict(sorted(self.discarded_by_stage.items())),
            "failed_by_stage": dict(sorted(self.failed_by_stage.items())),
            "conservation_holds": self.conservation_holds(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _build_client(config: PipelineConfig) -> MllmClient:
    cfg = config.correct
    if cfg.transport == "mock":
        transport = MockTransport(fixture_dir=cfg.fixture_dir)
    elif cfg.transport == "subprocess":
        if not cfg.command:
            raise ConfigError("correct.command is required for the subprocess transport")
        transport = SubprocessTransport(cfg.command)
    elif cfg.transport == "http":
        if not cfg.endpoint:
            raise ConfigError("correct.endpoint is required for the http transport")
        transport = HttpTransport(cfg.endpoint)
    else:
        raise ConfigError(f"unknown corrector transport {cfg.transport!r}")
    return MllmClient(transport, timeout_s=cfg.timeout_s)


def _process_record(record: SampleRecord, plan: StagePlan, ctx: RunContext) -> SampleRecord:
    for stage in plan.stages:
        if stage == "stats":
            continue
        if record.failed or not record.kept:
            break
        marker = stage_hash(stage, ctx.config)
        stage_log = record.extra.setdefault("stage_log", {})
        if stage_log.get(stage) == marker:
            continue
        record.verdicts = [v for v in record.verdicts if not v.stage.startswith(stage)]
        try:
            _STAGE_FNS[stage](record, ctx)
        except StageFailure as exc:
            record.extra["failure"] = {"stage": stage, "reason": str(exc)}
            log.warning("clip %s failed at %s: %s", record.clip_id, stage, exc)
            break
        stage_log[stage] = marker
    return record


def _rebase_artifacts(records, root: Path, out_dir: Path) -> None:
    """Re-anchor artifact refs for the output manifest.

    Relative refs are always relative to the manifest that holds them,
    so input-relative refs resolve against the input directory and
    everything re-relativizes against the output directory. Stages store
    the artifacts they write with absolute paths, which normalize here
    too.
    """
    for record in records:
        for role, ref in record.artifacts.items():
            resolved = ref if os.path.isabs(ref) else os.path.normpath(os.path.join(root, ref))
            record.artifacts[role] = os.path.relpath(resolved, out_dir)


def run(
    plan: StagePlan,
    manifest_in,
    manifest_out,
    *,
    config: PipelineConfig | None = None,
    jobs: int | None = None,
) -> RunReport:
    """Run the staged plan over a manifest; see module docstring."""
    config = config or PipelineConfig()
    jobs = jobs if jobs is not None else config.jobs
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    records = read_manifest(manifest_in)

    out_path = Path(manifest_out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(
        config=config,
        root=Path(manifest_in).parent.absolute(),
        out_dir=out_path.parent.absolute(),
    )
    if "correct" in plan.stages:
        ctx.client = _build_client(config)
        ctx.client_gate = threading.BoundedSemaphore(max(1, config.correct.parallelism))
    if config.correct.char_map_path:
        ctx.tables = load_tables(config.correct.char_map_path)

    if jobs == 1:
        results = [_process_record(r, plan, ctx) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda r: _process_record(r, plan, ctx), records))

    _rebase_artifacts(results, ctx.root, ctx.out_dir)
    write_manifest(out_path, results)

    if "metrics" in plan.stages:
        rows = {
            r.clip_id: r.extra["metrics"]
            for r in results
            if r.kept and "metrics" in r.extra
        }
        report = metrics.MetricReport(rows, {"vad_source": config.metrics.vad_source})
        Path(f"{out_path}.metrics.tsv").write_text(report.to_table(), encoding="utf-8")
        Path(f"{out_path}.metrics-summary.json").write_text(
            json.dumps(report.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if "stats" in plan.stages:
        from dubkit.pipeline.stats import compute_stats

        stats = compute_stats(results)
        Path(f"{out_path}.stats.json").write_text(stats.to_json(), encoding="utf-8")

    discarded_by_stage: dict[str, int] = {}
    failed_by_stage: dict[str, int] = {}
    kept = discarded = failed = 0
    for record in results:
        if record.failed:
            failed += 1
            stage = record.extra["failure"].get("stage", "?")
            failed_by_stage[stage] = failed_by_stage.get(stage, 0) + 1
        elif not record.kept:
            discarded += 1
            stage = next(v.stage for v in record.verdicts if not v.keep)
            discarded_by_stage[stage] = discarded_by_stage.get(stage, 0) + 1
        else:
            kept += 1
    report = RunReport(
        stages=plan.stages,
        total=len(results),
        kept=kept,
        discarded=discarded,
        failed=failed,
        discarded_by_stage=discarded_by_stage,
        failed_by_stage=failed_by_stage,
    )
    Path(f"{out_path}.report.json").write_text(report.to_json(), encoding="utf-8")
    return report
