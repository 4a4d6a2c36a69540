"""CLI and stage orchestration."""

from dubkit.pipeline.stages import (
    STAGE_ORDER,
    RunContext,
    RunReport,
    StageFailure,
    StagePlan,
    run,
    stage_hash,
)
from dubkit.pipeline.stats import DatasetStats, build_testset, clue_token_count, compute_stats

__all__ = [
    "DatasetStats",
    "RunContext",
    "RunReport",
    "STAGE_ORDER",
    "StageFailure",
    "StagePlan",
    "build_testset",
    "clue_token_count",
    "compute_stats",
    "run",
    "stage_hash",
]
