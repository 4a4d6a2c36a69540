"""Flow-matching arithmetic and speaker-switch plan tests."""

import numpy as np
import pytest

from dubkit.flow import (
    ConditioningPlan,
    SpeakerEmbeddingTable,
    assemble_conditioning,
    assign_flow_roles,
    build_ssc_plan,
    cfg_combine,
    cfg_drop_mask,
    cfm_loss,
    cfm_target,
    ot_interpolate,
    remove_inserted_rows,
)
from dubkit.tst import AgeGroup, Gender, TimestampSpeakerTuple


def seg(start, spk, end):
    return TimestampSpeakerTuple(start, spk, Gender.UNKNOWN, AgeGroup.UNKNOWN, end)


# -------------------------------------------------------------- interpolation


def test_interpolate_endpoints_exact():
    rng = np.random.default_rng(0)
    y0 = rng.normal(size=(4, 6))
    y1 = rng.normal(size=(4, 6))
    assert np.array_equal(ot_interpolate(y0, y1, 0.0), y0)
    assert np.array_equal(ot_interpolate(y0, y1, 1.0), y1)


def test_interpolate_midpoint_of_constants():
    y0 = np.zeros((3, 2))
    y1 = np.full((3, 2), 2.0)
    assert np.array_equal(ot_interpolate(y0, y1, 0.5), np.ones((3, 2)))


def test_interpolate_linearity():
    rng = np.random.default_rng(1)
    y0 = rng.normal(size=(5, 3))
    y1 = rng.normal(size=(5, 3))
    for u in (0.125, 0.3, 0.77):
        combined = ot_interpolate(y0, y1, u) + ot_interpolate(y0, y1, 1.0 - u)
        assert np.allclose(combined, y0 + y1, atol=1e-12)


def test_interpolate_validates():
    with pytest.raises(ValueError):
        ot_interpolate(np.zeros((2, 2)), np.zeros((2, 3)), 0.5)
    with pytest.raises(ValueError):
        ot_interpolate(np.zeros((2, 2)), np.zeros((2, 2)), 1.5)


def test_cfm_target_and_loss():
    rng = np.random.default_rng(2)
    y0 = rng.normal(size=(4, 5))
    y1 = rng.normal(size=(4, 5))
    target = cfm_target(y0, y1)
    assert np.array_equal(target, y1 - y0)
    assert np.array_equal(cfm_target(y0, y0), np.zeros_like(y0))
    assert np.allclose(cfm_target(y0, y0 + 3.0), 3.0, atol=1e-12)

    assert cfm_loss(target, y0, y1) == 0.0
    assert cfm_loss(target + 1.0, y0, y1) == pytest.approx(1.0)
    pred = rng.normal(size=(4, 5))
    naive = float(np.mean([(pred[i, j] - target[i, j]) ** 2 for i in range(4) for j in range(5)]))
    assert cfm_loss(pred, y0, y1) == pytest.approx(naive, abs=1e-12)
    assert cfm_loss(pred, y0, y1, reduction="sum") == pytest.approx(naive * 20, rel=1e-12)


def test_assign_flow_roles_both_conventions():
    data, noise = object(), object()
    assert assign_flow_roles(data, noise, data_role="y0") == (data, noise)
    assert assign_flow_roles(data, noise, data_role="y1") == (noise, data)
    with pytest.raises(ValueError):
        assign_flow_roles(data, noise, data_role="both")


# ------------------------------------------------------------------- guidance


def test_cfg_combine_formula_and_identity():
    rng = np.random.default_rng(3)
    cond = rng.normal(size=(3, 4))
    uncond = rng.normal(size=(3, 4))
    assert np.array_equal(cfg_combine(cond, uncond, 0.0), cond)
    assert np.allclose(cfg_combine(cond, cond, 2.5), cond, atol=1e-12)
    scale = 1.7
    expected = (1 + scale) * cond - scale * uncond
    assert np.array_equal(cfg_combine(cond, uncond, scale), expected)
    with pytest.raises(ValueError):
        cfg_combine(cond, uncond, -0.1)


def test_cfg_drop_mask():
    assert not cfg_drop_mask(100, 0.0, seed=1).any()
    assert cfg_drop_mask(100, 1.0, seed=1).all()
    mask = cfg_drop_mask(100_000, 0.2, seed=7)
    assert abs(mask.mean() - 0.2) < 0.01
    assert np.array_equal(mask, cfg_drop_mask(100_000, 0.2, seed=7))  # reproducible


# ------------------------------------------------------------------- ssc plan


def test_ssc_plan_spec_trace():
    tokens = [1, 1, 5, 7, 1, 9]
    tuples = [seg(2, 0, 4), seg(4, 1, 6)]
    plan = build_ssc_plan(tokens, tuples, neighborhood=8)
    assert plan.insertions == ((2, 0), (5, 1))
    assert plan.source_len == 6


def test_ssc_plan_no_silence_fallback():
    tokens = [5, 6, 7, 8]
    plan = build_ssc_plan(tokens, [seg(0, 0, 4)], neighborhood=8)
    assert plan.insertions == ((0, 0),)


def test_ssc_plan_leading_silence():
    tokens = [1, 1, 9, 9, 9]
    plan = build_ssc_plan(tokens, [seg(0, 0, 5)], neighborhood=25)
    assert plan.insertions == ((2, 0),)


def test_ssc_plan_back_to_back_segments_stay_increasing():
    # no silence between the segments: the second insertion falls back to
    # its own onset instead of reaching back across the first segment
    tokens = [1, 5, 5, 5]
    plan = build_ssc_plan(tokens, [seg(1, 0, 3), seg(3, 1, 4)], neighborhood=8)
    assert plan.insertions == ((1, 0), (3, 1))


def test_ssc_plan_neighborhood_bound():
    # the only silent token sits outside the 3-frame search window
    tokens = [1, 5, 5, 5, 5, 5, 5, 5, 5, 5]
    plan = build_ssc_plan(tokens, [seg(5, 0, 10)], neighborhood=3)
    assert plan.insertions == ((5, 0),)
    # with a wide window the silence is found again
    plan = build_ssc_plan(tokens, [seg(5, 0, 10)], neighborhood=25)
    assert plan.insertions == ((1, 0),)


def test_ssc_plan_one_insertion_per_tuple():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(1, 120))
        tokens = np.where(rng.random(n) < 0.4, 1, rng.integers(2, 100, size=n))
        tuples = []
        cursor = 0
        while True:
            start = cursor + int(rng.integers(0, 6))
            end = start + int(rng.integers(1, 12))
            if end > n:
                break
            tuples.append(seg(start, len(tuples), end))
            cursor = end
        if not tuples:
            continue
        plan = build_ssc_plan(tokens, tuples, neighborhood=25)
        assert len(plan.insertions) == len(tuples)
        positions = [pos for pos, _ in plan.insertions]
        assert positions == sorted(set(positions))  # strictly increasing


def test_ssc_plan_tuple_beyond_tokens_is_error():
    with pytest.raises(ValueError):
        build_ssc_plan([1, 5, 5], [seg(0, 0, 4)], neighborhood=8)


# ------------------------------------------------------------------ assembly


def table_for(dim, speakers):
    rng = np.random.default_rng(99)
    rows = rng.normal(size=(len(speakers), dim))
    return SpeakerEmbeddingTable.from_embeddings(rows, speakers)


def test_assemble_empty_plan_is_identity():
    rng = np.random.default_rng(5)
    emb = rng.normal(size=(6, 4))
    plan = ConditioningPlan((), source_len=6)
    assert np.array_equal(assemble_conditioning(plan, emb, table_for(4, [0])), emb)


def test_assemble_insertion_at_zero_puts_speaker_first():
    emb = np.arange(8, dtype=float).reshape(4, 2)
    table = table_for(2, [7])
    plan = ConditioningPlan(((0, 7),), source_len=4)
    out = assemble_conditioning(plan, emb, table)
    assert out.shape == (5, 2)
    assert np.array_equal(out[0], table.row(7))
    assert np.array_equal(out[1:], emb)


def test_assemble_then_unsplice_recovers_input():
    rng = np.random.default_rng(6)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        dim = int(rng.integers(1, 8))
        emb = rng.normal(size=(n, dim))
        n_ins = int(rng.integers(0, min(5, n + 1)))
        positions = sorted(rng.choice(n + 1, size=n_ins, replace=False).tolist())
        speakers = [int(rng.integers(0, 4)) for _ in positions]
        plan = ConditioningPlan(tuple(zip(positions, speakers)), source_len=n)
        table = table_for(dim, [0, 1, 2, 3])
        out = assemble_conditioning(plan, emb, table)
        assert out.shape == (n + n_ins, dim)
        for k, idx in enumerate(plan.inserted_row_indices()):
            assert np.array_equal(out[idx], table.row(speakers[k]))
        assert np.array_equal(remove_inserted_rows(plan, out), emb)


def test_assemble_missing_speaker_raises():
    emb = np.zeros((3, 2))
    plan = ConditioningPlan(((1, 9),), source_len=3)
    with pytest.raises(KeyError):
        assemble_conditioning(plan, emb, table_for(2, [0]))


def test_plan_validation_and_serialization():
    with pytest.raises(ValueError):
        ConditioningPlan(((2, 0), (2, 1)), source_len=5)  # not strictly increasing
    with pytest.raises(ValueError):
        ConditioningPlan(((6, 0),), source_len=5)  # beyond the sequence
    plan = ConditioningPlan(((0, 3), (4, 1)), source_len=9)
    assert ConditioningPlan.from_dict(plan.to_dict()) == plan


def test_speaker_table_requires_unit_rows():
    with pytest.raises(ValueError):
        SpeakerEmbeddingTable(np.ones((2, 3)), {0: 0, 1: 1})
    table = SpeakerEmbeddingTable.from_embeddings(np.eye(3) * 4.0)
    assert np.allclose(np.linalg.norm(table.embeddings, axis=1), 1.0)
    with pytest.raises(KeyError):
        table.row(5)
