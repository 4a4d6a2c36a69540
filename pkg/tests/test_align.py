"""Oracle and anchor tests for the alignment loss scorers."""

import math

import numpy as np
import pytest

from dubkit.align import (
    lip_contrastive_grad,
    lip_contrastive_loss,
    lip_motion_weights,
    speech_token_loss,
    va_loss,
    voice_activity,
)

# ------------------------------------------------------------------- oracles


def lip_loss_oracle(lip, st, act, w, temperature):
    """Naive double loop over the published formula, no vectorization."""
    n = lip.shape[0]
    total = 0.0
    for t in range(n):
        if act[t] == 0 or w[t] == 0:
            continue
        num = math.exp(float(np.dot(lip[t], st[t])) / temperature)
        den = sum(math.exp(float(np.dot(lip[t], st[s])) / temperature) for s in range(n))
        total -= act[t] * w[t] * math.log(num / den)
    return total


def grad_fd_oracle(lip, st, act, w, temperature, h=1e-5):
    """Central finite differences of the loss w.r.t. the token embeddings."""
    grad = np.zeros_like(st)
    for i in range(st.shape[0]):
        for j in range(st.shape[1]):
            plus = st.copy()
            plus[i, j] += h
            minus = st.copy()
            minus[i, j] -= h
            grad[i, j] = (
                lip_contrastive_loss(lip, plus, act, w, temperature)
                - lip_contrastive_loss(lip, minus, act, w, temperature)
            ) / (2 * h)
    return grad


def random_rotation(rng, dim):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q


# ------------------------------------------------------------ voice activity


def test_voice_activity_definition():
    assert voice_activity([1, 1, 1]).tolist() == [0, 0, 0]
    assert voice_activity([1, 5, 1]).tolist() == [0, 1, 0]
    rng = np.random.default_rng(0)
    tokens = rng.integers(0, 6560, size=500)
    assert np.array_equal(voice_activity(tokens), (tokens != 1).astype(np.uint8))


def test_va_loss_perfect_prediction_is_tiny():
    tau = np.array([1.0, 0.0, 1.0, 1.0])
    assert va_loss(tau, tau) <= tau.size * 1e-7 * 2


def test_va_loss_anchor_two_half_frames():
    assert va_loss([1, 1], [0.5, 0.5]) == pytest.approx(2 * math.log(2), abs=1e-12)


def test_va_loss_empty_and_average():
    assert va_loss([], []) == 0.0
    tau = np.array([1.0, 0.0])
    p = np.array([0.5, 0.5])
    assert va_loss(tau, p, average=True) == pytest.approx(va_loss(tau, p) / 2)


def test_va_loss_nonnegative_and_zero_only_at_perfect():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 30))
        tau = rng.integers(0, 2, size=n).astype(float)
        p = rng.random(n)
        value = va_loss(tau, p)
        assert value >= 0.0
        if not np.allclose(p, tau, atol=1e-7):
            assert value > 0.0


def test_va_loss_length_mismatch():
    with pytest.raises(ValueError):
        va_loss([1, 0], [0.5])


# --------------------------------------------------------- speech token loss


def test_speech_token_loss_one_hot_rows():
    n, vocab = 6, 10
    targets = np.arange(n) % vocab
    logprobs = np.full((n, vocab), -1e9)
    logprobs[np.arange(n), targets] = 0.0
    # renormalize exactly: the off-target mass is negligible but logsumexp
    # of [0, -1e9...] is 0 to double precision
    assert speech_token_loss(logprobs, targets) == pytest.approx(0.0, abs=1e-9)


def test_speech_token_loss_uniform_rows_give_log_vocab():
    vocab = 6560
    logprobs = np.full((4, vocab), -math.log(vocab))
    targets = np.array([0, 17, 6559, 42])
    assert speech_token_loss(logprobs, targets) == pytest.approx(math.log(vocab), abs=1e-9)


def test_speech_token_loss_matches_elementwise_oracle():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(5, 8))
    logprobs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    targets = rng.integers(0, 8, size=5)
    expected = -sum(logprobs[t, targets[t]] for t in range(5)) / 5
    assert speech_token_loss(logprobs, targets) == pytest.approx(expected, abs=1e-12)


def test_speech_token_loss_rejects_unnormalized_rows():
    with pytest.raises(ValueError):
        speech_token_loss(np.zeros((2, 4)), np.array([0, 1]))


def test_speech_token_loss_invariant_to_nontarget_permutation():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(4, 9))
    logprobs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    targets = np.array([2, 0, 5, 8])
    base = speech_token_loss(logprobs, targets)
    shuffled = logprobs.copy()
    for t, target in enumerate(targets):
        others = [v for v in range(9) if v != target]
        perm = rng.permutation(others)
        shuffled[t, others] = logprobs[t, perm]
    assert speech_token_loss(shuffled, targets) == pytest.approx(base, abs=1e-12)


# ------------------------------------------------------- lip contrastive loss


def test_lip_loss_single_frame_is_zero():
    lip = np.array([[1.0, 2.0]])
    st = np.array([[0.5, -1.0]])
    assert lip_contrastive_loss(lip, st, [1], [1.0], 0.7) == pytest.approx(0.0)


def test_lip_loss_fully_masked_is_zero():
    rng = np.random.default_rng(4)
    lip = rng.normal(size=(5, 3))
    st = rng.normal(size=(5, 3))
    assert lip_contrastive_loss(lip, st, np.zeros(5), np.ones(5), 1.0) == 0.0


def test_lip_loss_matches_double_loop_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n, dim = 3, int(rng.integers(2, 6))
        lip = rng.normal(size=(n, dim))
        st = rng.normal(size=(n, dim))
        act = rng.integers(0, 2, size=n).astype(float)
        w = rng.random(n)
        temperature = float(rng.uniform(0.3, 2.0))
        got = lip_contrastive_loss(lip, st, act, w, temperature)
        assert got == pytest.approx(lip_loss_oracle(lip, st, act, w, temperature), abs=1e-12)


def test_lip_loss_literal_denominator_variant():
    # with the s-independent summand the softmax is uniform, so each
    # active frame contributes exactly weight * log(T)
    rng = np.random.default_rng(6)
    n = 4
    lip = rng.normal(size=(n, 3))
    st = rng.normal(size=(n, 3))
    act = np.array([1.0, 0.0, 1.0, 1.0])
    w = np.array([0.5, 1.0, 0.25, 1.0])
    expected = float((act * w).sum() * math.log(n))
    got = lip_contrastive_loss(lip, st, act, w, 0.9, literal_denominator=True)
    assert got == pytest.approx(expected, abs=1e-12)


def test_lip_loss_invariant_under_joint_rotation():
    rng = np.random.default_rng(7)
    n, dim = 6, 4
    lip = rng.normal(size=(n, dim))
    st = rng.normal(size=(n, dim))
    act = rng.integers(0, 2, size=n).astype(float)
    w = rng.random(n)
    rotation = random_rotation(rng, dim)
    base = lip_contrastive_loss(lip, st, act, w, 0.8)
    rotated = lip_contrastive_loss(lip @ rotation, st @ rotation, act, w, 0.8)
    assert rotated == pytest.approx(base, abs=1e-9)


def test_lip_loss_rejects_non_finite():
    lip = np.array([[1.0, np.nan]])
    st = np.array([[1.0, 1.0]])
    with pytest.raises(ValueError):
        lip_contrastive_loss(lip, st, [1], [1.0], 1.0)


def test_grad_zero_cases():
    rng = np.random.default_rng(8)
    lip = rng.normal(size=(4, 3))
    st = rng.normal(size=(4, 3))
    assert np.array_equal(
        lip_contrastive_grad(lip, st, np.zeros(4), np.ones(4), 1.0), np.zeros((4, 3))
    )
    single = lip_contrastive_grad(lip[:1], st[:1], [1], [1.0], 1.0)
    assert np.allclose(single, 0.0, atol=1e-15)


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(120):
        n = int(rng.integers(2, 9))
        dim = int(rng.integers(2, 17))
        lip = rng.normal(size=(n, dim))
        st = rng.normal(size=(n, dim))
        act = rng.integers(0, 2, size=n).astype(float)
        if act.sum() == 0:
            act[int(rng.integers(0, n))] = 1.0
        w = rng.random(n)
        temperature = float(rng.uniform(0.4, 2.0))
        analytic = lip_contrastive_grad(lip, st, act, w, temperature)
        numeric = grad_fd_oracle(lip, st, act, w, temperature)
        scale = max(np.abs(analytic).max(), 1e-12)
        worst = max(worst, np.abs(analytic - numeric).max() / scale)
    assert worst < 1e-5


# --------------------------------------------------------- lip motion weights


def test_lip_motion_weights_constant_track_is_zero():
    lip = np.ones((6, 4))
    assert np.array_equal(lip_motion_weights(lip), np.zeros(6))


def test_lip_motion_weights_jump_clamps_to_one():
    lip = np.zeros((5, 2))
    lip[3:] = 10.0  # one large jump at frame 3
    w = lip_motion_weights(lip)
    assert w[3] == 1.0
    assert w.max() == 1.0


def test_lip_motion_weights_first_frame_copies_second():
    rng = np.random.default_rng(10)
    lip = np.cumsum(rng.normal(size=(8, 3)), axis=0)
    w = lip_motion_weights(lip)
    assert w[0] == w[1]


def test_lip_motion_weights_match_formula_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 20))
        lip = np.cumsum(rng.normal(size=(n, 3)), axis=0)  # random walk
        deltas = np.array([np.linalg.norm(lip[t] - lip[t - 1]) for t in range(1, n)])
        rho = np.median(deltas[deltas > 0])
        expected = np.minimum(1.0, deltas / rho)
        expected = np.concatenate(([expected[0]], expected))
        assert np.allclose(lip_motion_weights(lip), expected, atol=1e-12)


def test_lip_motion_weights_single_frame():
    assert lip_motion_weights(np.ones((1, 3))).tolist() == [0.0]
