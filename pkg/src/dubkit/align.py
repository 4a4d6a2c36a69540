"""Reference scorers for the multimodal alignment quantities.

All functions operate on caller-provided arrays, never on models, so
they double as verification oracles for any training implementation:

* voice_activity / va_loss: frame-level speech presence over speech
  tokens (silent token value 1) and its summed binary cross-entropy.
* speech_token_loss: length-normalized cross-entropy over T+1 steps
  (the terminal token included).
* lip_contrastive_loss / grad: per-frame InfoNCE between lip and
  speech-token embeddings, masked by voice activity and lip-motion
  weights, with a closed-form gradient w.r.t. the speech-token side.
* lip_motion_weights: the default down-weighting of frames with weak
  lip motion.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

SILENT_TOKEN = 1
PROB_EPS = 1e-7


def voice_activity(tokens) -> np.ndarray:
    """Binary voice-activity indicator: 1 wherever the token is non-silent."""
    tokens = np.asarray(tokens)
    return (tokens != SILENT_TOKEN).astype(np.uint8)


def va_loss(actual, predicted, *, average: bool = False, eps: float = PROB_EPS) -> float:
    """Summed binary cross-entropy between activity targets and probabilities.

    `predicted` is clamped to [eps, 1-eps] before the logs; the sum (not
    the mean) is the canonical reduction, with `average=True` available
    for cross-dataset comparability.
    """
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.shape != predicted.shape:
        raise ValueError(f"length mismatch: {actual.shape} vs {predicted.shape}")
    if actual.size == 0:
        return 0.0
    p = np.clip(predicted, eps, 1.0 - eps)
    loss = -(actual * np.log(p) + (1.0 - actual) * np.log1p(-p)).sum()
    if average:
        loss /= actual.size
    return float(loss)


def speech_token_loss(logprobs, targets, *, tol: float = 1e-6) -> float:
    """Cross-entropy over log-probability rows, averaged over the T+1 steps.

    Rows must already be normalized log-probabilities; a row whose
    logsumexp strays from 0 by more than `tol` is rejected.
    """
    logprobs = np.asarray(logprobs, dtype=np.float64)
    targets = np.asarray(targets)
    if logprobs.ndim != 2:
        raise ValueError("logprobs must be a (steps, vocab) matrix")
    if targets.shape != (logprobs.shape[0],):
        raise ValueError(
            f"targets length {targets.shape} does not match {logprobs.shape[0]} rows"
        )
    norms = logsumexp(logprobs, axis=1)
    if np.any(np.abs(norms) > tol):
        worst = int(np.argmax(np.abs(norms)))
        raise ValueError(
            f"row {worst} is not a normalized log-probability (logsumexp={norms[worst]:.3g})"
        )
    picked = logprobs[np.arange(logprobs.shape[0]), targets]
    return float(-picked.mean())


def _check_contrastive_inputs(lip, st, activity, weights, temperature):
    lip = np.asarray(lip, dtype=np.float64)
    st = np.asarray(st, dtype=np.float64)
    activity = np.asarray(activity, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if lip.ndim != 2 or lip.shape != st.shape:
        raise ValueError(f"embedding shapes must match: {lip.shape} vs {st.shape}")
    n = lip.shape[0]
    if activity.shape != (n,) or weights.shape != (n,):
        raise ValueError("activity and weights must have one entry per frame")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    for name, arr in (("lip", lip), ("st", st), ("activity", activity), ("weights", weights)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in {name}")
    return lip, st, activity, weights


def lip_contrastive_loss(
    lip, st, activity, weights, temperature: float, *, literal_denominator: bool = False
) -> float:
    """Frame-level contrastive alignment loss between lip and token embeddings.

    For each active frame t, the positive is the same-index speech-token
    embedding and the denominator sweeps the speech-token index s:

        -sum_t activity_t * weights_t * log softmax_s(<lip_t, st_s> / temperature)[s=t]

    `literal_denominator=True` keeps the s-independent summand some
    sources print (the denominator then degenerates to T equal terms and
    each log-softmax is exactly -log T); it exists for comparison only.
    """
    lip, st, activity, weights = _check_contrastive_inputs(lip, st, activity, weights, temperature)
    n = lip.shape[0]
    if n == 0:
        return 0.0
    mass = activity * weights
    if literal_denominator:
        return float((mass * np.log(n)).sum())
    logits = lip @ st.T / temperature
    logp_pos = np.diag(logits) - logsumexp(logits, axis=1)
    return float(-(mass * logp_pos).sum())


def lip_contrastive_grad(lip, st, activity, weights, temperature: float) -> np.ndarray:
    """Analytic gradient of lip_contrastive_loss w.r.t. the speech-token side.

    With z_ts = <lip_t, st_s>/temperature and p_ts = softmax_s(z_ts):

        dL/d st_s = (1/temperature) * sum_t m_t * (p_ts - [s == t]) * lip_t
    """
    lip, st, activity, weights = _check_contrastive_inputs(lip, st, activity, weights, temperature)
    n, _ = lip.shape
    if n == 0:
        return np.zeros_like(st)
    mass = activity * weights
    logits = lip @ st.T / temperature
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    grad = (p * mass[:, None]).T @ lip - mass[:, None] * lip
    return grad / temperature


def lip_motion_weights(lip) -> np.ndarray:
    """Per-frame lip-motion weights in [0, 1].

    Frame deltas are normalized by their clip median (over nonzero
    deltas) and clamped at 1; the first frame copies the second frame's
    weight. Clips with no motion at all get all-zero weights, as does a
    single-frame clip, which carries no motion evidence.
    """
    lip = np.asarray(lip, dtype=np.float64)
    if lip.ndim != 2 or lip.shape[0] < 1:
        raise ValueError("lip embeddings must be a nonempty (frames, dim) matrix")
    n = lip.shape[0]
    if n == 1:
        return np.zeros(1)
    deltas = np.linalg.norm(lip[1:] - lip[:-1], axis=1)
    nonzero = deltas[deltas > 0]
    if nonzero.size == 0:
        return np.zeros(n)
    rho = float(np.median(nonzero))
    w = np.minimum(1.0, deltas / rho)
    return np.concatenate(([w[0]], w))
