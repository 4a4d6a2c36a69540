"""Evaluation suite: interval truncation/leakage, cepstral distortion
under DTW alignment, error rates, and cosine-similarity metrics.

The truncation/leakage score assigns predicted speech-active frames to
reference segments by timeline Voronoi cells around the reference
midpoints; that rule (with ties toward the earlier segment) is the
metric's executable definition and is pinned against a frame-level
brute-force oracle in the tests. The DTW distortion minimizes the
average per-step distortion over monotone paths, averaged by path
length, via the length-indexed DP in dubkit._kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from dubkit import _kernels
from dubkit.formats.timecode import FrameInterval

MCD_CONST = 10.0 * math.sqrt(2.0) / math.log(10.0)


class IntervalSet:
    """Sorted, pairwise-disjoint half-open frame intervals."""

    __slots__ = ("starts", "ends")

    def __init__(self, intervals):
        pairs = [
            (iv.start, iv.end) if isinstance(iv, FrameInterval) else (int(iv[0]), int(iv[1]))
            for iv in intervals
        ]
        prev_end = None
        for start, end in pairs:
            if start < 0 or end <= start:
                raise ValueError(f"invalid interval [{start}, {end})")
            if prev_end is not None and start < prev_end:
                raise ValueError(f"intervals overlap or are unsorted at [{start}, {end})")
            prev_end = end
        self.starts = np.array([p[0] for p in pairs], dtype=np.int64)
        self.ends = np.array([p[1] for p in pairs], dtype=np.int64)

    @classmethod
    def from_unsorted(cls, intervals) -> "IntervalSet":
        """Sort and coalesce overlapping/touching intervals (union semantics)."""
        pairs = sorted(
            (iv.start, iv.end) if isinstance(iv, FrameInterval) else (int(iv[0]), int(iv[1]))
            for iv in intervals
        )
        merged: list[tuple[int, int]] = []
        for start, end in pairs:
            if merged and start <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], end))
            else:
                merged.append((start, end))
        return cls(merged)

    def __len__(self) -> int:
        return len(self.starts)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.starts.tolist(), self.ends.tolist()))

    @property
    def total_frames(self) -> int:
        return int((self.ends - self.starts).sum())

    def clip(self, lo: int, hi: int) -> "IntervalSet":
        """Intersection with the window [lo, hi)."""
        if hi <= lo:
            return IntervalSet([])
        starts = np.maximum(self.starts, lo)
        ends = np.minimum(self.ends, hi)
        keep = starts < ends
        return IntervalSet(list(zip(starts[keep].tolist(), ends[keep].tolist())))

    def overlap_frames(self, start: int, end: int) -> int:
        """Number of member frames inside [start, end)."""
        inter = np.minimum(self.ends, end) - np.maximum(self.starts, start)
        return int(np.clip(inter, 0, None).sum())

    def intersects(self, start: int, end: int) -> bool:
        return self.overlap_frames(start, end) > 0


def spk_tl(reference, predicted_active) -> float:
    """Speaker truncation/leakage score in [0, 1] (0 best, 1 worst).

    `reference` holds one interval per speech segment (sorted,
    disjoint); `predicted_active` is the VAD-active interval set of the
    synthesized speech. Active frames are assigned to the segment with
    the nearest midpoint (earlier segment wins ties); per segment, the
    covered fraction of the reference minus the leaked fraction of the
    assignment enters the average.
    """
    refs = [
        iv if isinstance(iv, FrameInterval) else FrameInterval(int(iv[0]), int(iv[1]))
        for iv in reference
    ]
    if not refs:
        raise ValueError("reference interval set must be nonempty")
    IntervalSet(refs)  # enforces sorted/disjoint
    if not isinstance(predicted_active, IntervalSet):
        predicted_active = IntervalSet(predicted_active)

    n = len(refs)
    mids2 = [iv.start + iv.end for iv in refs]  # 2 * midpoint, exact in ints
    horizon = int(
        max(
            [iv.end for iv in refs]
            + ([int(predicted_active.ends.max())] if len(predicted_active) else [0])
        )
    )
    # Voronoi cell of segment i covers frames f with lo_i <= f <= hi_i;
    # f belongs to cell i rather than i+1 iff 4f <= 2*m_i + 2*m_{i+1}.
    cell_hi = [(mids2[i] + mids2[i + 1]) // 4 for i in range(n - 1)] + [horizon]

    acc = 0.0
    lo = 0
    for i, iv in enumerate(refs):
        hi = cell_hi[i]
        assigned = predicted_active.clip(lo, hi + 1)
        covered = assigned.overlap_frames(iv.start, iv.end)
        truncation = covered / iv.n_frames
        leaked_total = assigned.total_frames
        leakage = (leaked_total - covered) / leaked_total if leaked_total else 0.0
        acc += truncation - leakage
        lo = hi + 1
    return 0.5 - acc / (2.0 * n)


def mcd(frame_a, frame_b) -> float:
    """Mel-cepstral distortion between two coefficient frames."""
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 1:
        raise ValueError(f"coefficient frames must share a shape (K,): {a.shape} vs {b.shape}")
    return MCD_CONST * float(np.linalg.norm(a - b))


def _check_cepstra(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty (frames, K) matrix, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"non-finite values in {name}")
    return x


def mcd_dtw(a, b) -> float:
    """Minimal average per-step distortion over monotone alignment paths."""
    a = _check_cepstra(a, "a")
    b = _check_cepstra(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"coefficient dims differ: {a.shape[1]} vs {b.shape[1]}")
    dist = cdist(a, b)
    return MCD_CONST * _kernels.dtw_average_cost(dist)


def mcd_dtw_sl(reference, synthesized) -> float:
    """mcd_dtw scaled by the duration coefficient max(Tr, Ts) / Tr."""
    reference = _check_cepstra(reference, "reference")
    synthesized = _check_cepstra(synthesized, "synthesized")
    omega = max(reference.shape[0], synthesized.shape[0]) / reference.shape[0]
    return omega * mcd_dtw(reference, synthesized)


def _to_id_array(seq, vocab: dict) -> np.ndarray:
    ids = np.empty(len(seq), dtype=np.int32)
    for i, tok in enumerate(seq):
        if tok not in vocab:
            vocab[tok] = len(vocab)
        ids[i] = vocab[tok]
    return ids


def edit_distance(a, b) -> int:
    """Levenshtein distance over characters (strings) or tokens (sequences)."""
    if isinstance(a, str) != isinstance(b, str):
        raise TypeError("both sequences must be strings, or both token sequences")
    vocab: dict = {}
    return _kernels.levenshtein(_to_id_array(a, vocab), _to_id_array(b, vocab))


def _strip_whitespace(s: str) -> str:
    return "".join(s.split())


def cer(reference: str, hypothesis: str, *, strip_whitespace: bool = True) -> float:
    """Character error rate: edit distance / reference length.

    Whitespace is removed first (the module's normalization pass), which
    is the usual convention for character-level scoring of CJK text.
    """
    if strip_whitespace:
        reference = _strip_whitespace(reference)
        hypothesis = _strip_whitespace(hypothesis)
    if not reference:
        raise ValueError("reference must be nonempty")
    return edit_distance(reference, hypothesis) / len(reference)


def wer(reference, hypothesis) -> float:
    """Word error rate over whitespace tokens (or pre-tokenized sequences)."""
    ref = reference.split() if isinstance(reference, str) else list(reference)
    hyp = hypothesis.split() if isinstance(hypothesis, str) else list(hypothesis)
    if not ref:
        raise ValueError("reference must be nonempty")
    return edit_distance(ref, hyp) / len(ref)


def cosine_sim(u, v) -> float:
    """Cosine similarity; shared kernel for speaker and emotion similarity."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"vector shapes differ: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def spk_sim(frame_embeddings, intervals, reference) -> float:
    """Speaker similarity within active intervals.

    Mean-pools the synthesized-speech frame embeddings inside the
    speaker's active intervals, then compares against that speaker's
    reference embedding by cosine.
    """
    embs = np.asarray(frame_embeddings, dtype=np.float64)
    if embs.ndim != 2:
        raise ValueError("frame embeddings must be a (frames, dim) matrix")
    rows = []
    for iv in intervals:
        start, end = (iv.start, iv.end) if isinstance(iv, FrameInterval) else (int(iv[0]), int(iv[1]))
        if not 0 <= start < end <= embs.shape[0]:
            raise ValueError(f"interval [{start}, {end}) outside the {embs.shape[0]}-frame clip")
        rows.append(embs[start:end])
    if not rows:
        raise ValueError("at least one active interval is required")
    pooled = np.concatenate(rows).mean(axis=0)
    return cosine_sim(pooled, reference)


REPORT_COLUMNS = (
    "MCD-DTW",
    "MCD-DTW-SL",
    "CER(%)",
    "WER(%)",
    "UTMOS",
    "LSE-C",
    "LSE-D",
    "SPK-TL",
    "SPK-SIM(%)",
    "EMO-SIM(%)",
    "ES-MOS",
)


@dataclass
class MetricReport:
    """Per-clip metric rows plus a structured summary block.

    Neural-predictor scores (UTMOS, LSE-C/LSE-D, ES-MOS) are never
    computed here; precomputed values may be joined into rows. Metadata
    records the VAD used for the truncation/leakage score since scores
    from different VADs are not directly comparable.
    """

    rows: dict[str, dict[str, float]]
    metadata: dict[str, str]

    def to_table(self) -> str:
        header = "clip_id\t" + "\t".join(REPORT_COLUMNS)
        lines = [header]
        for clip_id in sorted(self.rows):
            row = self.rows[clip_id]
            cells = [
                f"{row[col]:.6f}" if col in row and row[col] is not None else ""
                for col in REPORT_COLUMNS
            ]
            lines.append(clip_id + "\t" + "\t".join(cells))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        cols: dict[str, dict[str, float]] = {}
        for col in REPORT_COLUMNS:
            values = [
                row[col] for row in self.rows.values() if col in row and row[col] is not None
            ]
            if values:
                cols[col] = {"mean": float(np.mean(values)), "count": len(values)}
        return {"clips": len(self.rows), "columns": cols, "metadata": dict(self.metadata)}
