"""Audio-visual speaker diarization post-processing.

Works on ingested detector outputs only: per-segment audio speaker
embeddings (the primary modality), optional per-segment visual face
embeddings (auxiliary cues), and per-frame active-speaker-detection
scores. Clustering is agglomerative average-linkage over cosine
distance, cut at a fixed threshold, which keeps runs deterministic and
testable; spectral clustering is available behind a flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.cluster.vq import kmeans2
from scipy.spatial.distance import squareform

from dubkit.formats.rttm import RttmSegment
from dubkit.formats.timecode import FrameInterval

_ZERO_NORM = 1e-12


def normalize_face_embeddings(tracks):
    """Per-track mean centering followed by L2 row normalization.

    Centering suppresses the track-constant identity-unrelated component
    per track; rows that become (numerically) zero carry no usable
    signal and are flagged unavailable instead of raising. Returns one
    (normalized, available) pair per track.
    """
    out = []
    for i, track in enumerate(tracks):
        x = np.asarray(track, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError(f"track {i} must be a nonempty (frames, dim) matrix")
        centered = x - x.mean(axis=0)
        norms = np.linalg.norm(centered, axis=1)
        avail = norms > _ZERO_NORM
        normalized = np.zeros_like(centered)
        normalized[avail] = centered[avail] / norms[avail, None]
        out.append((normalized, avail))
    return out


def pool_segment_visuals(tracks):
    """Segment-level visual cues: mean of each track's available rows.

    Tracks are normalized first (normalize_face_embeddings); a segment
    whose track has no available frames is flagged unavailable. Returns
    (matrix of pooled rows, availability flags).
    """
    normalized = normalize_face_embeddings(tracks)
    dim = normalized[0][0].shape[1] if normalized else 0
    pooled = np.zeros((len(normalized), dim))
    avail = np.zeros(len(normalized), dtype=bool)
    for i, (rows, ok) in enumerate(normalized):
        if ok.any():
            mean = rows[ok].mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > _ZERO_NORM:
                pooled[i] = mean / norm
                avail[i] = True
    return pooled, avail


def select_active_speaker(frames):
    """Argmax face per frame from detector scores.

    `frames` is a per-frame list of (face_id, score) candidates. Ties
    break toward the lowest face id; frames without candidates yield
    None.
    """
    out = []
    for t, candidates in enumerate(frames):
        best = None
        for face_id, score in candidates:
            if not np.isfinite(score):
                raise ValueError(f"frame {t}: non-finite score for face {face_id}")
            if best is None or score > best[1] or (score == best[1] and face_id < best[0]):
                best = (face_id, score)
        out.append(best[0] if best else None)
    return out


def cosine_affinity(embeddings) -> np.ndarray:
    """Cosine affinity matrix with exact symmetry and unit diagonal."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("embeddings must be a nonempty (segments, dim) matrix")
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms <= _ZERO_NORM):
        raise ValueError("zero embedding row cannot enter the affinity computation")
    x = x / norms
    a = x @ x.T
    a = (a + a.T) / 2.0
    np.fill_diagonal(a, 1.0)
    return a


def _check_affinity(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} affinity must be square, got {a.shape}")
    if not np.allclose(a, a.T, atol=1e-8):
        raise ValueError(f"{name} affinity must be symmetric")
    if not np.allclose(np.diagonal(a), 1.0, atol=1e-8):
        raise ValueError(f"{name} affinity must have a unit diagonal")
    return a


def fuse_affinity(audio, visual, avail, beta: float) -> np.ndarray:
    """Blend visual affinities into the audio ones where both rows exist.

    A[i, j] = (1-beta)*audio + beta*visual when segments i and j both
    have visual cues, else the audio value. beta=0 (or no visual matrix)
    returns the audio matrix bit-identically.
    """
    audio = _check_affinity(audio, "audio")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"fusion weight must lie in [0, 1], got {beta}")
    if visual is None or beta == 0.0:
        return audio.copy()
    visual = _check_affinity(visual, "visual")
    if visual.shape != audio.shape:
        raise ValueError(f"shape mismatch: audio {audio.shape}, visual {visual.shape}")
    avail = np.asarray(avail, dtype=bool)
    if avail.shape != (audio.shape[0],):
        raise ValueError("availability flags must have one entry per segment")
    pair = avail[:, None] & avail[None, :]
    fused = np.where(pair, (1.0 - beta) * audio + beta * visual, audio)
    np.fill_diagonal(fused, 1.0)
    return fused


def _first_appearance_relabel(labels) -> np.ndarray:
    mapping: dict = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        key = int(lab)
        if key not in mapping:
            mapping[key] = len(mapping)
        out[i] = mapping[key]
    return out


def _merge_down_to(labels: np.ndarray, max_speakers: int) -> np.ndarray:
    """Repeatedly merge the two smallest clusters until the cap holds."""
    labels = labels.copy()
    while len(set(labels.tolist())) > max_speakers:
        first_idx = {}
        sizes = {}
        for i, lab in enumerate(labels.tolist()):
            sizes[lab] = sizes.get(lab, 0) + 1
            first_idx.setdefault(lab, i)
        order = sorted(sizes, key=lambda lab: (sizes[lab], first_idx[lab]))
        a, b = order[0], order[1]
        keep, drop = (a, b) if first_idx[a] < first_idx[b] else (b, a)
        labels[labels == drop] = keep
    return labels


def _spectral_labels(affinity: np.ndarray, max_speakers: int, seed: int) -> np.ndarray:
    """Eigengap speaker-count estimate + k-means on the spectral embedding."""
    n = affinity.shape[0]
    w = np.clip(affinity, 0.0, None)
    np.fill_diagonal(w, 0.0)
    deg = w.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-12)), 0.0)
    lap = np.eye(n) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    eigvals, eigvecs = np.linalg.eigh(lap)
    k_cap = min(max_speakers, n)
    gaps = np.diff(eigvals[: k_cap + 1])
    k = int(np.argmax(gaps)) + 1 if gaps.size else 1
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    embed = eigvecs[:, :k]
    row_norms = np.linalg.norm(embed, axis=1, keepdims=True)
    embed = embed / np.maximum(row_norms, 1e-12)
    _centroids, labels = kmeans2(embed, k, seed=seed, minit="++")
    return labels.astype(np.int64)


def cluster_speakers(
    affinity,
    threshold: float = 0.35,
    max_speakers: int = 16,
    *,
    method: str = "ahc",
    seed: int = 0,
) -> np.ndarray:
    """Unsupervised speaker clustering over an affinity matrix.

    Average-linkage agglomeration over distance 1 - affinity, cut at
    `threshold`; the cluster count is capped at `max_speakers` by merging
    smallest-cluster pairs. Labels come back densely re-indexed in
    first-appearance order.
    """
    n = np.asarray(affinity).shape[0] if np.asarray(affinity).size else 0
    if n == 0:
        return np.empty(0, dtype=np.int64)
    affinity = _check_affinity(affinity, "fused")
    if max_speakers < 1:
        raise ValueError(f"max_speakers must be >= 1, got {max_speakers}")
    if n == 1:
        return np.zeros(1, dtype=np.int64)

    if method == "ahc":
        dist = np.clip(1.0 - affinity, 0.0, None)
        np.fill_diagonal(dist, 0.0)
        condensed = squareform(dist, checks=False)
        tree = linkage(condensed, method="average")
        raw = fcluster(tree, t=threshold, criterion="distance")
    elif method == "spectral":
        raw = _spectral_labels(affinity, max_speakers, seed)
    else:
        raise ValueError(f"unknown clustering method {method!r}")

    labels = _first_appearance_relabel(raw)
    labels = _merge_down_to(labels, max_speakers)
    return _first_appearance_relabel(labels)


@dataclass(frozen=True)
class SegmentEmbeddings:
    """Per-segment embeddings for one clip's diarization."""

    segments: tuple[FrameInterval, ...]
    audio: np.ndarray
    visual: np.ndarray | None = None
    visual_avail: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        audio = np.asarray(self.audio, dtype=np.float64)
        if audio.ndim != 2 or audio.shape[0] != len(self.segments):
            raise ValueError("audio embeddings must have one row per segment")
        object.__setattr__(self, "audio", audio)
        if self.visual is not None:
            visual = np.asarray(self.visual, dtype=np.float64)
            if visual.shape[0] != len(self.segments):
                raise ValueError("visual embeddings must have one row per segment")
            avail = (
                np.asarray(self.visual_avail, dtype=bool)
                if self.visual_avail is not None
                else np.linalg.norm(visual, axis=1) > _ZERO_NORM
            )
            if avail.shape != (len(self.segments),):
                raise ValueError("visual availability must have one flag per segment")
            object.__setattr__(self, "visual", visual)
            object.__setattr__(self, "visual_avail", avail)


def diarize_clip(
    embeddings: SegmentEmbeddings,
    *,
    beta: float = 0.3,
    threshold: float = 0.35,
    max_speakers: int = 16,
    method: str = "ahc",
    seed: int = 0,
) -> np.ndarray:
    """Cluster one clip's segments into speaker labels (audio-first fusion)."""
    audio_aff = cosine_affinity(embeddings.audio)
    if embeddings.visual is None or not embeddings.visual_avail.any():
        return cluster_speakers(
            audio_aff, threshold, max_speakers, method=method, seed=seed
        )
    avail = embeddings.visual_avail
    rows = np.zeros_like(embeddings.visual)
    norms = np.linalg.norm(embeddings.visual[avail], axis=1, keepdims=True)
    if np.any(norms <= _ZERO_NORM):
        raise ValueError("available visual rows must be nonzero")
    rows[avail] = embeddings.visual[avail] / norms
    visual_aff = rows @ rows.T
    visual_aff = (visual_aff + visual_aff.T) / 2.0
    np.fill_diagonal(visual_aff, 1.0)
    fused = fuse_affinity(audio_aff, visual_aff, avail, beta)
    return cluster_speakers(fused, threshold, max_speakers, method=method, seed=seed)


def labels_to_rttm(
    labels,
    segments,
    clip_id: str,
    *,
    merge_adjacent: bool = False,
) -> list[RttmSegment]:
    """Render speaker labels over frame segments as RTTM SPEAKER entries.

    With merge_adjacent, consecutive same-speaker segments that touch on
    the frame grid collapse into one entry.
    """
    segments = list(segments)
    labels = list(labels)
    if len(labels) != len(segments):
        raise ValueError(f"{len(labels)} labels for {len(segments)} segments")
    spans: list[tuple[int, int, int]] = []  # start, end, label
    for seg, label in zip(segments, labels):
        if merge_adjacent and spans and spans[-1][2] == label and spans[-1][1] == seg.start:
            spans[-1] = (spans[-1][0], seg.end, label)
        else:
            spans.append((seg.start, seg.end, int(label)))
    out = []
    for start, end, label in spans:
        fps = segments[0].fps
        out.append(
            RttmSegment(
                file_id=clip_id,
                onset=start / fps,
                duration=(end - start) / fps,
                speaker=f"spk{label}",
            )
        )
    return out
