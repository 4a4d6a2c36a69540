"""Flow-matching arithmetic and speaker-switch conditioning assembly.

The regression setup follows the linear-interpolant convention
Y_u = (1-u) * Y0 + u * Y1 with target Y1 - Y0, where one endpoint holds
data and the other unit Gaussian noise. Which endpoint is which is a
caller decision; assign_flow_roles supports both assignments explicitly
rather than privileging one.

Speaker switching is prepared as a ConditioningPlan: for every speech
segment the reference-speaker embedding is spliced into the token
embedding sequence right after the last silent token preceding the
segment's speech onset (bidirectional search within a bounded frame
neighborhood), so timbre changes line up with segment boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dubkit.align import SILENT_TOKEN
from dubkit.tst import validate_tuples


def _check_same_shape(*arrays):
    out = [np.asarray(a, dtype=np.float64) for a in arrays]
    first = out[0].shape
    for a in out[1:]:
        if a.shape != first:
            raise ValueError(f"shape mismatch: {first} vs {a.shape}")
    return out


def ot_interpolate(y0, y1, u: float) -> np.ndarray:
    """Elementwise convex combination (1-u)*y0 + u*y1."""
    y0, y1 = _check_same_shape(y0, y1)
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"interpolation point must lie in [0, 1], got {u}")
    return (1.0 - u) * y0 + u * y1


def cfm_target(y0, y1) -> np.ndarray:
    """Regression target of the linear flow: y1 - y0."""
    y0, y1 = _check_same_shape(y0, y1)
    return y1 - y0


def cfm_loss(pred, y0, y1, *, reduction: str = "mean") -> float:
    """Squared error against cfm_target; mean over elements by default."""
    pred, y0, y1 = _check_same_shape(pred, y0, y1)
    sq = (pred - (y1 - y0)) ** 2
    if reduction == "mean":
        return float(sq.mean())
    if reduction == "sum":
        return float(sq.sum())
    raise ValueError(f"unknown reduction {reduction!r}")


def assign_flow_roles(data, noise, *, data_role: str = "y0"):
    """Map (data, noise) onto the (y0, y1) endpoints of the interpolant."""
    if data_role == "y0":
        return data, noise
    if data_role == "y1":
        return noise, data
    raise ValueError(f"data_role must be 'y0' or 'y1', got {data_role!r}")


def cfg_combine(v_cond, v_uncond, scale: float) -> np.ndarray:
    """Standard guidance combination (1+scale)*v_cond - scale*v_uncond."""
    v_cond, v_uncond = _check_same_shape(v_cond, v_uncond)
    if scale < 0:
        raise ValueError(f"guidance scale must be >= 0, got {scale}")
    return (1.0 + scale) * v_cond - scale * v_uncond


def cfg_drop_mask(batch: int, p: float, seed: int) -> np.ndarray:
    """Reproducible conditioning-drop mask; True marks dropped items."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"drop probability must lie in [0, 1], got {p}")
    if batch < 0:
        raise ValueError(f"batch size must be >= 0, got {batch}")
    rng = np.random.default_rng(seed)
    return rng.random(batch) < p


@dataclass(frozen=True)
class SpeakerEmbeddingTable:
    """Reference-speaker embeddings, one L2-normalized row per speaker."""

    embeddings: np.ndarray
    index: dict

    def __post_init__(self) -> None:
        emb = np.asarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2:
            raise ValueError("embeddings must be an (speakers, dim) matrix")
        norms = np.linalg.norm(emb, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise ValueError("embedding rows must be L2-normalized")
        for spk, row in self.index.items():
            if not 0 <= row < emb.shape[0]:
                raise ValueError(f"speaker {spk} maps to row {row} outside the table")
        object.__setattr__(self, "embeddings", emb)

    @classmethod
    def from_embeddings(cls, embeddings, speakers=None) -> "SpeakerEmbeddingTable":
        emb = np.asarray(embeddings, dtype=np.float64)
        norms = np.linalg.norm(emb, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise ValueError("cannot normalize a zero embedding row")
        if speakers is None:
            speakers = range(emb.shape[0])
        index = {spk: i for i, spk in enumerate(speakers)}
        if len(index) != emb.shape[0]:
            raise ValueError("speaker ids must be unique, one per row")
        return cls(emb / norms, index)

    def row(self, spk) -> np.ndarray:
        if spk not in self.index:
            raise KeyError(f"speaker {spk!r} missing from reference table")
        return self.embeddings[self.index[spk]]


@dataclass(frozen=True)
class ConditioningPlan:
    """Speaker-row insertions into a token embedding sequence.

    `insertions` holds (position, speaker) pairs; position k means the
    speaker row lands before the original token at index k, positions
    strictly increasing in [0, source_len].
    """

    insertions: tuple
    source_len: int

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "insertions", tuple((int(p), s) for p, s in self.insertions)
        )
        if self.source_len < 0:
            raise ValueError(f"negative source length: {self.source_len}")
        prev = -1
        for pos, _spk in self.insertions:
            if not 0 <= pos <= self.source_len:
                raise ValueError(f"insertion position {pos} outside [0, {self.source_len}]")
            if pos <= prev:
                raise ValueError(f"insertion positions must be strictly increasing, got {pos} after {prev}")
            prev = pos

    def inserted_row_indices(self) -> list[int]:
        """Row indices the speaker embeddings occupy in the assembled output."""
        return [pos + k for k, (pos, _spk) in enumerate(self.insertions)]

    def to_dict(self) -> dict:
        return {
            "source_len": self.source_len,
            "insertions": [[pos, spk] for pos, spk in self.insertions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConditioningPlan":
        return cls(
            insertions=tuple((int(p), s) for p, s in d["insertions"]),
            source_len=int(d["source_len"]),
        )


def build_ssc_plan(tokens, tuples, neighborhood: int = 25) -> ConditioningPlan:
    """Locate the speaker-embedding insertion point for every segment.

    For each segment: find the speech onset (first non-silent token at or
    after the segment start), then search backward up to `neighborhood`
    frames for the trailing silent run and insert right after its last
    silent token; with no silence in the window, insert at the onset.
    The backward window never reaches past the previous insertion, which
    keeps positions strictly increasing even for back-to-back segments.
    """
    tokens = np.asarray(tokens)
    if tokens.ndim != 1:
        raise ValueError("tokens must be a 1-D sequence, one per frame")
    if neighborhood < 0:
        raise ValueError(f"neighborhood must be >= 0, got {neighborhood}")
    tuples = list(tuples)
    validate_tuples(tuples)
    n = len(tokens)
    silent = tokens == SILENT_TOKEN

    insertions = []
    prev_pos = -1
    for i, t in enumerate(tuples):
        if t.end > n:
            raise ValueError(
                f"tuple {i} ends at frame {t.end}, beyond the {n}-token sequence"
            )
        nonsilent_after = np.flatnonzero(~silent[t.start:])
        # an all-silent tail is degenerate data; fall back to the segment start
        onset = t.start + int(nonsilent_after[0]) if nonsilent_after.size else t.start
        lo = max(0, onset - neighborhood, prev_pos + 1)
        window_silent = np.flatnonzero(silent[lo:onset])
        pos = lo + int(window_silent[-1]) + 1 if window_silent.size else onset
        pos = max(pos, prev_pos + 1)
        insertions.append((pos, t.spk))
        prev_pos = pos
    return ConditioningPlan(tuple(insertions), source_len=n)


def assemble_conditioning(plan: ConditioningPlan, token_embeddings, table: SpeakerEmbeddingTable) -> np.ndarray:
    """Splice reference-speaker rows into the token embedding sequence."""
    emb = np.asarray(token_embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise ValueError("token embeddings must be a (frames, dim) matrix")
    if emb.shape[0] != plan.source_len:
        raise ValueError(
            f"plan was built for {plan.source_len} tokens, got {emb.shape[0]} rows"
        )
    if not plan.insertions:
        return emb.copy()
    rows = np.stack([table.row(spk) for _pos, spk in plan.insertions])
    if rows.shape[1] != emb.shape[1]:
        raise ValueError(
            f"speaker embedding dim {rows.shape[1]} does not match tokens dim {emb.shape[1]}"
        )
    positions = [pos for pos, _spk in plan.insertions]
    return np.insert(emb, positions, rows, axis=0)


def remove_inserted_rows(plan: ConditioningPlan, assembled) -> np.ndarray:
    """Undo assemble_conditioning, recovering the token embeddings."""
    assembled = np.asarray(assembled)
    expected = plan.source_len + len(plan.insertions)
    if assembled.shape[0] != expected:
        raise ValueError(f"expected {expected} rows, got {assembled.shape[0]}")
    return np.delete(assembled, plan.inserted_row_indices(), axis=0)
