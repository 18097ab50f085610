"""First-stage association: self-adaptive matching on the IOU matrix.

Raw track/detection overlaps are thresholded, then normalized per track by
that track's own running mean of recently matched IOU values (its base IOU),
so a matched pair lands near 1 regardless of the target's motion regime.
Pairs that are unambiguous row-and-column maxima are matched here; everything
else is left for the second stage.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from adaptrack.core import AssociationResult, BoundingBox, iou_matrix


@dataclass
class Stage1Config:
    t_n1: int = 5              # matched-IOU history length per track
    throd_min: float = 0.4     # raw IOU floor below which pairs are zeroed
    match_min: float = 0.85    # minimum normalized score to accept a match
    norm_cap: float = 2.5      # upper clamp on normalized values

    def __post_init__(self):
        if not 0.0 < self.throd_min < 1.0:
            raise ValueError(f"throd_min must be in (0,1): {self.throd_min}")
        if self.match_min <= 0.0:
            raise ValueError(f"match_min must be positive: {self.match_min}")
        if self.t_n1 < 1:
            raise ValueError(f"t_n1 must be >= 1: {self.t_n1}")

    @property
    def default_base(self) -> float:
        """Neutral base IOU for tracks with no matched history yet: the midpoint
        of the admissible raw range [throd_min, 1]."""
        return self.throd_min + (1.0 - self.throd_min) / 2.0


@dataclass
class TrackMotionStats:
    """Per-track motion bookkeeping: matched-IOU history with its running mean,
    and a short center history for the mean velocity."""

    t_n1: int = 5
    t_n2: int = 5
    default_base: float = 0.7
    iou_history: deque = field(default_factory=deque)
    center_history: deque = field(default_factory=deque)

    def __post_init__(self):
        self.iou_history = deque(self.iou_history, maxlen=self.t_n1)
        self.center_history = deque(self.center_history, maxlen=self.t_n2 + 1)

    @property
    def base_iou(self) -> float:
        if not self.iou_history:
            return self.default_base
        return float(sum(self.iou_history) / len(self.iou_history))

    @property
    def mean_velocity(self) -> tuple[float, float] | None:
        """Per-frame displacement averaged over the center window; None until
        there are at least two centers."""
        if len(self.center_history) < 2:
            return None
        first = self.center_history[0]
        last = self.center_history[-1]
        steps = len(self.center_history) - 1
        return ((last[0] - first[0]) / steps, (last[1] - first[1]) / steps)

    def push_center(self, center: tuple[float, float]) -> None:
        self.center_history.append((float(center[0]), float(center[1])))


@dataclass
class NormalizedIouMatrix:
    values: np.ndarray  # thresholded, base-normalized, capped
    raw: np.ndarray     # plain pairwise IOU


def build_iou_matrix(track_boxes: list[BoundingBox],
                     det_boxes: list[BoundingBox]) -> np.ndarray:
    """Pairwise IOU between predicted track boxes (rows) and detections (columns)."""
    return iou_matrix(track_boxes, det_boxes)


def update_base_iou(stats: TrackMotionStats, new_iou: float) -> TrackMotionStats:
    """Push a matched-IOU value into the track's history.

    The zero produced at a track's initialization moment is a sentinel, not an
    observed overlap; it is skipped so the base stays the mean of real entries
    (or the neutral default while there are none).
    """
    if new_iou > 0.0:
        stats.iou_history.append(float(new_iou))
    return stats


def clamp_and_normalize(raw: np.ndarray, bases: np.ndarray,
                        cfg: Stage1Config) -> NormalizedIouMatrix:
    """Zero entries below throd_min, divide the rest by the row track's base
    IOU, and cap at norm_cap."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        return NormalizedIouMatrix(values=np.zeros_like(raw), raw=raw)
    bases = np.asarray(bases, dtype=np.float64).reshape(-1, 1)
    values = np.where(raw >= cfg.throd_min,
                      np.minimum(raw / bases, cfg.norm_cap),
                      0.0)
    return NormalizedIouMatrix(values=values, raw=raw)


def adaptive_match(norm: NormalizedIouMatrix, cfg: Stage1Config) -> AssociationResult:
    """Match pairs that are unambiguous maxima of the normalized matrix.

    A pair (j, i) is accepted iff its value reaches match_min and every other
    entry in row j and in column i stays below match_min; that makes the pair
    the strict maximum of both lines. Ties and contested lines fall through
    unmatched, to be resolved by the second stage.
    """
    values = norm.values
    m, n = values.shape
    result = AssociationResult()
    if m == 0 or n == 0:
        result.unmatched_tracks = list(range(m))
        result.unmatched_detections = list(range(n))
        return result

    # Largest competing entry in each row/column, per cell.
    row_rival = _rival_max(values, axis=1)
    col_rival = _rival_max(values, axis=0)
    accepted = ((values >= cfg.match_min)
                & (row_rival < cfg.match_min)
                & (col_rival < cfg.match_min))

    matched_rows, matched_cols = np.nonzero(accepted)
    result.matches = list(zip(matched_rows.tolist(), matched_cols.tolist()))
    result.unmatched_tracks = sorted(set(range(m)) - set(matched_rows.tolist()))
    result.unmatched_detections = sorted(set(range(n)) - set(matched_cols.tolist()))
    return result


def _rival_max(values: np.ndarray, axis: int) -> np.ndarray:
    """For every cell, the maximum over the other cells of its row (axis=1)
    or column (axis=0). Lines of length 1 get -inf."""
    if values.size == 0:
        return values.copy()
    top = np.max(values, axis=axis, keepdims=True)
    # Second maximum: mask out one occurrence of the top per line.
    masked = values.copy()
    idx = np.argmax(values, axis=axis)
    if axis == 1:
        masked[np.arange(values.shape[0]), idx] = -np.inf
    else:
        masked[idx, np.arange(values.shape[1])] = -np.inf
    second = np.max(masked, axis=axis, keepdims=True)
    # A cell holding the (unique) line maximum competes with the second
    # largest; every other cell competes with the top itself.
    is_top = values == top
    return np.where(is_top, second, top)


def record_matched_iou(prev: float, raw_iou_of_match: float,
                       is_init_frame: bool, cfg: Stage1Config) -> float:
    """Matched-IOU value a track records for the current frame.

    Zero at the initialization moment; the raw overlap when it clears
    throd_min; otherwise the previous value is carried forward (a low-overlap
    reacquisition should not poison the base).
    """
    if is_init_frame:
        return 0.0
    if raw_iou_of_match >= cfg.throd_min:
        return float(raw_iou_of_match)
    return float(prev)
