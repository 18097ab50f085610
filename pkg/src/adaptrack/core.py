"""Shared geometric and pipeline data model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class TrackingError(Exception):
    """Base class for errors raised by this package."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in top-left + width/height pixel convention."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"non-finite box coordinates: {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"degenerate box, w and h must be positive: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes. Symmetric, 0 when disjoint.

    All areas are computed from the same corner differences, so identical
    boxes score exactly 1 despite floating-point edges.
    """
    ix = min(a.right, b.right) - max(a.x, b.x)
    iy = min(a.bottom, b.bottom) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a.right - a.x) * (a.bottom - a.y)
    area_b = (b.right - b.x) * (b.bottom - b.y)
    union = area_a + area_b - inter
    return inter / union


def iou_matrix(boxes_a: list[BoundingBox], boxes_b: list[BoundingBox]) -> np.ndarray:
    """Pairwise IOU, shape (len(boxes_a), len(boxes_b)). Empty inputs give an empty matrix."""
    m, n = len(boxes_a), len(boxes_b)
    out = np.zeros((m, n), dtype=np.float64)
    if m == 0 or n == 0:
        return out
    a = np.array([b.as_tuple() for b in boxes_a], dtype=np.float64)
    b = np.array([b.as_tuple() for b in boxes_b], dtype=np.float64)
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[None, :, 0], b[None, :, 1]
    bx2, by2 = bx1 + b[None, :, 2], by1 + b[None, :, 3]
    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    # Areas from the same corner differences as the intersection, so that
    # identical boxes come out at exactly 1 (matches scalar iou()).
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    np.divide(inter, union, out=out, where=union > 0)
    return out


@dataclass
class Detection:
    """One detector observation: frame index, box, confidence and optional appearance."""

    frame: int
    bbox: BoundingBox
    confidence: float
    embedding: np.ndarray | None = None
    source_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")
        if self.embedding is not None:
            self.embedding = normalize_embedding(np.asarray(self.embedding, dtype=np.float32))


def normalize_embedding(vec: np.ndarray) -> np.ndarray:
    """Scale an appearance vector to unit L2 norm so cosine similarity is a dot product.

    Vectors already unit-length (within 1e-6) pass through untouched, keeping
    normalization idempotent at 32-bit precision: reloading a file of unit
    vectors reproduces their bytes exactly.
    """
    vec = np.asarray(vec, dtype=np.float32)
    norm = float(np.linalg.norm(vec.astype(np.float64)))
    if not math.isfinite(norm) or norm <= 0.0:
        raise ValueError("embedding has zero or non-finite norm")
    if abs(norm - 1.0) <= 1e-6:
        return vec
    return (vec / norm).astype(np.float32)


@dataclass
class AssociationResult:
    """Outcome of one matching pass over M tracks and N detections.

    ``matches`` holds (track_index, detection_index) pairs positional in the
    inputs given to the matcher; together with the unmatched lists they
    partition both input index sets exactly.
    """

    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)

    def validate(self, num_tracks: int, num_detections: int) -> None:
        """Raise if this result is not a one-to-one partition of both index sets."""
        t_matched = [t for t, _ in self.matches]
        d_matched = [d for _, d in self.matches]
        if len(set(t_matched)) != len(t_matched):
            raise TrackingError("track assigned more than once")
        if len(set(d_matched)) != len(d_matched):
            raise TrackingError("detection assigned more than once")
        if sorted(t_matched + self.unmatched_tracks) != list(range(num_tracks)):
            raise TrackingError("track indices do not partition the input set")
        if sorted(d_matched + self.unmatched_detections) != list(range(num_detections)):
            raise TrackingError("detection indices do not partition the input set")
