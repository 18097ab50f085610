"""Shared test helpers: compact builders for boxes, detections and tracks."""

from __future__ import annotations

import numpy as np

from adaptrack.core import BoundingBox, Detection
from adaptrack.lifecycle import LifecycleConfig, new_track
from adaptrack.stage1 import Stage1Config


def box(x=0.0, y=0.0, w=10.0, h=10.0) -> BoundingBox:
    return BoundingBox(x, y, w, h)


def centered_box(cx, cy, w=10.0, h=10.0) -> BoundingBox:
    return BoundingBox(cx - w / 2, cy - h / 2, w, h)


def det(bbox=None, frame=1, confidence=1.0, embedding=None, source_index=0) -> Detection:
    return Detection(frame=frame, bbox=bbox or box(), confidence=confidence,
                     embedding=embedding, source_index=source_index)


def unit(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    return (vec / np.linalg.norm(vec)).astype(np.float32)


def make_track(track_id=1, bbox=None, frame=1, embedding=None,
               stage1_cfg=None, lifecycle_cfg=None):
    return new_track(track_id, det(bbox, frame=frame, embedding=embedding),
                     stage1_cfg or Stage1Config(),
                     lifecycle_cfg or LifecycleConfig())
