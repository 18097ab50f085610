"""Track identity lifecycle: initialization, update, and velocity-aware deletion.

A target seen twice in a row becomes a confirmed trajectory. Unmatched tracks
are split into two kinds each frame: those drifting toward an image boundary
at a pace that will carry them out (deleted after a short grace period) and
everything else, presumed occluded, which is kept alive much longer.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from adaptrack import kalman
from adaptrack.core import Detection
from adaptrack.stage1 import Stage1Config, TrackMotionStats

GALLERY_SIZE = 10


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    TEMPORARILY_LOST = "temporarily_lost"
    DELETED = "deleted"


class LostKind(enum.Enum):
    TEMPORARILY_LOST = "temporarily_lost"
    EXITING = "exiting"


# Legal status transitions; DELETED is absorbing.
ALLOWED_TRANSITIONS = {
    TrackStatus.TENTATIVE: {TrackStatus.TENTATIVE, TrackStatus.CONFIRMED, TrackStatus.DELETED},
    TrackStatus.CONFIRMED: {TrackStatus.CONFIRMED, TrackStatus.TEMPORARILY_LOST, TrackStatus.DELETED},
    TrackStatus.TEMPORARILY_LOST: {TrackStatus.TEMPORARILY_LOST, TrackStatus.CONFIRMED, TrackStatus.DELETED},
    TrackStatus.DELETED: {TrackStatus.DELETED},
}


@dataclass
class LifecycleConfig:
    init_hits: int = 2
    t_n2: int = 5               # frames of center history behind the mean velocity
    throd_del1: int = 30        # miss budget for temporarily lost tracks
    throd_del2: int = 3         # miss budget for exiting tracks
    boundary_factor: float = 2.0
    image_size: tuple[int, int] | None = None
    mv_aware: bool = True
    max_age: int = 30           # single miss budget when mv_aware is off

    def __post_init__(self):
        if not self.throd_del1 > self.throd_del2 >= 1:
            raise ValueError(
                f"need throd_del1 > throd_del2 >= 1: {self.throd_del1}, {self.throd_del2}")
        if self.init_hits < 1 or self.t_n2 < 1 or self.boundary_factor <= 0 or self.max_age < 1:
            raise ValueError("lifecycle parameters must be positive")


@dataclass
class Track:
    """One tracked identity with motion state, appearance memory and status."""

    id: int
    kalman_state: kalman.KalmanState
    status: TrackStatus
    hits: int = 1
    time_since_update: int = 0
    motion_stats: TrackMotionStats = field(default_factory=TrackMotionStats)
    gallery: deque = field(default_factory=lambda: deque(maxlen=GALLERY_SIZE))
    recent_detections: deque = field(default_factory=lambda: deque(maxlen=GALLERY_SIZE))
    last_matched_iou: float = 0.0
    _gallery_cache: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_alive(self) -> bool:
        return self.status is not TrackStatus.DELETED

    def predicted_center(self) -> tuple[float, float]:
        return (float(self.kalman_state.mean[0]), float(self.kalman_state.mean[1]))

    def gallery_matrix(self) -> np.ndarray | None:
        """Gallery embeddings stacked (G, D), cached between appends."""
        if not self.gallery:
            return None
        if self._gallery_cache is None or len(self._gallery_cache) != len(self.gallery):
            self._gallery_cache = np.stack(list(self.gallery))
        return self._gallery_cache

    def append_appearance(self, detection: Detection) -> None:
        self.recent_detections.append((detection.frame, detection.source_index))
        if detection.embedding is not None:
            self.gallery.append(detection.embedding)
            self._gallery_cache = None


def new_track(track_id: int, detection: Detection,
              stage1_cfg: Stage1Config, cfg: LifecycleConfig) -> Track:
    """Seed a track from an unassigned detection."""
    status = TrackStatus.CONFIRMED if cfg.init_hits <= 1 else TrackStatus.TENTATIVE
    stats = TrackMotionStats(t_n1=stage1_cfg.t_n1, t_n2=cfg.t_n2,
                             default_base=stage1_cfg.default_base)
    stats.push_center(detection.bbox.center)
    track = Track(id=track_id,
                  kalman_state=kalman.initiate(detection.bbox),
                  status=status,
                  motion_stats=stats)
    track.append_appearance(detection)
    return track


def on_match(track: Track, detection: Detection, cfg: LifecycleConfig) -> Track:
    """Fold a matched detection into the track and refresh its status."""
    track.kalman_state = kalman.update(track.kalman_state, detection.bbox)
    track.hits += 1
    track.time_since_update = 0
    if track.status is TrackStatus.TENTATIVE and track.hits >= cfg.init_hits:
        track.status = TrackStatus.CONFIRMED
    elif track.status is TrackStatus.TEMPORARILY_LOST:
        track.status = TrackStatus.CONFIRMED
    track.motion_stats.push_center(detection.bbox.center)
    track.append_appearance(detection)
    return track


def classify_lost(track: Track, cfg: LifecycleConfig) -> LostKind:
    """Decide whether an unmatched track is on its way out of the image.

    Exiting means some boundary lies within boundary_factor times the velocity
    component pointing at it (already-outside centers count as exiting).
    Without a defined velocity the track is presumed occluded.
    """
    velocity = track.motion_stats.mean_velocity
    if velocity is None:
        return LostKind.TEMPORARILY_LOST
    if cfg.image_size is None:
        raise ValueError("image_size required to classify lost tracks")
    width, height = cfg.image_size
    cx, cy = track.predicted_center()
    vx, vy = velocity
    factor = cfg.boundary_factor
    if vx > 0 and (width - cx) <= factor * vx:
        return LostKind.EXITING
    if vx < 0 and cx <= factor * -vx:
        return LostKind.EXITING
    if vy > 0 and (height - cy) <= factor * vy:
        return LostKind.EXITING
    if vy < 0 and cy <= factor * -vy:
        return LostKind.EXITING
    return LostKind.TEMPORARILY_LOST


def on_miss(track: Track, cfg: LifecycleConfig) -> Track:
    """Advance an unmatched track one frame: age it, reclassify, maybe delete.

    Tracks still waiting for their second hit die on the first miss (the
    appearance streak must be unbroken). Lost-kind classification is redone
    every missed frame from the predicted position.
    """
    track.time_since_update += 1
    if track.status is TrackStatus.TENTATIVE:
        track.status = TrackStatus.DELETED
        return track

    # While coasting the center history follows the predicted position.
    track.motion_stats.push_center(track.predicted_center())

    if cfg.mv_aware:
        kind = classify_lost(track, cfg)
        budget = cfg.throd_del2 if kind is LostKind.EXITING else cfg.throd_del1
    else:
        budget = cfg.max_age
    if track.time_since_update > budget:
        track.status = TrackStatus.DELETED
    else:
        track.status = TrackStatus.TEMPORARILY_LOST
    return track
