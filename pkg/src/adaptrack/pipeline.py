"""The frame loop: predict, two-stage association, lifecycle, output.

Each frame, every detection ends up in exactly one bucket: matched by the
overlap stage, matched by the appearance stage, seed of a new track, or
discarded below the confidence floor. Confirmed tracks emit one output box
per frame.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from adaptrack import kalman, lifecycle, stage1, stage2
from adaptrack.assignment import AssignmentProblem, hungarian_solve
from adaptrack.config import TrackerConfig
from adaptrack.core import AssociationResult, Detection, TrackingError, iou
from adaptrack.formats import SequenceInput, Trajectories, load_score_table
from adaptrack.metrics import Stage1Counters

log = logging.getLogger(__name__)


@dataclass
class StepResult:
    """One frame's outcome, with the per-detection accounting."""

    rows: list = field(default_factory=list)  # (track_id, BoundingBox) of confirmed tracks
    stage1_matches: int = 0
    stage2_matches: int = 0
    new_tracks: int = 0
    discarded: int = 0


@dataclass
class RunStats:
    counters: Stage1Counters
    frames: int
    association_seconds: float

    @property
    def fps(self) -> float:
        if self.association_seconds <= 0:
            return float("inf")
        return self.frames / self.association_seconds


def make_provider(cfg: TrackerConfig) -> stage2.SimilarityProvider | None:
    if cfg.stage2_provider == "none":
        return None
    if cfg.stage2_provider == "cosine":
        return stage2.CosineProvider()
    if cfg.scores_path is None:
        raise TrackingError("stage2.provider = precomputed needs stage2.scores_path")
    return stage2.PrecomputedProvider(load_score_table(cfg.scores_path))


class Tracker:
    """Online multi-object tracker; feed detections one frame at a time."""

    def __init__(self, config: TrackerConfig | None = None,
                 provider: stage2.SimilarityProvider | None = None):
        self.config = config or TrackerConfig()
        self.provider = provider if provider is not None else make_provider(self.config)
        if self.config.lifecycle.mv_aware and self.config.lifecycle.image_size is None:
            raise TrackingError("velocity-aware deletion needs lifecycle.image_size")
        self.tracks: list[lifecycle.Track] = []
        self.counters = Stage1Counters()
        self._next_id = 1

    def step(self, frame: int, detections: list[Detection]) -> StepResult:
        cfg = self.config
        result = StepResult()
        dets = [d for d in detections if d.confidence >= cfg.min_confidence]
        result.discarded = len(detections) - len(dets)

        for track in self.tracks:
            track.kalman_state = kalman.predict(track.kalman_state)

        # Tracks whose state still describes a usable box enter matching;
        # the rest just age out through on_miss.
        pool, boxes = [], []
        for track in self.tracks:
            try:
                boxes.append(kalman.state_to_bbox(track.kalman_state))
                pool.append(track)
            except kalman.DegenerateState:
                log.warning("frame %d: track %d state degenerated", frame, track.id)

        first, raw = self._stage1(pool, boxes, dets)
        self.counters.add(len(first.matches), len(dets), len(self.tracks))
        result.stage1_matches = len(first.matches)

        matched = [(pool[r], dets[c], float(raw[r, c])) for r, c in first.matches]
        second = self._stage2([pool[r] for r in first.unmatched_tracks],
                              [dets[c] for c in first.unmatched_detections])
        for r, c in second.matches:
            track_index = first.unmatched_tracks[r]
            det = dets[first.unmatched_detections[c]]
            matched.append((pool[track_index], det, iou(boxes[track_index], det.bbox)))
        result.stage2_matches = len(second.matches)

        matched_tracks = set()
        matched_dets = set()
        for track, det, raw_iou in matched:
            track.last_matched_iou = stage1.record_matched_iou(
                track.last_matched_iou, raw_iou, is_init_frame=False, cfg=cfg.stage1)
            stage1.update_base_iou(track.motion_stats, track.last_matched_iou)
            lifecycle.on_match(track, det, cfg.lifecycle)
            matched_tracks.add(id(track))
            matched_dets.add(id(det))

        for track in self.tracks:
            if id(track) not in matched_tracks:
                lifecycle.on_miss(track, cfg.lifecycle)

        for det in dets:
            if id(det) not in matched_dets:
                self.tracks.append(lifecycle.new_track(
                    self._next_id, det, cfg.stage1, cfg.lifecycle))
                self._next_id += 1
                result.new_tracks += 1

        for track in self.tracks:
            if track.status is lifecycle.TrackStatus.CONFIRMED:
                try:
                    result.rows.append((track.id, kalman.state_to_bbox(track.kalman_state)))
                except kalman.DegenerateState:
                    pass
        self.tracks = [t for t in self.tracks if t.is_alive]
        return result

    def _stage1(self, pool, boxes, dets):
        """First-stage association over the full track pool."""
        cfg = self.config
        if cfg.stage1_mode == "off" or not pool or not dets:
            skip = AssociationResult(unmatched_tracks=list(range(len(pool))),
                                     unmatched_detections=list(range(len(dets))))
            return skip, None
        raw = stage1.build_iou_matrix(boxes, [d.bbox for d in dets])
        if cfg.stage1_mode == "hungarian":
            return hungarian_solve(AssignmentProblem(1.0 - raw, gate=cfg.baseline_gate)), raw
        bases = np.array([t.motion_stats.base_iou for t in pool])
        norm = stage1.clamp_and_normalize(raw, bases, cfg.stage1)
        return stage1.adaptive_match(norm, cfg.stage1), raw

    def _stage2(self, tracks, dets) -> AssociationResult:
        if self.provider is None or not tracks or not dets:
            return AssociationResult(unmatched_tracks=list(range(len(tracks))),
                                     unmatched_detections=list(range(len(dets))))
        sim = stage2.build_similarity_matrix(tracks, dets, self.provider)
        return stage2.fine_match(sim, self.config.stage2)


def run_sequence(seq: SequenceInput, config: TrackerConfig | None = None,
                 provider: stage2.SimilarityProvider | None = None
                 ) -> tuple[Trajectories, Stage1Counters, RunStats]:
    """Track a whole sequence; returns trajectories, stage-1 counters, timing.

    Timing covers association only (the per-frame stepping), not file I/O,
    so the frames-per-second figure describes the tracker itself.
    """
    config = config or TrackerConfig()
    if config.lifecycle.image_size is None and seq.image_size is not None:
        config = dataclasses.replace(
            config, lifecycle=dataclasses.replace(config.lifecycle,
                                                  image_size=seq.image_size))
    tracker = Tracker(config, provider)
    trajectories: Trajectories = {}
    elapsed = 0.0
    for frame in seq.frames():
        dets = seq.at(frame)
        start = time.perf_counter()
        step = tracker.step(frame, dets)
        elapsed += time.perf_counter() - start
        total = step.stage1_matches + step.stage2_matches + step.new_tracks + step.discarded
        if total != len(dets):
            raise TrackingError(
                f"frame {frame}: {len(dets)} detections but {total} accounted for")
        for track_id, box in step.rows:
            trajectories.setdefault(track_id, {})[frame] = box
    stats = RunStats(counters=tracker.counters, frames=seq.num_frames,
                     association_seconds=elapsed)
    return trajectories, tracker.counters, stats


# The ablation grid: base appearance-only association, plus the velocity-aware
# deletion and adaptive first stage toggles, separately and together.
ABLATION_MODES = ("B", "B&MA", "B&SA", "B&SA&MA")


def ablation_config(mode: str, base: TrackerConfig) -> TrackerConfig:
    if mode not in ABLATION_MODES:
        raise ValueError(f"unknown ablation mode {mode!r}")
    stage1_mode = "adaptive" if "SA" in mode else "off"
    mv_aware = "MA" in mode
    return dataclasses.replace(
        base, stage1_mode=stage1_mode,
        stage2_provider="cosine" if base.stage2_provider == "none" else base.stage2_provider,
        lifecycle=dataclasses.replace(base.lifecycle, mv_aware=mv_aware))
