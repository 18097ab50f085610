"""Synthetic tracking sequences with known ground truth.

Targets are constant-velocity boxes bouncing inside disjoint grid cells (so
identities never overlap), with optional velocity curvature and targets that
leave the image. The detector model drops detections at random, inserts short
per-target occlusion gaps, jitters box geometry, and tags each detection with
a noisy copy of its identity's unit embedding (identity embeddings are
orthonormal). Everything is driven by one seeded generator, so a given
configuration always produces the same sequence.

Two ground truths are returned: the full trajectories, and the "observable"
subset restricted to frames where a detection was actually emitted — the
right reference for scoring association quality, since no non-interpolating
tracker can output a box it was never shown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from adaptrack.core import BoundingBox, Detection, normalize_embedding
from adaptrack.formats import (SequenceInput, Trajectories, write_embedding_sidecar,
                               write_results)


@dataclass
class SynthConfig:
    n_targets: int = 20
    n_frames: int = 300
    image_size: tuple[int, int] = (1920, 1080)
    box_size: tuple[float, float] = (60.0, 120.0)  # nominal w, h; per-target ±20%
    speed_range: tuple[float, float] = (2.0, 6.0)  # per-axis speed, px/frame
    curvature: float = 0.0        # velocity rotation, radians/frame
    dropout: float = 0.1          # per-frame detection miss probability
    n_gaps: int = 2               # occlusion gaps per target
    max_gap: int = 4              # longest gap, frames
    jitter: float = 1.0           # gaussian noise on detected centers/sizes, px
    embed_dim: int = 32
    embed_noise: float = 0.05
    n_exiting: int = 0            # targets that walk off the image mid-sequence
    seed: int = 0

    def __post_init__(self):
        if self.n_targets < 1 or self.n_frames < 2:
            raise ValueError("need at least one target and two frames")
        if self.embed_dim < self.n_targets:
            raise ValueError("embed_dim must be >= n_targets for orthonormal identities")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.n_exiting > self.n_targets:
            raise ValueError("n_exiting cannot exceed n_targets")


@dataclass
class SyntheticSequence:
    seq: SequenceInput
    full_truth: Trajectories
    observable_truth: Trajectories
    embeddings: dict = field(default_factory=dict)  # (frame, det_index) -> vector


def _grid_cells(cfg: SynthConfig) -> list[tuple[float, float, float, float]]:
    """Disjoint (x0, y0, x1, y1) cells, one per target, tiling the image."""
    cols = math.ceil(math.sqrt(cfg.n_targets * cfg.image_size[0] / cfg.image_size[1]))
    rows = math.ceil(cfg.n_targets / cols)
    cell_w = cfg.image_size[0] / cols
    cell_h = cfg.image_size[1] / rows
    if cell_w < cfg.box_size[0] * 1.5 or cell_h < cfg.box_size[1] * 1.5:
        raise ValueError("image too small for this many targets at this box size")
    cells = []
    for i in range(cfg.n_targets):
        r, c = divmod(i, cols)
        cells.append((c * cell_w, r * cell_h, (c + 1) * cell_w, (r + 1) * cell_h))
    return cells


def _gap_frames(rng, cfg: SynthConfig) -> set:
    frames = set()
    if cfg.n_gaps == 0 or cfg.n_frames < 12:
        return frames
    for _ in range(cfg.n_gaps):
        length = int(rng.integers(1, cfg.max_gap + 1))
        start = int(rng.integers(5, cfg.n_frames - length))
        span = set(range(start, start + length))
        if span & frames:
            continue   # keep gaps disjoint; skipping one is fine
        frames |= span
    return frames


def generate(cfg: SynthConfig) -> SyntheticSequence:
    rng = np.random.default_rng(cfg.seed)
    cells = _grid_cells(cfg)
    width, height = cfg.image_size

    # Orthonormal identity embeddings: wrong pairs score near one half under
    # the cosine map, right pairs near one.
    basis, _ = np.linalg.qr(rng.normal(size=(cfg.embed_dim, cfg.n_targets)))
    identity = basis.T

    sizes = []
    centers = []
    velocities = []
    for i in range(cfg.n_targets):
        w = cfg.box_size[0] * rng.uniform(0.8, 1.2)
        h = cfg.box_size[1] * rng.uniform(0.8, 1.2)
        sizes.append((w, h))
        x0, y0, x1, y1 = cells[i]
        centers.append(np.array([rng.uniform(x0 + w / 2 + 1, x1 - w / 2 - 1),
                                 rng.uniform(y0 + h / 2 + 1, y1 - h / 2 - 1)]))
        speed = rng.uniform(*cfg.speed_range, size=2)
        velocities.append(speed * rng.choice([-1.0, 1.0], size=2))

    exiting = set(rng.choice(cfg.n_targets, size=cfg.n_exiting, replace=False).tolist()) \
        if cfg.n_exiting else set()
    exit_frame = {i: int(rng.integers(cfg.n_frames // 3, 2 * cfg.n_frames // 3))
                  for i in exiting}
    gaps = {i: _gap_frames(rng, cfg) for i in range(cfg.n_targets)}
    gone = set()

    rotation = np.array([[math.cos(cfg.curvature), -math.sin(cfg.curvature)],
                         [math.sin(cfg.curvature), math.cos(cfg.curvature)]])

    seq = SequenceInput(name=f"synth-{cfg.seed}", image_size=cfg.image_size,
                        frame_rate=30.0)
    full_truth: Trajectories = {i + 1: {} for i in range(cfg.n_targets)}
    observable: Trajectories = {i + 1: {} for i in range(cfg.n_targets)}
    embeddings = {}

    for frame in range(1, cfg.n_frames + 1):
        emitted = []  # (target, true box)
        for i in range(cfg.n_targets):
            if i in gone:
                continue
            w, h = sizes[i]
            cx, cy = centers[i]
            if not (0 <= cx < width and 0 <= cy < height):
                gone.add(i)
                continue
            box = BoundingBox(cx - w / 2, cy - h / 2, w, h)
            full_truth[i + 1][frame] = box
            if frame not in gaps[i] and rng.random() >= cfg.dropout:
                emitted.append((i, box))

            # Advance the state for the next frame.
            if cfg.curvature:
                velocities[i] = rotation @ velocities[i]
            if i in exiting and frame >= exit_frame[i]:
                # Head straight for the nearest vertical boundary.
                speed = abs(velocities[i][0]) or cfg.speed_range[1]
                velocities[i] = np.array([speed if cx > width / 2 else -speed, 0.0])
            else:
                x0, y0, x1, y1 = cells[i]
                nx, ny = centers[i] + velocities[i]
                if not x0 + w / 2 <= nx <= x1 - w / 2:
                    velocities[i][0] *= -1
                if not y0 + h / 2 <= ny <= y1 - h / 2:
                    velocities[i][1] *= -1
            centers[i] = centers[i] + velocities[i]

        dets = []
        for i, box in (emitted[k] for k in rng.permutation(len(emitted))):
            observable[i + 1][frame] = box
            w = max(box.w + rng.normal(scale=cfg.jitter), 1.0)
            h = max(box.h + rng.normal(scale=cfg.jitter), 1.0)
            cx, cy = box.center
            cx += rng.normal(scale=cfg.jitter)
            cy += rng.normal(scale=cfg.jitter)
            vector = normalize_embedding(
                identity[i] + cfg.embed_noise * rng.normal(size=cfg.embed_dim))
            index = len(dets)
            dets.append(Detection(frame=frame, bbox=BoundingBox(cx - w / 2, cy - h / 2, w, h),
                                  confidence=float(rng.uniform(0.9, 1.0)),
                                  embedding=vector, source_index=index))
            embeddings[(frame, index)] = vector
        if dets:
            seq.detections[frame] = dets

    for truth in (full_truth, observable):
        for track_id in [t for t, frames in truth.items() if not frames]:
            del truth[track_id]
    return SyntheticSequence(seq=seq, full_truth=full_truth,
                             observable_truth=observable, embeddings=embeddings)


def write_files(synth: SyntheticSequence, out_dir) -> dict:
    """Materialize a generated sequence as MOT/sidecar files; returns paths."""
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"dets": out / "det.txt",
             "gt_full": out / "gt_full.txt",
             "gt_observable": out / "gt_observable.txt",
             "embeddings": out / "embeddings.treid"}
    with open(paths["dets"], "w", newline="\n") as fh:
        for frame in synth.seq.frames():
            for det in synth.seq.at(frame):
                b = det.bbox
                fh.write(f"{frame},-1,{b.x:.2f},{b.y:.2f},{b.w:.2f},{b.h:.2f},"
                         f"{det.confidence:.3f},-1,-1,-1\n")
    write_results(synth.full_truth, paths["gt_full"])
    write_results(synth.observable_truth, paths["gt_observable"])
    dim = next(iter(synth.embeddings.values())).shape[0] if synth.embeddings else 1
    write_embedding_sidecar(paths["embeddings"], dim,
                            ((f, i, v) for (f, i), v in sorted(synth.embeddings.items())))
    return paths
