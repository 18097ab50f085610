"""File interchange: MOT CSV detections/trajectories, embedding sidecars,
and precomputed similarity score tables.

Detection indices are positional: within each frame, accepted rows are
numbered 0, 1, ... in file order. Sidecars and score tables refer to
detections by (frame, index) using the same numbering.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from adaptrack.core import BoundingBox, Detection, TrackingError, normalize_embedding

log = logging.getLogger(__name__)

SIDECAR_MAGIC = b"TREID1\x00"
SIDECAR_HEADER = struct.Struct("<7sI")   # magic, embedding dimension
SIDECAR_RECORD_HEAD = struct.Struct("<II")  # frame, detection index

# Track id -> {frame -> box}. Shared shape for ground truth, hypotheses
# and anything read back from a results file.
Trajectories = dict


class FormatError(TrackingError):
    """A file does not conform to its declared format."""


@dataclass
class SequenceInput:
    """Per-frame detections plus the sequence-level context the tracker needs."""

    name: str = "sequence"
    detections: dict = field(default_factory=dict)  # frame -> [Detection]
    image_size: tuple[int, int] | None = None
    frame_rate: float = 30.0
    rejected_rows: int = 0

    @property
    def num_frames(self) -> int:
        return max(self.detections) if self.detections else 0

    def frames(self) -> range:
        return range(1, self.num_frames + 1)

    def at(self, frame: int) -> list:
        return self.detections.get(frame, [])


def _parse_row(line: str, path, line_no: int) -> list[float]:
    parts = line.split(",")
    if len(parts) < 7:
        raise FormatError(f"{path}:{line_no}: expected at least 7 fields, got {len(parts)}")
    try:
        return [float(p) for p in parts[:7]]
    except ValueError as exc:
        raise FormatError(f"{path}:{line_no}: {exc}") from None


def _iter_rows(path):
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield line_no, _parse_row(line, path, line_no)


def load_mot_detections(path, name: str | None = None) -> SequenceInput:
    """Read a MOT detection file (`frame,id,x,y,w,h,conf,...`, id = -1).

    Rows with non-positive width or height are dropped and counted;
    confidences are clamped into [0, 1].
    """
    path = Path(path)
    seq = SequenceInput(name=name or path.stem)
    for line_no, row in _iter_rows(path):
        frame = int(row[0])
        if frame < 1:
            raise FormatError(f"{path}:{line_no}: frame numbers start at 1, got {frame}")
        x, y, w, h = row[2:6]
        if w <= 0 or h <= 0:
            seq.rejected_rows += 1
            continue
        conf = min(max(row[6], 0.0), 1.0)
        dets = seq.detections.setdefault(frame, [])
        dets.append(Detection(frame=frame, bbox=BoundingBox(x, y, w, h),
                              confidence=conf, source_index=len(dets)))
    if seq.rejected_rows:
        log.warning("%s: dropped %d rows with non-positive size", path, seq.rejected_rows)
    return seq


def load_mot_trajectories(path) -> Trajectories:
    """Read a MOT ground-truth or results file into {id: {frame: box}}.

    Rows whose flag/confidence column is 0 are ignored (the ground-truth
    convention for boxes excluded from evaluation), as are rows with
    non-positive size.
    """
    path = Path(path)
    trajectories: Trajectories = {}
    for line_no, row in _iter_rows(path):
        frame, track_id = int(row[0]), int(row[1])
        x, y, w, h = row[2:6]
        if row[6] == 0 or w <= 0 or h <= 0:
            continue
        if track_id < 0:
            raise FormatError(f"{path}:{line_no}: trajectory rows need an id >= 0")
        by_frame = trajectories.setdefault(track_id, {})
        if frame in by_frame:
            raise FormatError(f"{path}:{line_no}: duplicate box for id {track_id} frame {frame}")
        by_frame[frame] = BoundingBox(x, y, w, h)
    return trajectories


def write_results(trajectories: Trajectories, path) -> None:
    """Write trajectories as `frame,id,x,y,w,h,1,-1,-1,-1` rows.

    Rows are sorted by frame then id and coordinates fixed to two decimals,
    so identical inputs always produce byte-identical files.
    """
    rows = sorted((frame, track_id, box)
                  for track_id, by_frame in trajectories.items()
                  for frame, box in by_frame.items())
    with open(path, "w", newline="\n") as fh:
        for frame, track_id, box in rows:
            fh.write(f"{frame},{track_id},{box.x:.2f},{box.y:.2f},"
                     f"{box.w:.2f},{box.h:.2f},1,-1,-1,-1\n")


def write_embedding_sidecar(path, dim: int, records) -> None:
    """Write (frame, det_index, vector) records in the binary sidecar layout:
    a "TREID1\\0" magic plus little-endian u32 dimension header, then fixed-size
    records of frame u32, index u32, and dim float32 components.
    """
    if dim < 1:
        raise ValueError(f"embedding dimension must be >= 1, got {dim}")
    with open(path, "wb") as fh:
        fh.write(SIDECAR_HEADER.pack(SIDECAR_MAGIC, dim))
        for frame, det_index, vector in records:
            vector = np.asarray(vector, dtype="<f4")
            if vector.shape != (dim,):
                raise ValueError(f"embedding for ({frame}, {det_index}) has shape "
                                 f"{vector.shape}, expected ({dim},)")
            fh.write(SIDECAR_RECORD_HEAD.pack(frame, det_index))
            fh.write(vector.tobytes())


def load_embedding_sidecar(path) -> dict:
    """Read a sidecar into {(frame, det_index): unit-norm float32 vector}."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < SIDECAR_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, dim = SIDECAR_HEADER.unpack_from(blob)
    if magic != SIDECAR_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if dim < 1:
        raise FormatError(f"{path}: embedding dimension {dim} invalid")
    record_size = SIDECAR_RECORD_HEAD.size + 4 * dim
    body = len(blob) - SIDECAR_HEADER.size
    if body % record_size:
        raise FormatError(f"{path}: {body} record bytes is not a multiple of {record_size}")
    embeddings = {}
    offset = SIDECAR_HEADER.size
    for _ in range(body // record_size):
        frame, det_index = SIDECAR_RECORD_HEAD.unpack_from(blob, offset)
        offset += SIDECAR_RECORD_HEAD.size
        vector = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        key = (frame, det_index)
        if key in embeddings:
            raise FormatError(f"{path}: duplicate record for frame {frame} index {det_index}")
        try:
            embeddings[key] = normalize_embedding(vector)
        except ValueError as exc:
            raise FormatError(f"{path}: frame {frame} index {det_index}: {exc}") from None
    return embeddings


def attach_embeddings(seq: SequenceInput, embeddings: dict) -> int:
    """Give each detection its sidecar embedding; returns how many matched."""
    attached = 0
    for frame, dets in seq.detections.items():
        for det in dets:
            vector = embeddings.get((frame, det.source_index))
            if vector is not None:
                det.embedding = vector
                attached += 1
    return attached


def load_score_table(path) -> dict:
    """Read `frame_a,det_a,frame_b,det_b,score` rows into a symmetric
    pair-score table keyed by sorted ((frame, index), (frame, index))."""
    path = Path(path)
    scores = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise FormatError(f"{path}:{line_no}: expected 5 fields, got {len(parts)}")
            try:
                frame_a, det_a, frame_b, det_b = (int(p) for p in parts[:4])
                score = float(parts[4])
            except ValueError as exc:
                raise FormatError(f"{path}:{line_no}: {exc}") from None
            if not 0.0 <= score <= 1.0:
                raise FormatError(f"{path}:{line_no}: score {score} outside [0, 1]")
            key = tuple(sorted(((frame_a, det_a), (frame_b, det_b))))
            scores[key] = score
    return scores


def write_score_table(scores: dict, path) -> None:
    with open(path, "w", newline="\n") as fh:
        for (key_a, key_b), score in sorted(scores.items()):
            fh.write(f"{key_a[0]},{key_a[1]},{key_b[0]},{key_b[1]},{score:.6f}\n")
