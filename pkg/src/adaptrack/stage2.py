"""Appearance-based fine matching for pairs the overlap stage left open.

Scores live in [0, 1]. A provider rates one (track, detection) pair; the
matcher greedily takes the highest-scoring pairs above a floor, each row and
column at most once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from adaptrack.core import AssociationResult, Detection, TrackingError
from adaptrack.lifecycle import Track


class MissingEmbedding(TrackingError):
    """A detection lacks the embedding its similarity provider needs."""


@dataclass
class Stage2Config:
    sim_min: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.sim_min <= 1.0:
            raise ValueError(f"sim_min must be in [0, 1], got {self.sim_min}")


@dataclass
class SimilarityMatrix:
    values: np.ndarray  # (num_tracks, num_detections) scores in [0, 1]


class SimilarityProvider:
    """Scores appearance similarity of a track against a detection."""

    def score(self, track: Track, detection: Detection) -> float:
        raise NotImplementedError


@dataclass
class ConstantProvider(SimilarityProvider):
    """Fixed score for every pair; useful for wiring tests and ablations."""

    value: float = 0.0

    def score(self, track, detection):
        return self.value


class CosineProvider(SimilarityProvider):
    """Best cosine match against the track's recent embedding gallery.

    Cosine similarity of unit vectors is mapped from [-1, 1] to [0, 1].
    A track with an empty gallery scores 0 against everything.
    """

    def score(self, track, detection):
        if detection.embedding is None:
            raise MissingEmbedding(
                f"detection at frame {detection.frame} has no embedding")
        gallery = track.gallery_matrix()
        if gallery is None:
            return 0.0
        best = float(np.max(gallery @ detection.embedding))
        return min(max((1.0 + best) / 2.0, 0.0), 1.0)


@dataclass
class PrecomputedProvider(SimilarityProvider):
    """Looks pairs up in an externally computed detection-to-detection table.

    The table maps unordered detection pairs, keyed by (frame, detection
    index), to scores. A track is represented by the detections it recently
    matched; the pair score is the best score against any of them. Unknown
    pairs score 0.
    """

    scores: dict = field(default_factory=dict)

    @staticmethod
    def pair_key(frame_a, index_a, frame_b, index_b):
        return tuple(sorted(((int(frame_a), int(index_a)), (int(frame_b), int(index_b)))))

    def score(self, track, detection):
        key_b = (detection.frame, detection.source_index)
        best = 0.0
        for key_a in track.recent_detections:
            value = self.scores.get(self.pair_key(*key_a, *key_b))
            if value is not None and value > best:
                best = value
        return best


def build_similarity_matrix(tracks: list, detections: list,
                            provider: SimilarityProvider) -> SimilarityMatrix:
    values = np.zeros((len(tracks), len(detections)), dtype=np.float64)
    for i, track in enumerate(tracks):
        for j, detection in enumerate(detections):
            score = float(provider.score(track, detection))
            if not 0.0 <= score <= 1.0:
                raise ValueError(
                    f"similarity provider returned {score} outside [0, 1]")
            values[i, j] = score
    return SimilarityMatrix(values)


def fine_match(sim: SimilarityMatrix, cfg: Stage2Config) -> AssociationResult:
    """Greedy matching: repeatedly take the best remaining pair above sim_min.

    Ties break toward the lowest (row, column) pair, so the result is
    deterministic for equal scores.
    """
    values = sim.values
    num_tracks, num_detections = values.shape
    candidates = sorted(
        ((-values[r, c], r, c)
         for r in range(num_tracks) for c in range(num_detections)
         if values[r, c] >= cfg.sim_min))
    matches = []
    used_rows, used_cols = set(), set()
    for _, row, col in candidates:
        if row in used_rows or col in used_cols:
            continue
        matches.append((row, col))
        used_rows.add(row)
        used_cols.add(col)
    result = AssociationResult(
        matches=sorted(matches),
        unmatched_tracks=sorted(set(range(num_tracks)) - used_rows),
        unmatched_detections=sorted(set(range(num_detections)) - used_cols))
    return result
