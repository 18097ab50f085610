import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adaptrack import stage1
from adaptrack.assignment import AssignmentProblem, hungarian_solve
from adaptrack.core import BoundingBox
from adaptrack.stage1 import (Stage1Config, TrackMotionStats, adaptive_match,
                              build_iou_matrix, clamp_and_normalize,
                              record_matched_iou, update_base_iou)
from conftest import box

CFG = Stage1Config()


def separable_instance(rng, max_size=8):
    """A matching instance where truth is unambiguous: true pairs overlap with
    IOU >= 0.6, false pairs are disjoint (IOU 0 <= 0.2). Returns the raw IOU
    matrix, per-track bases seeded to the true-pair IOUs, and the true
    assignment as {(track, det)} after a random shuffle of detections."""
    n = int(rng.integers(1, max_size + 1))
    tracks, dets = [], []
    for i in range(n):
        # Well-separated grid cells, one target each.
        base_x, base_y = 300.0 * (i % 4), 300.0 * (i // 4)
        w, h = rng.uniform(40, 80), rng.uniform(60, 120)
        track_box = BoundingBox(base_x, base_y, w, h)
        # Shift small enough to keep IOU >= 0.6: for a shift d along one axis,
        # IOU = (1 - d/w) / (1 + d/w); d <= 0.2 * min side keeps it above 0.66.
        dx, dy = rng.uniform(-0.1, 0.1) * w, rng.uniform(-0.1, 0.1) * h
        tracks.append(track_box)
        dets.append(BoundingBox(base_x + dx, base_y + dy, w, h))
    order = rng.permutation(n)
    shuffled = [dets[k] for k in order]
    truth = {(int(k), int(j)) for j, k in enumerate(order)}
    raw = build_iou_matrix(tracks, shuffled)
    bases = np.array([raw[t, d] for t, d in sorted(truth)])
    return raw, bases, truth


class TestConfig:
    def test_defaults(self):
        assert (CFG.t_n1, CFG.throd_min, CFG.match_min, CFG.norm_cap) == (5, 0.4, 0.85, 2.5)
        assert CFG.default_base == pytest.approx(0.7)

    def test_invalid_rejected(self):
        with pytest.raises(ValueError):
            Stage1Config(throd_min=0.0)
        with pytest.raises(ValueError):
            Stage1Config(throd_min=1.0)
        with pytest.raises(ValueError):
            Stage1Config(match_min=0.0)
        with pytest.raises(ValueError):
            Stage1Config(t_n1=0)


class TestBuildIouMatrix:
    def test_identical_pair(self):
        assert build_iou_matrix([box()], [box()]).tolist() == [[1.0]]

    def test_empty_tracks(self):
        matrix = build_iou_matrix([], [box(), box(20, 20), box(40, 40)])
        assert matrix.shape == (0, 3)

    def test_hand_checked_two_by_two(self):
        tracks = [box(0, 0, 10, 10), box(100, 100, 10, 10)]
        dets = [box(5, 0, 10, 10), box(100, 100, 10, 10)]
        matrix = build_iou_matrix(tracks, dets)
        assert matrix[0, 0] == pytest.approx(1 / 3, abs=1e-6)
        assert matrix[0, 1] == 0.0
        assert matrix[1, 0] == 0.0
        assert matrix[1, 1] == 1.0


class TestBaseIou:
    def test_constant_history_mean(self):
        stats = TrackMotionStats()
        for _ in range(5):
            update_base_iou(stats, 0.6)
        update_base_iou(stats, 0.6)
        assert stats.base_iou == pytest.approx(0.6)

    def test_five_value_mean(self):
        stats = TrackMotionStats()
        for v in (0.4, 0.5, 0.6, 0.7):
            update_base_iou(stats, v)
        update_base_iou(stats, 0.8)
        assert stats.base_iou == pytest.approx(0.6)

    def test_first_push_becomes_base(self):
        stats = TrackMotionStats()
        update_base_iou(stats, 0.5)
        assert stats.base_iou == pytest.approx(0.5)

    def test_empty_history_uses_neutral_default(self):
        assert TrackMotionStats().base_iou == pytest.approx(0.7)

    def test_initialization_zero_is_skipped(self):
        stats = TrackMotionStats()
        update_base_iou(stats, 0.0)
        assert len(stats.iou_history) == 0
        assert stats.base_iou == pytest.approx(0.7)

    def test_eviction_beyond_window(self):
        stats = TrackMotionStats(t_n1=5)
        for v in (0.1, 0.9, 0.9, 0.9, 0.9, 0.9):
            update_base_iou(stats, v)
        assert stats.base_iou == pytest.approx(0.9)


class TestClampAndNormalize:
    def test_below_threshold_zeroed(self):
        norm = clamp_and_normalize(np.array([[0.3]]), np.array([0.6]), CFG)
        assert norm.values[0, 0] == 0.0

    def test_matched_value_near_one(self):
        norm = clamp_and_normalize(np.array([[0.6]]), np.array([0.6]), CFG)
        assert norm.values[0, 0] == pytest.approx(1.0)

    def test_capped_at_norm_cap(self):
        norm = clamp_and_normalize(np.array([[0.9]]), np.array([0.3]), CFG)
        assert norm.values[0, 0] == pytest.approx(2.5)

    def test_raw_preserved(self):
        raw = np.array([[0.3, 0.9]])
        norm = clamp_and_normalize(raw, np.array([0.6]), CFG)
        assert norm.raw.tolist() == raw.tolist()

    @given(arrays(np.float64, (4, 5), elements=st.floats(0, 1)),
           arrays(np.float64, (4,), elements=st.floats(0.4, 1)))
    def test_bounds_invariant(self, raw, bases):
        values = clamp_and_normalize(raw, bases, CFG).values
        assert np.all(values >= 0.0)
        assert np.all(values <= CFG.norm_cap)
        assert np.all(values[raw < CFG.throd_min] == 0.0)


class TestAdaptiveMatch:
    def match_set(self, values):
        norm = stage1.NormalizedIouMatrix(values=np.asarray(values, dtype=float),
                                          raw=np.asarray(values, dtype=float))
        return set(adaptive_match(norm, CFG).matches)

    def test_clean_diagonal(self):
        assert self.match_set([[1.2, 0.3], [0.2, 1.1]]) == {(0, 0), (1, 1)}

    def test_contested_lines_rejected(self):
        # (0,0) blocked by the 0.9 in its row; (1,1) blocked by the 0.9 in its column.
        assert self.match_set([[1.2, 0.9], [0.2, 1.1]]) == set()

    def test_single_zero_below_match_min(self):
        norm = stage1.NormalizedIouMatrix(values=np.array([[0.0]]), raw=np.array([[0.0]]))
        result = adaptive_match(norm, CFG)
        assert result.matches == []
        assert result.unmatched_tracks == [0]
        assert result.unmatched_detections == [0]

    def test_exact_tie_is_ambiguous(self):
        assert self.match_set([[1.0, 1.0]]) == set()

    def test_empty_matrix(self):
        result = adaptive_match(stage1.NormalizedIouMatrix(
            values=np.zeros((0, 2)), raw=np.zeros((0, 2))), CFG)
        assert result.unmatched_detections == [0, 1]

    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(0, 2.5)))
    @settings(max_examples=200)
    def test_partition_and_conservativeness(self, values):
        norm = stage1.NormalizedIouMatrix(values=values, raw=values)
        result = adaptive_match(norm, CFG)
        result.validate(num_tracks=values.shape[0], num_detections=values.shape[1])
        for r, c in result.matches:
            assert values[r, c] >= CFG.match_min

    def test_separable_instances_equal_hungarian(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            raw, bases, truth = separable_instance(rng)
            norm = clamp_and_normalize(raw, bases, CFG)
            adaptive = set(adaptive_match(norm, CFG).matches)
            hungarian = set(hungarian_solve(
                AssignmentProblem(1.0 - raw, gate=0.7)).matches)
            assert adaptive == hungarian == truth


class TestRecordMatchedIou:
    def test_init_frame_records_zero(self):
        assert record_matched_iou(0.7, 0.9, is_init_frame=True, cfg=CFG) == 0.0

    def test_good_overlap_recorded(self):
        assert record_matched_iou(0.5, 0.7, is_init_frame=False, cfg=CFG) == 0.7

    def test_weak_overlap_carries_previous(self):
        assert record_matched_iou(0.55, 0.2, is_init_frame=False, cfg=CFG) == 0.55

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone_safety(self, prev, raw):
        value = record_matched_iou(prev, raw, is_init_frame=False, cfg=CFG)
        assert value >= 0.0
        if raw >= CFG.throd_min:
            assert value >= CFG.throd_min
