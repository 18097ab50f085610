import numpy as np
import pytest

from adaptrack.core import iou
from adaptrack.synth import SynthConfig, generate, write_files

SMALL = SynthConfig(n_targets=6, n_frames=80, image_size=(960, 720),
                    embed_dim=8, seed=7)


class TestConfig:
    def test_embedding_dimension_must_cover_targets(self):
        with pytest.raises(ValueError, match="embed_dim"):
            SynthConfig(n_targets=40, embed_dim=32)

    def test_image_capacity_check(self):
        with pytest.raises(ValueError, match="too small"):
            generate(SynthConfig(n_targets=50, image_size=(400, 300),
                                 embed_dim=64))


class TestDeterminism:
    def test_same_seed_same_sequence(self):
        a, b = generate(SMALL), generate(SMALL)
        assert a.full_truth == b.full_truth
        assert a.observable_truth == b.observable_truth
        assert list(a.seq.detections) == list(b.seq.detections)
        for frame in a.seq.frames():
            for da, db in zip(a.seq.at(frame), b.seq.at(frame)):
                assert da.bbox == db.bbox
                assert da.confidence == db.confidence
                assert np.array_equal(da.embedding, db.embedding)

    def test_same_seed_same_bytes(self, tmp_path):
        paths_a = write_files(generate(SMALL), tmp_path / "a")
        paths_b = write_files(generate(SMALL), tmp_path / "b")
        for key in paths_a:
            assert paths_a[key].read_bytes() == paths_b[key].read_bytes(), key

    def test_different_seeds_differ(self):
        a = generate(SMALL)
        b = generate(SynthConfig(**{**SMALL.__dict__, "seed": 8}))
        assert a.full_truth != b.full_truth


class TestGeometry:
    def test_identities_never_overlap(self):
        synth = generate(SMALL)
        for frame in range(1, SMALL.n_frames + 1):
            boxes = [frames[frame] for frames in synth.full_truth.values()
                     if frame in frames]
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    assert iou(boxes[i], boxes[j]) == 0.0

    def test_full_truth_covers_every_frame_until_exit(self):
        synth = generate(SMALL)
        assert len(synth.full_truth) == SMALL.n_targets
        for frames in synth.full_truth.values():
            assert sorted(frames) == list(range(1, SMALL.n_frames + 1))

    def test_curved_motion_stays_disjoint(self):
        synth = generate(SynthConfig(n_targets=4, n_frames=60, image_size=(960, 720),
                                     embed_dim=8, curvature=0.05, seed=3))
        for frame in range(1, 61):
            boxes = [f[frame] for f in synth.full_truth.values() if frame in f]
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    assert iou(boxes[i], boxes[j]) == 0.0

    def test_exiting_targets_leave_early(self):
        # Fast targets and a narrow image: the worst case (spawn at the
        # midline, turn at the latest allowed frame) still clears the edge.
        cfg = SynthConfig(n_targets=6, n_frames=240, image_size=(640, 480),
                          box_size=(40, 60), speed_range=(5, 8),
                          embed_dim=8, n_exiting=2, seed=11)
        synth = generate(cfg)
        last_frames = sorted(max(frames) for frames in synth.full_truth.values())
        assert sum(1 for f in last_frames if f < cfg.n_frames) >= 2


class TestDetectorModel:
    def test_observable_is_a_subset_of_full(self):
        synth = generate(SMALL)
        for track_id, frames in synth.observable_truth.items():
            for frame, box in frames.items():
                assert synth.full_truth[track_id][frame] == box

    def test_observable_matches_emitted_detections(self):
        synth = generate(SMALL)
        for frame in synth.seq.frames():
            observable = sum(1 for frames in synth.observable_truth.values()
                             if frame in frames)
            assert observable == len(synth.seq.at(frame))

    def test_gap_runs_bounded_without_dropout(self):
        cfg = SynthConfig(n_targets=4, n_frames=100, image_size=(960, 720),
                          embed_dim=8, dropout=0.0, n_gaps=3, max_gap=4, seed=5)
        synth = generate(cfg)
        for frames in synth.observable_truth.values():
            missing = sorted(set(range(1, 101)) - set(frames))
            run = 1
            for prev, cur in zip(missing, missing[1:]):
                run = run + 1 if cur == prev + 1 else 1
                assert run <= cfg.max_gap

    def test_dropout_rate_roughly_respected(self):
        cfg = SynthConfig(n_targets=8, n_frames=200, image_size=(1280, 960),
                          embed_dim=8, dropout=0.3, n_gaps=0, seed=9)
        synth = generate(cfg)
        total = cfg.n_targets * cfg.n_frames
        emitted = sum(len(f) for f in synth.observable_truth.values())
        assert 0.62 < emitted / total < 0.78

    def test_confidences_in_declared_band(self):
        synth = generate(SMALL)
        for frame in synth.seq.frames():
            for det in synth.seq.at(frame):
                assert 0.9 <= det.confidence <= 1.0


class TestEmbeddings:
    def test_sidecar_keys_match_detections(self):
        synth = generate(SMALL)
        expected = {(frame, det.source_index)
                    for frame in synth.seq.frames() for det in synth.seq.at(frame)}
        assert set(synth.embeddings) == expected

    def test_identity_separation(self):
        # Same-identity detections line up; different identities sit near
        # orthogonal, with a wide margin between the two score populations.
        synth = generate(SMALL)
        owner = {}
        for track_id, frames in synth.observable_truth.items():
            for frame, box in frames.items():
                for det in synth.seq.at(frame):
                    if iou(det.bbox, box) > 0.5:
                        owner[(frame, det.source_index)] = track_id
        keys = sorted(owner)[:400]
        same, cross = [], []
        for a in range(len(keys)):
            for b in range(a + 1, min(a + 20, len(keys))):
                dot = float(synth.embeddings[keys[a]] @ synth.embeddings[keys[b]])
                (same if owner[keys[a]] == owner[keys[b]] else cross).append(dot)
        assert min(same) > 0.9
        assert max(np.abs(cross)) < 0.4
