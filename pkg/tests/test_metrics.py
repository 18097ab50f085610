import numpy as np
import pytest

from adaptrack.core import BoundingBox, iou
from adaptrack.metrics import (EmptySequence, Stage1Counters, coverage_ratios,
                               evaluate, render_report, write_report_kv)
from conftest import box


def traj(spec):
    """{id: {frame: (x, y, w, h)}} -> Trajectories."""
    return {tid: {f: BoundingBox(*b) for f, b in frames.items()}
            for tid, frames in spec.items()}


def brute_force_idf1(gt, hyp, iou_gate=0.5):
    """IDF1 by exhaustive search over injective identity mappings."""
    counts = {}
    for g, g_frames in gt.items():
        for h, h_frames in hyp.items():
            c = sum(1 for f in g_frames
                    if f in h_frames and iou(g_frames[f], h_frames[f]) >= iou_gate)
            if c:
                counts[(g, h)] = c
    gt_ids, hyp_ids = list(gt), list(hyp)
    best = 0

    def search(i, used, total):
        nonlocal best
        if i == len(gt_ids):
            best = max(best, total)
            return
        search(i + 1, used, total)
        for h in hyp_ids:
            if h not in used:
                search(i + 1, used | {h}, total + counts.get((gt_ids[i], h), 0))

    search(0, frozenset(), 0)
    num_gt = sum(len(f) for f in gt.values())
    num_hyp = sum(len(f) for f in hyp.values())
    return 2.0 * best / (num_gt + num_hyp) if num_gt + num_hyp else 0.0


TWO_TRACKS = traj({
    1: {f: (0, 0, 50, 100) for f in range(1, 6)},
    2: {f: (500, 0, 50, 100) for f in range(1, 6)},
})


class TestPerfect:
    def test_ground_truth_against_itself(self):
        report = evaluate(TWO_TRACKS, TWO_TRACKS)
        assert report.mota == 1.0
        assert report.idf1 == 1.0
        assert (report.ids, report.fp, report.fn) == (0, 0, 0)
        assert (report.mt, report.ml) == (2, 0)
        assert report.num_gt_boxes == 10

    def test_empty_hypothesis(self):
        report = evaluate(TWO_TRACKS, {})
        assert report.mota == 0.0
        assert report.idf1 == 0.0
        assert report.fn == 10
        assert (report.fp, report.ids) == (0, 0)
        assert (report.mt, report.ml) == (0, 2)

    def test_empty_ground_truth_rejected(self):
        with pytest.raises(EmptySequence):
            evaluate({}, TWO_TRACKS)


class TestHandCounted:
    def test_mota_point_seven(self):
        # Ten ground-truth boxes; the hypothesis misses one (FN), invents one
        # far away (FP), and renames the second identity mid-sequence (IDS).
        hyp = traj({
            1: {f: (0, 0, 50, 100) for f in range(1, 5)},          # drops frame 5
            2: {f: (500, 0, 50, 100) for f in range(1, 4)},
            3: {f: (500, 0, 50, 100) for f in range(4, 6)},        # renamed
            9: {3: (900, 500, 50, 100)},                           # spurious
        })
        report = evaluate(TWO_TRACKS, hyp)
        assert (report.fn, report.fp, report.ids) == (1, 1, 1)
        assert report.mota == pytest.approx(0.7, abs=1e-12)
        assert report.idf1 == pytest.approx(0.7, abs=1e-12)

    def test_correspondence_persists_across_frames(self):
        # Frame 2 offers a better box under a new id; the established pair is
        # still above the gate, so it keeps the match and the newcomer is FP.
        gt = traj({1: {1: (0, 0, 100, 100), 2: (0, 0, 100, 100)}})
        hyp = traj({
            1: {1: (25, 0, 100, 100), 2: (25, 0, 100, 100)},  # IOU 0.6
            2: {2: (0, 0, 100, 100)},                          # IOU 1.0
        })
        report = evaluate(gt, hyp)
        assert report.ids == 0
        assert (report.fp, report.fn) == (1, 0)
        assert report.mota == pytest.approx(0.5)

    @pytest.mark.parametrize("covered, mt, ml", [
        (4, 1, 0),   # 0.8 coverage: mostly tracked, inclusive bound
        (3, 0, 0),   # 0.6: neither bucket
        (1, 0, 1),   # 0.2: mostly lost, inclusive bound
    ])
    def test_coverage_buckets(self, covered, mt, ml):
        gt = traj({1: {f: (0, 0, 50, 100) for f in range(1, 6)}})
        hyp = traj({1: {f: (0, 0, 50, 100) for f in range(1, 1 + covered)}})
        report = evaluate(gt, hyp)
        assert (report.mt, report.ml) == (mt, ml)


class TestMonotonicity:
    def test_spurious_boxes_hurt(self):
        perfect = evaluate(TWO_TRACKS, TWO_TRACKS).mota
        noisy = traj({
            1: {f: (0, 0, 50, 100) for f in range(1, 6)},
            2: {f: (500, 0, 50, 100) for f in range(1, 6)},
            7: {2: (900, 600, 40, 80), 4: (900, 600, 40, 80)},
        })
        assert evaluate(TWO_TRACKS, noisy).mota < perfect

    def test_dropped_boxes_hurt(self):
        gappy = traj({
            1: {f: (0, 0, 50, 100) for f in (1, 2, 4, 5)},
            2: {f: (500, 0, 50, 100) for f in range(1, 6)},
        })
        report = evaluate(TWO_TRACKS, gappy)
        assert report.fn == 1
        assert report.mota < 1.0


class TestIdf1Oracle:
    def test_small_instances_match_exhaustive_search(self):
        rng = np.random.default_rng(4242)
        checked = 0
        for _ in range(250):
            gt, hyp = {}, {}
            for tid in range(1, rng.integers(1, 4) + 1):
                gt[tid] = {int(f): box(float(rng.integers(0, 6) * 20),
                                       float(rng.integers(0, 6) * 20), 30, 30)
                           for f in rng.choice(10, size=rng.integers(1, 8),
                                               replace=False)}
            for tid in range(1, rng.integers(1, 4) + 1):
                hyp[tid] = {int(f): box(float(rng.integers(0, 6) * 20),
                                        float(rng.integers(0, 6) * 20), 30, 30)
                            for f in rng.choice(10, size=rng.integers(1, 8),
                                                replace=False)}
            if not any(gt.values()):
                continue
            expected = brute_force_idf1(gt, hyp)
            assert evaluate(gt, hyp).idf1 == pytest.approx(expected, abs=1e-12)
            checked += 1
        assert checked >= 200

    def test_renamed_identity_halves_idtp(self):
        hyp = traj({
            5: {f: (0, 0, 50, 100) for f in range(1, 6)},
            6: {f: (500, 0, 50, 100) for f in (1, 2)},
            7: {f: (500, 0, 50, 100) for f in (3, 4, 5)},
        })
        # Best mapping keeps track 1 whole (5) and picks the longer half (7).
        assert evaluate(TWO_TRACKS, hyp).idf1 == pytest.approx(16 / 20)


class TestCoverageRatios:
    def test_plain_ratio(self):
        counters = Stage1Counters()
        counters.add(88, 100, 100)
        assert coverage_ratios(counters) == pytest.approx((0.88, 0.88))

    def test_nothing_matched(self):
        counters = Stage1Counters(0, 50, 10)
        assert coverage_ratios(counters) == (0.0, 0.0)

    def test_empty_run_rejected(self):
        with pytest.raises(EmptySequence):
            coverage_ratios(Stage1Counters(0, 0, 0))


class TestRendering:
    def test_unavailable_metrics_render_as_backslash(self):
        report = evaluate(TWO_TRACKS, TWO_TRACKS)
        text = render_report(report)
        assert "MOTA     100.00%" in text
        assert "M-det    \\" in text
        assert "FPS      \\" in text

    def test_kv_dump_round_trips(self, tmp_path):
        report = evaluate(TWO_TRACKS, TWO_TRACKS)
        report.m_det = 0.9217
        out = tmp_path / "metrics.txt"
        write_report_kv(report, out)
        lines = out.read_text().splitlines()
        values = dict(line.split("=", 1) for line in lines)
        assert values["mota"] == "1.0"
        assert values["ids"] == "0"
        assert values["m_det"] == "0.9217"
        assert values["fps"] == "\\"
