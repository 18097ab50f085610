"""Tracking quality metrics: MOTA, IDF1, MT/ML, identity switches, and the
first-stage coverage ratios.

Frame-by-frame correspondence follows the CLEAR convention: pairs from the
previous frame persist while both boxes are present and still overlap at the
gate, the remainder is matched by a minimum-cost assignment on 1 - IOU.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from adaptrack.core import TrackingError, iou
from adaptrack.formats import Trajectories

DEFAULT_IOU_GATE = 0.5
MT_COVERAGE = 0.8
ML_COVERAGE = 0.2


class EmptySequence(TrackingError):
    """A metric's denominator is empty (no ground truth or no detections)."""


@dataclass
class Stage1Counters:
    """How much work the first stage absorbed, summed over all frames."""

    total_matchs_num: int = 0
    total_detects_num: int = 0
    total_tracks_num: int = 0

    def add(self, matches: int, detections: int, tracks: int) -> None:
        self.total_matchs_num += matches
        self.total_detects_num += detections
        self.total_tracks_num += tracks


@dataclass
class MetricsReport:
    mota: float
    idf1: float
    mt: int
    ml: int
    ids: int
    fp: int
    fn: int
    num_gt_boxes: int
    m_det: float | None = None   # None when stage 1 was disabled
    m_track: float | None = None
    fps: float | None = None


def _frames_view(trajectories: Trajectories) -> dict:
    """{frame: [(id, box), ...]} with stable id order."""
    view: dict = {}
    for track_id in sorted(trajectories):
        for frame, box in trajectories[track_id].items():
            view.setdefault(frame, []).append((track_id, box))
    return view


def _match_frame(gt_list, hyp_list, prev: dict, iou_gate: float) -> dict:
    """One frame of correspondence: persisted pairs plus assignment on the rest."""
    gt_boxes = dict(gt_list)
    hyp_boxes = dict(hyp_list)
    pairs = {}
    for gt_id, hyp_id in prev.items():
        if gt_id in gt_boxes and hyp_id in hyp_boxes and \
                iou(gt_boxes[gt_id], hyp_boxes[hyp_id]) >= iou_gate:
            pairs[gt_id] = hyp_id
    free_gt = [g for g in gt_boxes if g not in pairs]
    taken = set(pairs.values())
    free_hyp = [h for h in hyp_boxes if h not in taken]
    if free_gt and free_hyp:
        cost = np.array([[1.0 - iou(gt_boxes[g], hyp_boxes[h]) for h in free_hyp]
                         for g in free_gt])
        rows, cols = linear_sum_assignment(cost)
        for r, c in zip(rows, cols):
            if cost[r, c] <= 1.0 - iou_gate:
                pairs[free_gt[r]] = free_hyp[c]
    return pairs


def _idf1(gt_view: dict, hyp_view: dict, iou_gate: float,
          num_gt: int, num_hyp: int) -> float:
    """Identity F1: the best global one-to-one gt-to-hyp identity mapping,
    scored by how many frame boxes it explains on both sides."""
    overlap: dict = {}
    for frame, gt_list in gt_view.items():
        hyp_list = hyp_view.get(frame, [])
        for gt_id, gt_box in gt_list:
            for hyp_id, hyp_box in hyp_list:
                if iou(gt_box, hyp_box) >= iou_gate:
                    key = (gt_id, hyp_id)
                    overlap[key] = overlap.get(key, 0) + 1
    if not overlap:
        return 0.0
    gt_ids = sorted({g for g, _ in overlap})
    hyp_ids = sorted({h for _, h in overlap})
    gain = np.zeros((len(gt_ids), len(hyp_ids)))
    for (gt_id, hyp_id), count in overlap.items():
        gain[gt_ids.index(gt_id), hyp_ids.index(hyp_id)] = count
    rows, cols = linear_sum_assignment(-gain)
    idtp = gain[rows, cols].sum()
    return 2.0 * idtp / (num_gt + num_hyp)


def evaluate(gt: Trajectories, hyp: Trajectories,
             iou_gate: float = DEFAULT_IOU_GATE) -> MetricsReport:
    """Score hypothesis trajectories against ground truth."""
    gt_view = _frames_view(gt)
    hyp_view = _frames_view(hyp)
    num_gt_boxes = sum(len(v) for v in gt_view.values())
    if num_gt_boxes == 0:
        raise EmptySequence("ground truth contains no boxes")
    num_hyp_boxes = sum(len(v) for v in hyp_view.values())

    fp = fn = ids = 0
    matched_per_gt: dict = {g: 0 for g in gt}
    last_hyp_for_gt: dict = {}
    prev_pairs: dict = {}
    for frame in sorted(set(gt_view) | set(hyp_view)):
        gt_list = gt_view.get(frame, [])
        hyp_list = hyp_view.get(frame, [])
        pairs = _match_frame(gt_list, hyp_list, prev_pairs, iou_gate)
        fn += len(gt_list) - len(pairs)
        fp += len(hyp_list) - len(pairs)
        for gt_id, hyp_id in pairs.items():
            matched_per_gt[gt_id] += 1
            previous = last_hyp_for_gt.get(gt_id)
            if previous is not None and previous != hyp_id:
                ids += 1
            last_hyp_for_gt[gt_id] = hyp_id
        prev_pairs = pairs

    mt = ml = 0
    for gt_id, by_frame in gt.items():
        coverage = matched_per_gt[gt_id] / len(by_frame)
        if coverage >= MT_COVERAGE:
            mt += 1
        elif coverage <= ML_COVERAGE:
            ml += 1

    return MetricsReport(
        mota=1.0 - (fn + fp + ids) / num_gt_boxes,
        idf1=_idf1(gt_view, hyp_view, iou_gate, num_gt_boxes, num_hyp_boxes),
        mt=mt, ml=ml, ids=ids, fp=fp, fn=fn,
        num_gt_boxes=num_gt_boxes)


def coverage_ratios(counters: Stage1Counters) -> tuple[float, float]:
    """(matches/detections, matches/track-instances) over the whole run."""
    if counters.total_detects_num == 0 or counters.total_tracks_num == 0:
        raise EmptySequence("no detections or track instances to cover")
    return (counters.total_matchs_num / counters.total_detects_num,
            counters.total_matchs_num / counters.total_tracks_num)


def _cell(value, kind: str) -> str:
    if value is None:
        return "\\"
    if kind == "pct":
        return f"{100.0 * value:.2f}%"
    if kind == "rate":
        return f"{value:.1f}"
    return str(value)


def render_report(report: MetricsReport) -> str:
    """Human-readable metric table; unavailable entries show as a backslash."""
    rows = [("MOTA", _cell(report.mota, "pct")),
            ("IDF1", _cell(report.idf1, "pct")),
            ("MT", _cell(report.mt, "int")),
            ("ML", _cell(report.ml, "int")),
            ("IDS", _cell(report.ids, "int")),
            ("FP", _cell(report.fp, "int")),
            ("FN", _cell(report.fn, "int")),
            ("M-det", _cell(report.m_det, "pct")),
            ("M-track", _cell(report.m_track, "pct")),
            ("FPS", _cell(report.fps, "rate"))]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def write_report_kv(report: MetricsReport, path) -> None:
    """Machine-readable `name=value` dump, one metric per line."""
    def raw(value):
        return "\\" if value is None else repr(float(value)) if isinstance(value, float) else str(value)

    fields = [("mota", report.mota), ("idf1", report.idf1), ("mt", report.mt),
              ("ml", report.ml), ("ids", report.ids), ("fp", report.fp),
              ("fn", report.fn), ("num_gt_boxes", report.num_gt_boxes),
              ("m_det", report.m_det), ("m_track", report.m_track),
              ("fps", report.fps)]
    with open(path, "w", newline="\n") as fh:
        for name, value in fields:
            fh.write(f"{name}={raw(value)}\n")
