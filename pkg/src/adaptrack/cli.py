"""Command-line entry points: track, eval, bench, ablate.

Log verbosity comes from the MOTS_LOG environment variable (standard logging
level names; default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from adaptrack import config as config_mod
from adaptrack import formats, metrics, pipeline, synth


def _parse_image_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        size = (int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if size[0] < 1 or size[1] < 1:
        raise argparse.ArgumentTypeError(f"image size must be positive, got {text!r}")
    return size


def _add_tracker_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--stage1", choices=("adaptive", "hungarian", "off"),
                        help="first-stage matcher (default adaptive)")
    parser.add_argument("--stage2", choices=("cosine", "precomputed", "off"),
                        help="second-stage similarity provider")
    parser.add_argument("--mv-aware", choices=("on", "off"),
                        help="velocity-aware lost-track deletion")
    parser.add_argument("--image-size", type=_parse_image_size, metavar="WxH",
                        help="image size, needed for velocity-aware deletion")


def _build_config(args) -> config_mod.TrackerConfig:
    file_values = config_mod.parse_config_file(args.config) if args.config else {}
    overrides = {}
    if getattr(args, "stage2", None):
        overrides["stage2.provider"] = "none" if args.stage2 == "off" else args.stage2
    if getattr(args, "mv_aware", None):
        overrides["lifecycle.enabled_mv_aware"] = args.mv_aware
    cfg = config_mod.build_config(file_values, overrides)
    if getattr(args, "stage1", None):
        cfg.stage1_mode = args.stage1
    if getattr(args, "image_size", None):
        cfg.lifecycle.image_size = args.image_size
    return cfg


def _load_sequence(args) -> formats.SequenceInput:
    seq = formats.load_mot_detections(args.dets)
    if args.image_size:
        seq.image_size = args.image_size
    if args.embeddings:
        attached = formats.attach_embeddings(
            seq, formats.load_embedding_sidecar(args.embeddings))
        logging.getLogger(__name__).info("attached %d embeddings", attached)
    return seq


def _finish_report(report, counters, stats, cfg) -> None:
    if cfg.stage1_mode != "off" and counters.total_detects_num:
        report.m_det, report.m_track = metrics.coverage_ratios(counters)
    report.fps = stats.fps


def cmd_track(args) -> int:
    cfg = _build_config(args)
    seq = _load_sequence(args)
    trajectories, counters, stats = pipeline.run_sequence(seq, cfg)
    formats.write_results(trajectories, args.out)
    print(f"{seq.name}: {seq.num_frames} frames, {len(trajectories)} tracks, "
          f"{stats.fps:.1f} fps -> {args.out}")
    if args.gt:
        report = metrics.evaluate(formats.load_mot_trajectories(args.gt), trajectories)
        _finish_report(report, counters, stats, cfg)
        print(metrics.render_report(report))
    return 0


def cmd_eval(args) -> int:
    gt = formats.load_mot_trajectories(args.gt)
    hyp = formats.load_mot_trajectories(args.results)
    report = metrics.evaluate(gt, hyp, iou_gate=args.iou_gate)
    print(metrics.render_report(report))
    if args.out:
        metrics.write_report_kv(report, args.out)
    return 0


def _synth_config(args) -> synth.SynthConfig:
    return synth.SynthConfig(n_targets=args.targets, n_frames=args.frames,
                             dropout=args.dropout, curvature=args.curvature,
                             n_exiting=args.exiting, seed=args.seed)


def _add_synth_flags(parser) -> None:
    parser.add_argument("--targets", type=int, default=20)
    parser.add_argument("--frames", type=int, default=300)
    parser.add_argument("--dropout", type=float, default=0.1)
    parser.add_argument("--curvature", type=float, default=0.0,
                        help="velocity rotation per frame, radians")
    parser.add_argument("--exiting", type=int, default=0,
                        help="targets that leave the image mid-sequence")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sim-min", type=float, default=0.7,
                        help="stage-2 floor for benchmark runs; the synthetic "
                             "embeddings leave a wide gap around it")


def _bench_config(args, mode: str | None = None) -> config_mod.TrackerConfig:
    cfg = _build_config(args)
    if not getattr(args, "stage2", None):
        cfg.stage2_provider = "cosine"
    cfg.stage2.sim_min = args.sim_min
    if mode is not None:
        cfg = pipeline.ablation_config(mode, cfg)
    return cfg


def cmd_bench(args) -> int:
    data = synth.generate(_synth_config(args))
    cfg = _bench_config(args)
    trajectories, counters, stats = pipeline.run_sequence(data.seq, cfg)
    report = metrics.evaluate(data.observable_truth, trajectories)
    _finish_report(report, counters, stats, cfg)
    print(f"{data.seq.name}: {data.seq.num_frames} frames, "
          f"{len(data.full_truth)} targets")
    print(metrics.render_report(report))
    if args.out:
        paths = synth.write_files(data, args.out)
        formats.write_results(trajectories, paths["dets"].parent / "results.txt")
        print(f"wrote {paths['dets'].parent}")
    return 0


def cmd_ablate(args) -> int:
    data = synth.generate(_synth_config(args))
    header = f"{'mode':<10} {'MOTA':>8} {'IDF1':>8} {'IDS':>4} {'FP':>5} {'FN':>5} " \
             f"{'M-det':>8} {'M-track':>8} {'FPS':>8} {'time':>8}"
    print(header)
    for mode in pipeline.ABLATION_MODES:
        cfg = _bench_config(args, mode)
        start = time.perf_counter()
        trajectories, counters, stats = pipeline.run_sequence(data.seq, cfg)
        wall = time.perf_counter() - start
        report = metrics.evaluate(data.observable_truth, trajectories)
        _finish_report(report, counters, stats, cfg)
        cell = lambda v: "\\" if v is None else f"{100 * v:.2f}%"
        print(f"{mode:<10} {cell(report.mota):>8} {cell(report.idf1):>8} "
              f"{report.ids:>4} {report.fp:>5} {report.fn:>5} "
              f"{cell(report.m_det):>8} {cell(report.m_track):>8} "
              f"{stats.fps:>8.1f} {wall:>7.2f}s")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MOTS_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="adaptrack",
        description="two-stage multi-object tracker over MOT-format detections")
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the tracker on a detection file")
    p_track.add_argument("--dets", required=True, help="MOT detection file")
    p_track.add_argument("--embeddings", help="embedding sidecar for stage 2")
    p_track.add_argument("--gt", help="ground truth; if given, metrics are printed")
    p_track.add_argument("--out", default="results.txt", help="output results file")
    _add_tracker_flags(p_track)
    p_track.set_defaults(run=cmd_track)

    p_eval = sub.add_parser("eval", help="score a results file against ground truth")
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--results", required=True)
    p_eval.add_argument("--iou-gate", type=float, default=metrics.DEFAULT_IOU_GATE)
    p_eval.add_argument("--out", help="also write a name=value report here")
    p_eval.set_defaults(run=cmd_eval)

    p_bench = sub.add_parser("bench", help="run on a generated synthetic sequence")
    _add_synth_flags(p_bench)
    _add_tracker_flags(p_bench)
    p_bench.add_argument("--out", help="directory for the generated files + results")
    p_bench.set_defaults(run=cmd_bench)

    p_ablate = sub.add_parser("ablate", help="compare the four toggle combinations")
    _add_synth_flags(p_ablate)
    _add_tracker_flags(p_ablate)
    p_ablate.set_defaults(run=cmd_ablate)

    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except Exception as exc:  # surface a clean one-liner, not a stack trace
        if os.environ.get("MOTS_LOG", "").upper() == "DEBUG":
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
