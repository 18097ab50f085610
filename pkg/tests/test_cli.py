import pytest

from adaptrack import cli
from adaptrack.synth import SynthConfig, generate, write_files

DETS = """\
1,-1,100,100,60,120,0.95
1,-1,800,500,60,120,0.95
2,-1,103,100,60,120,0.95
2,-1,798,501,60,120,0.95
3,-1,106,100,60,120,0.95
3,-1,796,502,60,120,0.95
"""


@pytest.fixture
def det_file(tmp_path):
    path = tmp_path / "det.txt"
    path.write_text(DETS)
    return path


class TestTrack:
    def test_writes_results(self, det_file, tmp_path, capsys):
        out = tmp_path / "results.txt"
        code = cli.main(["track", "--dets", str(det_file), "--out", str(out),
                         "--image-size", "1000x800"])
        assert code == 0
        assert "2 tracks" in capsys.readouterr().out
        lines = out.read_text().splitlines()
        assert len(lines) == 4                      # confirmed from frame 2
        assert lines[0].startswith("2,1,")

    def test_byte_identical_reruns(self, det_file, tmp_path):
        outs = [tmp_path / "a.txt", tmp_path / "b.txt"]
        for out in outs:
            assert cli.main(["track", "--dets", str(det_file), "--out", str(out),
                             "--image-size", "1000x800"]) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_metrics_printed_with_ground_truth(self, tmp_path, capsys):
        data = generate(SynthConfig(n_targets=4, n_frames=40, image_size=(960, 720),
                                    embed_dim=8, seed=2))
        paths = write_files(data, tmp_path)
        out = tmp_path / "results.txt"
        code = cli.main(["track", "--dets", str(paths["dets"]),
                         "--embeddings", str(paths["embeddings"]),
                         "--gt", str(paths["gt_observable"]),
                         "--stage2", "cosine",
                         "--image-size", "960x720", "--out", str(out)])
        captured = capsys.readouterr().out
        assert code == 0
        assert "MOTA" in captured
        assert "M-det" in captured

    def test_missing_image_size_is_a_clean_error(self, det_file, tmp_path, capsys):
        code = cli.main(["track", "--dets", str(det_file),
                         "--out", str(tmp_path / "r.txt")])
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_mv_aware_off_needs_no_image_size(self, det_file, tmp_path):
        code = cli.main(["track", "--dets", str(det_file), "--mv-aware", "off",
                         "--out", str(tmp_path / "r.txt")])
        assert code == 0

    def test_missing_input_file(self, tmp_path, capsys):
        code = cli.main(["track", "--dets", str(tmp_path / "nope.txt"),
                         "--out", str(tmp_path / "r.txt")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_config_file_applies(self, det_file, tmp_path):
        cfg = tmp_path / "tracker.cfg"
        cfg.write_text("tracker.min_confidence = 0.99\n"
                       "lifecycle.enabled_mv_aware = false\n")
        out = tmp_path / "r.txt"
        code = cli.main(["track", "--dets", str(det_file), "--config", str(cfg),
                         "--out", str(out)])
        assert code == 0
        assert out.read_text() == ""                # everything below the floor


class TestEval:
    def test_perfect_score_and_kv_dump(self, tmp_path, capsys):
        data = generate(SynthConfig(n_targets=3, n_frames=30, image_size=(960, 720),
                                    embed_dim=8, seed=4))
        paths = write_files(data, tmp_path)
        kv = tmp_path / "report.txt"
        code = cli.main(["eval", "--gt", str(paths["gt_full"]),
                         "--results", str(paths["gt_full"]), "--out", str(kv)])
        assert code == 0
        assert "MOTA     100.00%" in capsys.readouterr().out
        assert "mota=1.0" in kv.read_text()


class TestBenchAndAblate:
    def test_bench_small_sequence(self, tmp_path, capsys):
        out_dir = tmp_path / "bench"
        code = cli.main(["bench", "--targets", "4", "--frames", "40",
                         "--seed", "3", "--out", str(out_dir)])
        captured = capsys.readouterr().out
        assert code == 0
        assert "MOTA" in captured
        assert (out_dir / "results.txt").exists()
        assert (out_dir / "det.txt").exists()

    def test_ablate_prints_all_modes(self, capsys):
        code = cli.main(["ablate", "--targets", "4", "--frames", "30",
                         "--seed", "3"])
        captured = capsys.readouterr().out
        assert code == 0
        for mode in ("B ", "B&MA", "B&SA ", "B&SA&MA"):
            assert mode in captured

    def test_bad_image_size_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["track", "--dets", "x.txt", "--image-size", "huge"])
