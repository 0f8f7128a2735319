import json
import os

import numpy as np
import pytest

from fepe.cli import main
from fepe.container import read_container


def write_gt(gt_dir, image_id, lines):
    os.makedirs(gt_dir, exist_ok=True)
    with open(os.path.join(gt_dir, f"gt_{image_id}.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def make_toy_dataset(root, n=3):
    """n images, one 40 px square each, sizes via sidecar JSON."""
    gts = os.path.join(root, "gts")
    sizes = {}
    for i in range(n):
        x = 10 + 6 * i
        write_gt(gts, f"im{i}", [f"{x},10,{x + 40},10,{x + 40},50,{x},50,word"])
        sizes[f"im{i}"] = [128, 128]
    sizes_path = os.path.join(root, "sizes.json")
    with open(sizes_path, "w", encoding="utf-8") as fh:
        json.dump(sizes, fh)
    return gts, sizes_path


def run(argv):
    return main(argv)


class TestGenLabels:
    def test_three_images(self, tmp_path, capsys):
        gts, sizes = make_toy_dataset(str(tmp_path))
        out = str(tmp_path / "labels")
        code = run(
            ["gen-labels", "--gts", gts, "--sizes", sizes, "--out", out,
             "--ann-format", "icdar15", "--delta", "0.4", "--mu", "5"]
        )
        assert code == 0
        assert sorted(os.listdir(out)) == ["im0", "im1", "im2"]
        assert "3 images" in capsys.readouterr().out
        meta, arrays = read_container(os.path.join(out, "im0"))
        assert arrays["kernel_map"].sum() > 0
        assert meta["delta"] == 0.4

    def test_even_mu_usage_error(self, tmp_path):
        gts, sizes = make_toy_dataset(str(tmp_path))
        with pytest.raises(SystemExit) as exc:
            run(["gen-labels", "--gts", gts, "--sizes", sizes, "--out", str(tmp_path / "o"),
                 "--ann-format", "icdar15", "--mu", "4"])
        assert exc.value.code == 2

    def test_missing_gt_dir(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["gen-labels", "--gts", str(tmp_path / "nothere"), "--out", str(tmp_path / "o"),
                 "--ann-format", "icdar15"])
        assert exc.value.code == 2
        assert "nothere" in capsys.readouterr().err

    def test_target_size_flag(self, tmp_path):
        gts, sizes = make_toy_dataset(str(tmp_path))
        out = str(tmp_path / "labels")
        assert run(["gen-labels", "--gts", gts, "--sizes", sizes, "--out", out,
                    "--ann-format", "icdar15", "--size", "64x96"]) == 0
        _, arrays = read_container(os.path.join(out, "im0"))
        assert arrays["text_map"].shape == (64, 96)
        assert arrays["surrounding"].shape == (64, 96, 4)

    def test_idempotent_and_worker_invariant(self, tmp_path):
        gts, sizes = make_toy_dataset(str(tmp_path))
        outs = []
        for name, workers in (("a", "1"), ("b", "1"), ("c", "3")):
            out = str(tmp_path / name)
            assert run(["gen-labels", "--gts", gts, "--sizes", sizes, "--out", out,
                        "--ann-format", "icdar15", "--workers", workers]) == 0
            outs.append(out)
        for other in outs[1:]:
            for image_id in os.listdir(outs[0]):
                for fname in os.listdir(os.path.join(outs[0], image_id)):
                    with open(os.path.join(outs[0], image_id, fname), "rb") as f1:
                        with open(os.path.join(other, image_id, fname), "rb") as f2:
                            assert f1.read() == f2.read()


class TestReconstructEvaluate:
    @pytest.fixture
    def labels_dir(self, tmp_path):
        gts, sizes = make_toy_dataset(str(tmp_path))
        out = str(tmp_path / "labels")
        assert run(["gen-labels", "--gts", gts, "--sizes", sizes, "--out", out,
                    "--ann-format", "icdar15"]) == 0
        return gts, out

    def test_round_trip_to_f1(self, tmp_path, labels_dir, capsys):
        gts, labels = labels_dir
        dets = str(tmp_path / "dets")
        assert run(["reconstruct", "--maps", labels, "--out", dets]) == 0
        files = sorted(os.listdir(dets))
        assert files == ["im0.json", "im1.json", "im2.json"]
        capsys.readouterr()
        assert run(["evaluate", "--dets", dets, "--gts", gts, "--ann-format", "icdar15",
                    "--iou", "0.5"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["fmeasure"] == 1.0
        assert report["tp"] == 3

    def test_reconstruct_deterministic(self, tmp_path, labels_dir):
        _, labels = labels_dir
        d1, d2 = str(tmp_path / "d1"), str(tmp_path / "d2")
        assert run(["reconstruct", "--maps", labels, "--out", d1]) == 0
        assert run(["reconstruct", "--maps", labels, "--out", d2]) == 0
        for name in os.listdir(d1):
            with open(os.path.join(d1, name)) as f1, open(os.path.join(d2, name)) as f2:
                assert f1.read() == f2.read()

    def test_all_zero_map_empty_detections(self, tmp_path):
        from fepe.container import write_container

        maps_dir = str(tmp_path / "maps")
        write_container(
            maps_dir, "blank",
            {"score_map": np.zeros((32, 32), "<f4")},
            {"height": 32, "width": 32, "image_id": "blank"},
        )
        dets = str(tmp_path / "dets")
        assert run(["reconstruct", "--maps", maps_dir, "--out", dets]) == 0
        data = json.loads(open(os.path.join(dets, "blank.json")).read())
        assert data["detections"] == []

    def test_bad_bin_thresh(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["reconstruct", "--maps", str(tmp_path), "--out", str(tmp_path / "d"),
                 "--bin-thresh", "1.1"])
        assert exc.value.code == 2

    def test_malformed_container_exit_1(self, tmp_path, capsys):
        maps_dir = tmp_path / "maps"
        bad = maps_dir / "bad"
        bad.mkdir(parents=True)
        (bad / "meta.json").write_text("{broken")
        dets = str(tmp_path / "dets")
        assert run(["reconstruct", "--maps", str(maps_dir), "--out", dets]) == 1
        assert "bad" in capsys.readouterr().err

    def test_evaluate_empty_dets(self, tmp_path, labels_dir, capsys):
        gts, _ = labels_dir
        dets = tmp_path / "empty_dets"
        dets.mkdir()
        for i in range(3):
            (dets / f"im{i}.json").write_text(
                json.dumps({"image_id": f"im{i}", "detections": []})
            )
        capsys.readouterr()
        assert run(["evaluate", "--dets", str(dets), "--gts", gts,
                    "--ann-format", "icdar15"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["precision"] == 0.0
        assert report["recall"] == 0.0
        assert report["fmeasure"] == 0.0

    def test_evaluate_tighter_iou_not_better(self, tmp_path, labels_dir, capsys):
        gts, labels = labels_dir
        dets = str(tmp_path / "dets")
        assert run(["reconstruct", "--maps", labels, "--out", dets]) == 0
        scores = {}
        for thresh in ("0.5", "0.75"):
            capsys.readouterr()
            assert run(["evaluate", "--dets", dets, "--gts", gts,
                        "--ann-format", "icdar15", "--iou", thresh]) == 0
            scores[thresh] = json.loads(capsys.readouterr().out)["fmeasure"]
        assert scores["0.75"] <= scores["0.5"]

    def test_evaluate_id_mismatch_exit_1(self, tmp_path, labels_dir):
        gts, _ = labels_dir
        dets = tmp_path / "dets"
        dets.mkdir()
        (dets / "unknown.json").write_text(
            json.dumps({"image_id": "unknown", "detections": []})
        )
        assert run(["evaluate", "--dets", str(dets), "--gts", gts,
                    "--ann-format", "icdar15"]) == 1


class TestGradcheck:
    def test_dice(self, capsys):
        assert run(["gradcheck", "--loss", "dice", "--trials", "50", "--seed", "42"]) == 0
        out = capsys.readouterr().out
        assert "dice" in out and "ok" in out

    def test_all_four_rows(self, capsys):
        assert run(["gradcheck", "--loss", "all", "--trials", "20", "--seed", "1"]) == 0
        lines = [ln for ln in capsys.readouterr().out.splitlines() if "max_rel_err" in ln]
        assert len(lines) == 4

    def test_zero_trials_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run(["gradcheck", "--trials", "0"])
        assert exc.value.code == 2


class TestViz:
    @pytest.fixture
    def container_dir(self, tmp_path):
        gts, sizes = make_toy_dataset(str(tmp_path), n=1)
        out = str(tmp_path / "labels")
        assert run(["gen-labels", "--gts", gts, "--sizes", sizes, "--out", out,
                    "--ann-format", "icdar15"]) == 0
        return os.path.join(out, "im0")

    def test_container_renders(self, tmp_path, container_dir):
        out = str(tmp_path / "viz")
        assert run(["viz", "--container", container_dir, "--out", out]) == 0
        names = sorted(os.listdir(out))
        assert len(names) == 4  # text, kernel, scale ramp, surrounding tile
        assert any("scale_map" in n for n in names)
        assert any("surrounding" in n for n in names)

    def test_detections_overlay(self, tmp_path, container_dir):
        from PIL import Image

        img_path = str(tmp_path / "im0.png")
        Image.new("RGB", (128, 128), (10, 10, 10)).save(img_path)
        dets_json = str(tmp_path / "im0.json")
        with open(dets_json, "w") as fh:
            json.dump(
                {"image_id": "im0",
                 "detections": [{"points": [[10, 10], [50, 10], [50, 50], [10, 50]], "score": 0.9}]},
                fh,
            )
        out = str(tmp_path / "viz")
        assert run(["viz", "--dets", dets_json, "--image", img_path, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "im0_overlay.png"))

    def test_missing_image_exit_1(self, tmp_path):
        dets_json = str(tmp_path / "d.json")
        with open(dets_json, "w") as fh:
            json.dump({"image_id": "x", "detections": []}, fh)
        assert run(["viz", "--dets", dets_json, "--image", str(tmp_path / "nope.png"),
                    "--out", str(tmp_path / "v")]) == 1

    def test_container_without_surrounding_warns(self, tmp_path, caplog):
        from fepe.container import write_container

        cdir = write_container(
            str(tmp_path / "c"), "partial",
            {"text_map": np.zeros((8, 8), "<u1")},
            {"height": 8, "width": 8, "image_id": "partial"},
        )
        out = str(tmp_path / "viz")
        with caplog.at_level("WARNING", logger="fepe.viz"):
            assert run(["viz", "--container", cdir, "--out", out]) == 0
        assert any("surrounding" in rec.message for rec in caplog.records)


class TestBench:
    def test_small_bench(self, capsys):
        assert run(["bench", "--sizes", "64", "--mus", "3", "5", "--reps", "3",
                    "--seed", "7"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert len(report["cases"]) == 2
        for case in report["cases"]:
            assert case["checksum"] > 0
            assert case["naive_ms"] > 0 and case["fast_ms"] > 0

    def test_reps_floor(self):
        with pytest.raises(SystemExit) as exc:
            run(["bench", "--reps", "2"])
        assert exc.value.code == 2

    def test_even_mu_rejected(self):
        with pytest.raises(SystemExit) as exc:
            run(["bench", "--mus", "4", "--reps", "3"])
        assert exc.value.code == 2


def test_console_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "fepe", "gradcheck", "--loss", "dice", "--trials", "5"],
        capture_output=True, text=True, env={**os.environ, "FEPE_LOG": "info"},
    )
    assert proc.returncode == 0
    assert "dice" in proc.stdout


def test_numba_env_flag_selects_fallback():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "fepe", "bench", "--sizes", "48", "--mus", "3", "--reps", "3"],
        capture_output=True, text=True, env={**os.environ, "FEPE_NUMBA": "0"},
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["backend"] == "numpy"
