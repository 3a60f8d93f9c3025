import csv

import numpy as np
import pytest

from helpers import two_region_case
from depthdenoise.bilateral import joint_bilateral
from depthdenoise.cli import main
from depthdenoise.config import PipelineConfig
from depthdenoise.bench import synthetic_depth, write_synthetic_dataset
from depthdenoise.imagecore import GrayImage, TargetMask, load_gray_image, load_mask, save_gray_image
from depthdenoise.pipeline import extract_structure


def test_denoise_clean_image(tmp_path):
    gt = synthetic_depth(32, 40, seed=2)
    save_gray_image(gt, tmp_path / "in.pgm")
    code = main(["denoise", "--input", str(tmp_path / "in.pgm"), "--output", str(tmp_path / "out.pgm")])
    assert code == 0
    cfg = PipelineConfig()
    edges, _ = extract_structure(gt, TargetMask.empty(gt.shape), cfg)
    expected = joint_bilateral(gt, gt, edges, cfg.bilateral)
    assert load_gray_image(tmp_path / "out.pgm").data.tolist() == np.rint(expected.data).tolist()


def test_missing_input(tmp_path, capsys):
    missing = tmp_path / "nope.pgm"
    code = main(["denoise", "--input", str(missing), "--output", str(tmp_path / "o.pgm")])
    err = capsys.readouterr().err
    assert code == 1 and str(missing) in err and len(err.strip().splitlines()) == 1


def test_region_starved_exit_code(tmp_path, capsys):
    save_gray_image(GrayImage(np.zeros((6, 6))), tmp_path / "zero.pgm")
    code = main(["denoise", "--input", str(tmp_path / "zero.pgm"), "--output", str(tmp_path / "o.pgm")])
    assert code == 2 and "region starved" in capsys.readouterr().err


def test_two_region_fixture_audit(tmp_path):
    img, gt, mask, labels = two_region_case(12, (4, 2, 3))
    save_gray_image(img, tmp_path / "in.pgm")
    args = ["denoise", "--input", str(tmp_path / "in.pgm"), "--output", str(tmp_path / "out.pgm"),
            "--audit", str(tmp_path / "audit.csv"), "--labels-out", str(tmp_path / "labels.pgm"),
            "--patch-size", "3"]
    assert main(args) == 0
    out = load_gray_image(tmp_path / "out.pgm")
    assert not np.any(out.data == 0)
    rendered = load_gray_image(tmp_path / "labels.pgm").data
    with open(tmp_path / "audit.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and list(rows[0]) == ["target_x", "target_y", "source_x", "source_y", "priority",
                                      "distance", "region_label", "fallback_flag"]
    for row in rows:
        assert row["fallback_flag"] == "0"
        t = rendered[int(row["target_y"]), int(row["target_x"])]
        s = rendered[int(row["source_y"]), int(row["source_x"])]
        assert t == s


def test_mask_and_guide_flags(tmp_path):
    gt = synthetic_depth(30, 30, seed=3)
    save_gray_image(gt, tmp_path / "in.pgm")
    mask = np.zeros((30, 30))
    mask[5:8, 20:23] = 255
    save_gray_image(GrayImage(mask), tmp_path / "mask.pgm")
    save_gray_image(GrayImage(255 - gt.data), tmp_path / "guide.png")
    args = ["denoise", "--input", str(tmp_path / "in.pgm"), "--output", str(tmp_path / "out.png"),
            "--mask", str(tmp_path / "mask.pgm"), "--guide", str(tmp_path / "guide.png"),
            "--set", "guide_mode=rgb-gray", "--audit", str(tmp_path / "a.csv")]
    assert main(args) == 0
    assert load_gray_image(tmp_path / "out.png").shape == (30, 30)
    assert len((tmp_path / "a.csv").read_text().splitlines()) >= 2


def test_config_precedence_and_hash(tmp_path, capsys):
    gt = synthetic_depth(24, 24, seed=1)
    save_gray_image(gt, tmp_path / "in.pgm")
    (tmp_path / "c.cfg").write_text("bins=16\nmin_region_px=3\n")
    base = ["denoise", "--input", str(tmp_path / "in.pgm"), "--output", str(tmp_path / "o.pgm"), "-v"]
    assert main(base) == 0
    assert "bins=32" in capsys.readouterr().err
    assert main(base + ["--config", str(tmp_path / "c.cfg")]) == 0
    err = capsys.readouterr().err
    assert "bins=16" in err and "min_region_px=3" in err
    assert main(base + ["--config", str(tmp_path / "c.cfg"), "--set", "bins=8"]) == 0
    err = capsys.readouterr().err
    assert "bins=8" in err and "min_region_px=3" in err and "config hash: " in err


def test_bad_config_exit_1(tmp_path, capsys):
    (tmp_path / "c.cfg").write_text("patch.size=4\n")
    gt = synthetic_depth(10, 10, seed=1)
    save_gray_image(gt, tmp_path / "in.pgm")
    code = main(["denoise", "--input", str(tmp_path / "in.pgm"), "--output", str(tmp_path / "o.pgm"),
                 "--config", str(tmp_path / "c.cfg")])
    assert code == 1 and "patch size must be odd" in capsys.readouterr().err


@pytest.fixture
def small_dataset(tmp_path):
    write_synthetic_dataset(tmp_path / "ds", count=2, height=48, width=56)
    return tmp_path / "ds"


def test_bench_twice_identical_bytes(small_dataset, tmp_path, capsys):
    args = ["bench", "--dataset", str(small_dataset), "--patch-sizes", "5,13,21", "--seed", "42",
            "--search-radius", "12"]
    assert main(args + ["--report", str(tmp_path / "a.csv"), "--table", str(tmp_path / "t.txt")]) == 0
    assert main(args + ["--report", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "t.txt").read_text().splitlines()[1]
    assert header.count("Patch size") == 3


def test_bench_empty_dir(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    code = main(["bench", "--dataset", str(tmp_path / "empty"), "--report", str(tmp_path / "r.csv")])
    assert code == 1 and "empty dataset" in capsys.readouterr().err


def test_degrade_and_synth(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "s"), "--count", "1", "--height", "20", "--width", "20"]) == 0
    src = tmp_path / "s" / "synthetic_000.pgm"
    args = ["degrade", "--input", str(src), "--output", str(tmp_path / "n.pgm"),
            "--mask-out", str(tmp_path / "m.pgm"), "--hole-fraction", "0.1", "--blob-size", "3"]
    assert main(args) == 0
    noisy = load_gray_image(tmp_path / "n.pgm")
    mask = load_mask(tmp_path / "m.pgm")
    assert mask.count() >= 40
    assert np.array_equal(noisy.data == 0, mask.flags)
