import json

import numpy as np
import pytest

from eca.cli import run
from eca.dataset import benchmark_spec, render_synthetic, save_image


@pytest.fixture()
def clean_png(tmp_path):
    rng = np.random.default_rng(3)
    frame, ann = render_synthetic(benchmark_spec("clean", rng, 320, 240), rng_seed=21)
    path = tmp_path / "clean.png"
    save_image(frame, path)
    return path, ann.area


def test_strips_subcommand(capsys):
    assert run(["strips", "--height", "1000", "--count", "3", "--alpha", "8"]) == 0
    assert capsys.readouterr().out.strip() == "65 500 935"


def test_strips_honours_set_overrides(capsys):
    assert run(["strips", "--height", "1000", "--set", "strip_count=8"]) == 0
    assert len(capsys.readouterr().out.split()) == 8


def test_help_exits_zero():
    assert run(["--help"]) == 0


def test_unknown_flag_is_input_error(capsys):
    assert run(["strips", "--height", "100", "--bogus"]) == 1


def test_infer_single_image_json(clean_png, capsys):
    path, truth = clean_png
    assert run(["infer", str(path), "--json"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["area"] == "circle"
    assert record["width"] == 320 and record["height"] == 240
    assert abs(record["cx"] - truth.cx) <= 3
    assert abs(record["r"] - truth.r) <= 3
    assert record["score"] > 0


def test_infer_missing_file_is_input_error(tmp_path, capsys):
    assert run(["infer", str(tmp_path / "nope.png")]) == 1
    assert "error:" in capsys.readouterr().err


def test_infer_learned_requires_model(clean_png, capsys):
    path, _ = clean_png
    assert run(["infer", str(path), "--variant", "learned"]) == 1


def test_infer_overlay_written(clean_png, tmp_path):
    path, _ = clean_png
    overlay_dir = tmp_path / "overlays"
    assert run(["infer", str(path), "--json", "--overlay", str(overlay_dir)]) == 0
    assert (overlay_dir / "clean_overlay.png").is_file()


def test_synth_infer_eval_pipeline(tmp_path, capsys):
    """synth -> infer -> eval compose without glue."""
    data = tmp_path / "frames"
    assert run(["synth", "--count", "6", "--out", str(data), "--width", "320",
                "--height", "240", "--adversarial", "--seed", "4"]) == 0
    assert len(list(data.glob("*.png"))) == 6

    preds = tmp_path / "preds.jsonl"
    assert run(["infer", str(data), "--out", str(preds)]) == 0
    lines = preds.read_text().strip().splitlines()
    assert len(lines) == 6

    report_path = tmp_path / "report.json"
    capsys.readouterr()
    assert run([
        "eval", "--pred", str(preds), "--truth", str(data / "annotations.csv"),
        "--out", str(report_path), "--markdown",
    ]) == 0
    out = capsys.readouterr().out
    assert "avg_err" in out
    assert "| Method | Avg. err. (px) | Miss (%) | Bad Miss (%) |" in out
    report = json.loads(report_path.read_text())
    assert len(report["per_sample"]) == 6
    assert report["avg_error_px"] < 15.0


def test_pseudo_label_subcommand(tmp_path):
    data = tmp_path / "frames"
    run(["synth", "--count", "3", "--out", str(data), "--width", "320", "--height", "240"])
    out_csv = tmp_path / "pseudo.csv"
    assert run(["pseudo-label", "--frames", str(data), "--out", str(out_csv)]) == 0
    assert out_csv.read_text().count("\n") == 4  # header + 3 rows


def test_debug_scores_csv(clean_png, capsys):
    path, _ = clean_png
    assert run(["debug-scores", str(path), "--strip", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,score"
    assert len(lines) == 1 + 320


def test_debug_scores_strip_out_of_range(clean_png, capsys):
    path, _ = clean_png
    assert run(["debug-scores", str(path), "--strip", "99"]) == 1


def test_bench_reports_latency(capsys):
    assert run(["bench", "--frames", "5", "--width", "320", "--height", "240", "--json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["frames"] == 5
    assert stats["min_ms"] <= stats["mean_ms"] <= stats["p99_ms"]


def test_train_and_infer_learned(tmp_path, capsys):
    data = tmp_path / "train"
    val = tmp_path / "val"
    run(["synth", "--count", "8", "--out", str(data), "--width", "160", "--height", "120", "--seed", "1"])
    run(["synth", "--count", "4", "--out", str(val), "--width", "160", "--height", "120", "--seed", "2"])
    model = tmp_path / "model.ecanet"
    assert run([
        "train", "--data", str(data), "--val", str(val), "--out", str(model),
        "--epochs", "2", "--lr", "0.1", "--quiet",
    ]) == 0
    assert model.is_file()
    frame_path = next(data.glob("*.png"))
    assert run(["infer", str(frame_path), "--variant", "learned", "--model", str(model), "--json"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["area"] in ("circle", "full")


def test_config_file_flag(tmp_path, capsys):
    cfg_path = tmp_path / "eca.cfg"
    cfg_path.write_text("strip_count = 6\n")
    assert run(["strips", "--height", "1000", "--config", str(cfg_path)]) == 0
    assert len(capsys.readouterr().out.split()) == 6
