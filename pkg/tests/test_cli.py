import csv
import io
import json
import logging

import pytest

from segmetrics.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def eval_args(dataset_dirs, out, *extra):
    gt_dir, pred_dir, _ = dataset_dirs
    return (
        "eval", "--gt", str(gt_dir), "--pred", str(pred_dir),
        "--classes", "4", "--out", str(out), *extra,
    )


def test_no_command_is_usage_error(capsys):
    code, _, err = run(capsys)
    assert code == 1
    assert "usage error" in err


def test_panels_then_eval_roundtrip(tmp_path, capsys):
    out = tmp_path / "panels"
    code, stdout, _ = run(capsys, "panels", "--out", str(out))
    assert code == 0
    assert "16 panel pairs" in stdout
    assert len(list((out / "gt").glob("*.png"))) == 16
    assert (out / "panel_layouts.txt").exists()

    report_path = tmp_path / "report.json"
    code, _, err = run(
        capsys,
        "eval", "--gt", str(out / "gt"), "--pred", str(out / "pred"),
        "--classes", "2", "--out", str(report_path),
    )
    assert code == 0, err
    report = json.loads(report_path.read_text())
    assert set(report) == {"aggregates", "config", "images", "schema_version", "tool"}
    assert [img["image_id"] for img in report["images"]] == sorted(
        chr(ord("a") + i) for i in range(16)
    )
    overall = report["aggregates"]["overall"]
    assert 0.0 < overall["rom"] < 1.0


def test_panels_binary_format(tmp_path, capsys):
    out = tmp_path / "panels"
    code, _, _ = run(capsys, "panels", "--out", str(out), "--format", "bin")
    assert code == 0
    assert len(list((out / "pred").glob("*.bin"))) == 16
    code, _, err = run(
        capsys,
        "eval", "--gt", str(out / "gt"), "--pred", str(out / "pred"),
        "--classes", "2", "--out", str(tmp_path / "r.json"),
        "--input-format", "bin",
    )
    assert code == 0, err


def test_eval_to_stdout(dataset_dirs, capsys):
    code, stdout, _ = run(capsys, *eval_args(dataset_dirs, "-"))
    assert code == 0
    assert stdout.endswith("\n")
    report = json.loads(stdout)
    assert len(report["images"]) == 3


def test_eval_csv_shape(tmp_path, dataset_dirs, capsys):
    json_out = tmp_path / "report.json"
    code, _, _ = run(capsys, *eval_args(dataset_dirs, json_out))
    assert code == 0
    report = json.loads(json_out.read_text())
    applicable = sum(
        1 for img in report["images"] for c in img["classes"] if c["applicable"]
    )

    out = tmp_path / "report.csv"
    code, _, _ = run(capsys, *eval_args(dataset_dirs, out), "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    kinds = [row["record"] for row in rows]
    assert kinds.count("overall") == 1
    assert kinds.count("class_mean") == len(report["aggregates"]["per_class"])
    assert kinds.count("class") == applicable
    overall_row = next(row for row in rows if row["record"] == "overall")
    assert json.loads(overall_row["extra"]) == report["config"]


def test_sweep_csv(tmp_path, dataset_dirs, capsys):
    gt_dir, pred_dir, conf_dir = dataset_dirs
    out = tmp_path / "sweep.csv"
    code, _, err = run(
        capsys,
        "eval", "--gt", str(gt_dir), "--pred", str(pred_dir),
        "--conf", str(conf_dir), "--classes", "4",
        "--sweep", "0:0.8:0.4", "--format", "csv", "--out", str(out),
    )
    assert code == 0, err
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    points = [row for row in rows if row["record"] == "sweep_point"]
    assert [row["threshold"] for row in points] == ["0.0", "0.4", "0.8"]
    assert rows[-1]["record"] == "overall"  # config echo row closes the file
    assert json.loads(rows[-1]["extra"])["sweep_thresholds"] == [0.0, 0.4, 0.8]


def test_gate_trips_exit_2(tmp_path, dataset_dirs, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(
        capsys, *eval_args(dataset_dirs, out), "--fail-above", "pixel_error=0.0"
    )
    assert code == 2
    assert "fail-above: pixel_error" in err
    assert out.exists()  # report still written before gating


def test_gate_passes(tmp_path, dataset_dirs, capsys):
    code, _, _ = run(
        capsys, *eval_args(dataset_dirs, tmp_path / "r.json"),
        "--fail-above", "rom=1.0", "--fail-above", "pixel=1.0",
    )
    assert code == 0


def test_gate_usage_errors(tmp_path, dataset_dirs, capsys):
    code, _, err = run(
        capsys, *eval_args(dataset_dirs, tmp_path / "r.json"), "--fail-above", "pe=0.5"
    )
    assert code == 1 and "pe_os or pe_us" in err
    code, _, err = run(
        capsys, *eval_args(dataset_dirs, tmp_path / "r.json"), "--fail-above", "f1=0.5"
    )
    assert code == 1 and "unknown metric" in err
    code, _, err = run(
        capsys, *eval_args(dataset_dirs, tmp_path / "r.json"), "--fail-above", "rom"
    )
    assert code == 1 and "METRIC=VALUE" in err


def test_missing_required_flag(capsys, tmp_path):
    code, _, err = run(capsys, "eval", "--gt", str(tmp_path))
    assert code == 1
    assert "--pred is required" in err


def test_sweep_usage_errors(tmp_path, dataset_dirs, capsys):
    gt_dir, pred_dir, conf_dir = dataset_dirs
    base = (
        "eval", "--gt", str(gt_dir), "--pred", str(pred_dir),
        "--classes", "4", "--out", str(tmp_path / "r.json"),
    )
    code, _, err = run(capsys, *base, "--sweep", "0.5")
    assert code == 1 and "A:B:STEP" in err
    code, _, err = run(capsys, *base, "--conf", str(conf_dir), "--sweep", "0.5:0.1:0.1")
    assert code == 1 and "0 <= A <= B <= 1" in err
    code, _, err = run(capsys, *base, "--sweep", "0:1:0.5")
    assert code == 1 and "needs --conf" in err
    code, _, err = run(
        capsys, *base, "--conf", str(conf_dir),
        "--threshold", "0.5", "--sweep", "0:1:0.5",
    )
    assert code == 1 and "mutually exclusive" in err


def test_sweep_gate_restriction_checked_before_running(tmp_path, dataset_dirs, capsys):
    gt_dir, pred_dir, conf_dir = dataset_dirs
    out = tmp_path / "never.csv"
    code, _, err = run(
        capsys,
        "eval", "--gt", str(gt_dir), "--pred", str(pred_dir),
        "--conf", str(conf_dir), "--classes", "4",
        "--sweep", "0:0.5:0.5", "--out", str(out),
        "--fail-above", "ap=0.1",
    )
    assert code == 1
    assert "ap_error" in err
    assert not out.exists()


def test_config_file_merge(tmp_path, dataset_dirs, capsys):
    gt_dir, pred_dir, conf_dir = dataset_dirs
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# defaults for this dataset\n"
        f"gt = {gt_dir}\n"
        f"pred = {pred_dir}\n"
        f"conf = {conf_dir}\n"
        "classes = 4\n"
        "threshold = 0.5\n"
        "metrics = rom,rum,pixel\n"
    )
    out = tmp_path / "r.json"
    # CLI sweep overrides the file's threshold entirely.
    code, _, err = run(
        capsys,
        "eval", "--config", str(cfg), "--out", str(out), "--sweep", "0:0.4:0.4",
    )
    assert code == 0, err
    report = json.loads(out.read_text())
    assert report["config"]["sweep_thresholds"] == [0.0, 0.4]
    assert report["config"]["confidence_threshold"] is None
    assert report["config"]["metrics"] == ["rom", "rum", "pixel"]

    # Without CLI overrides the file threshold applies.
    code, _, err = run(capsys, "eval", "--config", str(cfg), "--out", str(out))
    assert code == 0, err
    assert json.loads(out.read_text())["config"]["confidence_threshold"] == 0.5


def test_config_file_rejects_unknown_and_nested(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("classses = 4\n")
    code, _, err = run(capsys, "eval", "--config", str(bad))
    assert code == 1 and "unknown key" in err
    bad.write_text("config = other.cfg\n")
    code, _, err = run(capsys, "eval", "--config", str(bad))
    assert code == 1 and "include each other" in err
    code, _, err = run(capsys, "eval", "--config", str(tmp_path / "absent.cfg"))
    assert code == 1 and "cannot read config file" in err


def test_unpaired_policies(tmp_path, dataset_dirs, capsys, caplog):
    gt_dir, pred_dir, _ = dataset_dirs
    (gt_dir / "img9.png").write_bytes((gt_dir / "img0.png").read_bytes())
    out = tmp_path / "r.json"
    code, _, err = run(capsys, *eval_args(dataset_dirs, out))
    assert code == 2
    assert "img9" in err
    with caplog.at_level(logging.WARNING, logger="segmetrics"):
        code, _, _ = run(capsys, *eval_args(dataset_dirs, out), "--unpaired", "skip")
    assert code == 0
    assert any("img9" in m for m in caplog.messages)
    report = json.loads(out.read_text())
    assert [img["image_id"] for img in report["images"]] == ["img0", "img1", "img2"]


def test_manifest_option(tmp_path, dataset_dirs, capsys):
    manifest = tmp_path / "stems.txt"
    manifest.write_text("img1\n")
    out = tmp_path / "r.json"
    code, _, _ = run(
        capsys, *eval_args(dataset_dirs, out), "--manifest", str(manifest)
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert [img["image_id"] for img in report["images"]] == ["img1"]


def test_eval_data_errors_exit_2(tmp_path, capsys):
    code, _, err = run(
        capsys,
        "eval", "--gt", str(tmp_path / "gt"), "--pred", str(tmp_path / "pred"),
        "--classes", "4", "--out", str(tmp_path / "r.json"),
    )
    assert code == 2
    assert "error:" in err


def test_eval_bad_values_exit_1(tmp_path, dataset_dirs, capsys):
    code, _, err = run(capsys, *eval_args(dataset_dirs, tmp_path / "r.json"), "--threshold", "abc")
    assert code == 1
    code, _, err = run(capsys, *eval_args(dataset_dirs, tmp_path / "r.json"), "--connectivity", "6")
    assert code == 1 and "connectivity" in err
    code, _, err = run(capsys, *eval_args(dataset_dirs, tmp_path / "r.json"), "--metrics", "rom,f1")
    assert code == 1 and "unknown metrics" in err
    code, _, err = run(capsys, *eval_args(dataset_dirs, tmp_path / "r.json"), "--format", "xml")
    assert code == 1 and "json or csv" in err


def test_ignore_none_accepted(tmp_path, capsys):
    # The panels carry no ignore pixels, so disabling the ignore id works.
    out = tmp_path / "panels"
    run(capsys, "panels", "--out", str(out))
    code, _, err = run(
        capsys,
        "eval", "--gt", str(out / "gt"), "--pred", str(out / "pred"),
        "--classes", "2", "--out", str(tmp_path / "r.json"), "--ignore", "none",
    )
    assert code == 0, err
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["config"]["ignore_id"] is None


def test_check_command(capsys):
    code, stdout, _ = run(capsys, "check", "--seeds", "3")
    assert code == 0
    assert "implementations agree" in stdout
    code, _, err = run(capsys, "check", "--seeds", "0")
    assert code == 1 and "--seeds" in err


def test_internal_invariant_exit_3(tmp_path, dataset_dirs, capsys, monkeypatch):
    def boom(items, config):
        raise AssertionError("forced")

    monkeypatch.setattr("segmetrics.cli.evaluate_dataset", boom)
    code, _, err = run(capsys, *eval_args(dataset_dirs, tmp_path / "r.json"))
    assert code == 3
    assert "invariant" in err
