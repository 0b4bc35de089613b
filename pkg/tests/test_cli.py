import json

import pytest

from vibron2d.cli import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, main


def run(tmp_path, *args):
    return main(list(args) + ["--out", str(tmp_path)])


def test_classify_si2c(tmp_path, capsys):
    assert run(tmp_path, "classify", "--config", "si2c", "--l-list", "0") == EXIT_OK
    rows = (tmp_path / "classification.csv").read_text().splitlines()
    assert rows[0] == "l,state_index,lambda_max,phase"
    phases = [r.split(",")[3] for r in rows[1:]]
    assert phases[:7] == ["Bent"] * 7 and phases[7] == "Linear"
    assert "max_chi_at_0=6" in capsys.readouterr().out


def test_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["probe", "--config", "hnc", "--lambda-grid=-1:1:0.1", "--threads", "3", "--out", str(out)]) == 0
        assert main(["fit", "--config", "occco", "--out", str(out)]) == 0
    for name in ("probe_states.csv", "qfs_scan.csv", "pr_scan.csv", "fit_result.json", "fit_residuals.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert not list(a.glob(".*.tmp"))


def test_fit_writes_results(tmp_path):
    assert run(tmp_path, "fit", "--config", "ch3nco") == EXIT_OK
    doc = json.loads((tmp_path / "fit_result.json").read_text())
    assert doc["rms_cm1"] <= 1.15 and doc["n_data"] == 19


def test_fit_dry_run(tmp_path, capsys):
    assert run(tmp_path, "fit", "--config", "occco", "--dry-run") == EXIT_OK
    out = capsys.readouterr().out
    assert "dry run" in out and "linear" in out
    assert not (tmp_path / "fit_result.json").exists()


def test_scan_model(tmp_path):
    assert run(tmp_path, "scan", "--config", "model_xi", "--xi-grid", "0:1:0.5") == EXIT_OK
    rows = (tmp_path / "scan_xi.csv").read_text().splitlines()
    assert rows[0] == "control,level_index,l,energy"
    assert len(rows) == 1 + 3 * (41 + 40)
    assert run(tmp_path, "scan", "--config", "model", "--lambda-grid=-1:1:1") == EXIT_OK
    assert (tmp_path / "scan_lambda.csv").exists()


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "probe", "--config", "unknown_molecule") == EXIT_CONFIG
    bad = tmp_path / "bad.csv"
    bad.write_text("notation,label1,label2,energy_cm1\nbent,1,0,182.2\nbent,x,0,1\n")
    assert run(tmp_path, "fit", "--config", "ch3nco", "--data", str(bad)) == EXIT_DATA
    assert "bad.csv:3" in capsys.readouterr().err
    out_of_range = tmp_path / "range.csv"
    out_of_range.write_text("notation,label1,label2,energy_cm1\nbent,90,0,1.0\n")
    assert run(tmp_path, "fit", "--config", "ch3nco", "--data", str(out_of_range)) == EXIT_DATA
    assert run(tmp_path, "scan", "--config", "si2c", "--xi-grid", "0:1:0.5") == EXIT_CONFIG
    assert run(tmp_path, "fit", "--config", "hnc") == EXIT_CONFIG  # no dataset bundled


def test_numerical_error_exit(tmp_path, capsys):
    cfg = tmp_path / "flat.cfg"
    # l^2 alone does not depend on lambda, so every susceptibility curve is flat
    cfg.write_text("molecule = custom\nhamiltonian = four_body\nN = 4\nP22_cm1 = 1.0\n")
    assert run(tmp_path, "classify", "--config", str(cfg)) == EXIT_NUMERIC
    assert "flat" in capsys.readouterr().err


def test_usage_errors():
    with pytest.raises(SystemExit) as e:
        main(["scan", "--config", "si2c", "--l-list", ""])
    assert e.value.code == 2
    with pytest.raises(SystemExit):
        main(["scan"])
