import json
import math

import pytest

from pinnlab import cli

TINY = ["--set", "epochs=6", "--set", "n_interior=30", "--set", "n_boundary=12",
        "--set", "hidden_widths=[6]", "--set", "eval_every=3", "--set", "fd_cells=32"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = cli.main(["run", "--problem", "poisson-1", "--optimizer", "multiadam", "--seeds", "2",
                     "--out", str(out), *TINY])
    assert code == 0
    return out


def test_run_writes_outputs(run_dir):
    for name in ("manifest.json", "history.csv", "metrics.csv", "weights.csv", "histograms.json",
                 "runs.json", "summary.json"):
        assert (run_dir / name).exists(), name
    assert len(list((run_dir / "checkpoints").glob("*.json"))) == 2
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["seeds"] == [0, 1] and "finished" in manifest
    assert manifest["configs"][0]["epochs"] == 6


def test_csv_headers_and_line_endings(run_dir):
    raw = (run_dir / "metrics.csv").read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines()[0].split(",") == cli.METRIC_COLUMNS
    epochs = [int(r["epoch"]) for r in cli.read_csv(run_dir / "metrics.csv") if r["seed"] == "0"]
    assert epochs == [0, 3, 6]
    assert len(cli.read_csv(run_dir / "history.csv")) == 12


def test_summary_recomputes_from_files(run_dir):
    saved = json.loads((run_dir / "summary.json").read_text())
    again = cli.summary_from_files(run_dir)
    assert len(saved) == len(again) == 1
    for key in ("mae", "rel_l2"):
        assert abs(saved[0][key] - again[0][key]) <= 1e-12


def test_seed_env_shifts_seeds(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "10")
    assert cli.main(["run", "--seeds", "0,2", "--out", str(tmp_path), *TINY]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seeds"] == [10, 12] and manifest["seed_env"] == 10


def test_config_file_grid(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps({"problem": "helmholtz-1", "seeds": [0], "epochs": 4,
                               "n_interior": 20, "n_boundary": 8, "hidden_widths": [4],
                               "runs": [{"optimizer": "adam"}, {"optimizer": "pcgrad"}]}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert [r["optimizer"] for r in rows] == ["adam", "pcgrad"]


def test_unknown_problem_lists_registry(tmp_path, capsys):
    assert cli.main(["run", "--problem", "poisson-3", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "poisson-1" in err and "burgers-1" in err


def test_bad_json_reports_location(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "epochs": 5,\n  "seeds": [0,\n}\n')
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "line 4" in capsys.readouterr().err


def test_unknown_field_is_named(tmp_path, capsys):
    assert cli.main(["run", "--set", "epoch=3", "--out", str(tmp_path)]) == 1
    assert "epoch" in capsys.readouterr().err


def test_argparse_errors_map_to_config_exit():
    assert cli.main(["run", "--optimizer", "sgd"]) == 1
    assert cli.main([]) == 1


def test_ablate_betas_grid(tmp_path):
    assert cli.main(["ablate-betas", "--seeds", "1", "--out", str(tmp_path), *TINY]) == 0
    rows = json.loads((tmp_path / "summary.json").read_text())
    assert [(r["beta1"], r["beta2"]) for r in rows] == [tuple(b) for b in cli.optim.BETA_GRID]


def test_verify_scaling(capsys):
    assert cli.main(["verify-scaling", "--networks", "2"]) == 0
    out = capsys.readouterr().out
    assert "ok" in out and "4096" in out
    assert cli.main(["verify-scaling", "--problem", "helmholtz-1"]) == 1
    assert cli.main(["verify-scaling", "--t", "2", "--tol", "-1"]) == 3


def test_weights_command(tmp_path, run_dir):
    assert cli.main(["weights", "--sides", "0", "1"]) == 1
    out = tmp_path / "w.json"
    assert cli.main(["weights", "--sides", "1", "2", "--modes", "20", "--run-dir", str(run_dir),
                     "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc["theory"]) == {"1.0", "2.0"}
    run = doc["runs"]["poisson-1/multiadam/s0"]
    assert run["side"] == 1.0 and run["epoch"] == list(range(1, 7))


def test_oracle_poisson_masks_disks(tmp_path):
    out = tmp_path / "p.csv"
    assert cli.main(["oracle", "--problem", "poisson-1", "--fd-cells", "64", "--out", str(out)]) == 0
    rows = cli.read_csv(out)
    assert len(rows) == 101 * 101
    centre = next(r for r in rows if float(r["x"]) == -0.25 and float(r["y"]) == -0.25)
    assert math.isnan(float(centre["u"]))
    corner = rows[0]
    assert float(corner["u"]) == 1.0
    assert cli.main(["oracle", "--problem", "poisson-1", "--fd-cells", "1", "--out", str(out)]) == 1


def test_oracle_burgers(tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["oracle", "--problem", "burgers-1", "--out", str(out)]) == 0
    rows = cli.read_csv(out)
    assert list(rows[0]) == ["x", "t", "u"] and len(rows) == 25_600
