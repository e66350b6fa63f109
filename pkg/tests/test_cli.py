import csv
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from advact.cli import main
from advact.diagnostics import CSV_COLUMNS

SMOKE = Path(__file__).resolve().parent.parent / "configs" / "smoke.yaml"


def _files(d):
    return {name: (d / name).read_bytes() for name in sorted(os.listdir(d))}


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    assert main(["run", "--config", str(SMOKE), "--output", str(out)]) == 0
    return out


def test_run_writes_expected_files(smoke_run):
    names = sorted(os.listdir(smoke_run))
    assert names == ["aggregate.json", "config.yaml", "diagnostics.csv", "manifest.json",
                     "report_seed1.json", "report_seed2.json", "report_seed3.json", "run.log"]


def test_aggregate_matches_per_seed_reports(smoke_run):
    agg = json.loads((smoke_run / "aggregate.json").read_text())
    reports = [json.loads((smoke_run / f"report_seed{s}.json").read_text()) for s in (1, 2, 3)]
    assert agg["seeds"] == [1, 2, 3]
    values = [r["final"]["mse"] for r in reports]
    assert agg["metrics"]["mse"]["mean"] == pytest.approx(sum(values) / 3, rel=1e-15)
    assert agg["metrics"]["mse"]["std"] == pytest.approx(np.std(values), rel=1e-12)


def test_report_schema(smoke_run):
    r = json.loads((smoke_run / "report_seed2.json").read_text())
    assert r["seed"] == 2 and r["epochs"] == 3
    assert len(r["train_loss"]) == len(r["test_curve"]) == len(r["gradient_chain_ratio"]) == 3
    assert {"initial", "final", "parameters", "mean_ics_drift", "clamp_hits"} <= set(r)
    manifest = json.loads((smoke_run / "manifest.json").read_text())
    assert manifest["seed2"]["parameters"] == r["parameters"]


def test_diagnostics_csv_layout(smoke_run):
    with open(smoke_run / "diagnostics.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    # 3 seeds x 3 epochs x 3 activated layers
    assert len(rows) - 1 == 27


def test_rerun_is_byte_identical(smoke_run):
    first = _files(smoke_run)
    shutil.rmtree(smoke_run)
    # parallel seeds must not change a single byte
    assert main(["run", "--config", str(SMOKE), "--output", str(smoke_run), "--jobs", "3"]) == 0
    assert _files(smoke_run) == first


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_abort_leaves_failed_marker(tmp_path, capsys):
    data = tmp_path / "huge.csv"
    data.write_text("a,y\n" + "".join(f"{i},1e200\n" for i in range(20)))
    cfg = {"output": str(tmp_path / "out"), "seeds": [0],
           "dataset": {"source": "csv", "path": str(data)},
           "model": {"depth": 1, "width": 2, "activation": "tanh", "batchnorm": False},
           "train": {"epochs": 1, "batch_size": 8}}
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(cfg))
    assert main(["run", "--config", str(path)]) == 1
    out = tmp_path / "out"
    assert (out / "FAILED").read_text().startswith("seed 0:")
    assert (out / "manifest.json").exists() and (out / "run.log").exists()
    assert not (out / "report_seed0.json").exists()
    assert "FAILED" in capsys.readouterr().out


def test_gen_writes_loadable_csv(tmp_path, capsys):
    out = tmp_path / "blobs.csv"
    assert main(["gen", "--name", "blobs-2class", "--out", str(out), "--n", "40"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,x2,y" and len(lines) == 41
    assert "wrote 40 rows" in capsys.readouterr().out


def test_verify_prints_table(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 9


def test_bad_config_exits_2(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("output: o\nseeds: [0]\nmodel: {policy: SA, activation: tanh}\n")
    assert main(["run", "--config", str(path)]) == 2
    assert "SA policy" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "advact.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for command in ("run", "verify", "gen"):
        assert command in out.stdout
