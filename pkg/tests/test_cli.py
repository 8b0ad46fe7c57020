import csv
import json
import math
import os

import pytest

from glidesim.cli import batch_rows, main
from glidesim.config import bundled_asset_path
from glidesim.engine import EventLog, metrics


def run_cli(*argv):
    return main(list(argv))


# ---------------------------------------------------------------------------
# run


def test_run_bundled_scenario(tmp_path, capsys):
    out = tmp_path / "trial.ndjson"
    assert run_cli("run", "--config", "glide_straight", "--out", str(out)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["completed"] and report["reason"] == "arrived"
    log = EventLog.read(out)
    assert log.end["reason"] == "arrived"
    side = json.loads((tmp_path / "trial.ndjson.metrics.json").read_text())
    assert side == metrics(log).to_dict()


def test_run_bad_config_path_is_usage_error(capsys):
    assert run_cli("run", "--config", "/nope/missing.json") == 2
    assert "missing.json" in capsys.readouterr().err


def test_run_seed_override_recorded(tmp_path):
    out = tmp_path / "t.ndjson"
    run_cli("run", "--config", "glide_straight", "--seed", "77",
            "--out", str(out))
    assert EventLog.read(out).header["seed"] == 77


def test_run_timeout_is_fault(tmp_path, capsys):
    doc = {"map": "straight", "mode": "glide_directed", "seed": 0,
           "start": [2.0, 1.25, 0.0], "goal": "end", "timeout": 1.0}
    cfg_path = tmp_path / "slow.json"
    cfg_path.write_text(json.dumps(doc))
    assert run_cli("run", "--config", str(cfg_path)) == 1


# ---------------------------------------------------------------------------
# batch


def test_batch_rows_layout_and_stats():
    results = []
    for mode in ("glide_directed", "user_directed"):
        for trial in (1, 2, 3):
            for user, t in ((0, 10.0), (1, 12.0), (2, 14.0)):
                results.append({"mode": mode, "trial": trial, "user": user,
                                "ok": True, "completed": True, "time": t,
                                "misalignments": user, "collisions": 0})
    rows = batch_rows(results)
    assert [(r["mode"], r["trial"]) for r in rows] == [
        ("glide_directed", 1), ("glide_directed", 2), ("glide_directed", 3),
        ("user_directed", 1), ("user_directed", 2), ("user_directed", 3)]
    r = rows[0]
    assert r["time_avg"] == pytest.approx(12.0)
    assert r["time_sd"] == pytest.approx(2.0)
    assert (r["time_min"], r["time_max"]) == (10.0, 14.0)
    for metric in ("time", "misalignments", "collisions"):
        for stat in ("avg", "sd", "min", "max"):
            assert f"{metric}_{stat}" in r


def test_batch_single_run_sd_zero():
    rows = batch_rows([{"mode": "m", "trial": 1, "user": 0, "ok": True,
                        "completed": True, "time": 9.0, "misalignments": 0,
                        "collisions": 0}])
    assert rows[0]["time_sd"] == 0.0


def test_batch_failed_cell_marked_incomplete():
    rows = batch_rows([
        {"mode": "m", "trial": 1, "user": 0, "ok": True, "completed": True,
         "time": 9.0, "misalignments": 0, "collisions": 0},
        {"mode": "m", "trial": 1, "user": 1, "ok": False, "completed": False,
         "time": math.nan, "misalignments": 0, "collisions": 0}])
    assert rows[0]["incomplete"] == 1
    assert rows[0]["time_avg"] == pytest.approx(9.0)  # failed cell excluded


def test_batch_command_end_to_end(tmp_path, capsys):
    spec = {"users": 2, "trials": 2, "seed_base": 5,
            "configs": [{"label": "glide", "config": "glide_straight"}]}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out_dir = tmp_path / "out"
    assert run_cli("batch", str(spec_path), "--out", str(out_dir)) == 0

    with open(out_dir / "summary.csv") as f:
        rows = list(csv.DictReader(f))
    assert [(r["mode"], r["trial"]) for r in rows] == [("glide", "1"),
                                                       ("glide", "2")]
    # Aggregates match an independent recount from the raw logs.
    times = {}
    for user in range(2):
        for trial in (1, 2):
            log = EventLog.read(out_dir / "logs" / f"glide_u{user}_t{trial}.ndjson")
            times.setdefault(trial, []).append(metrics(log).time)
            assert log.header["seed"] == 5 + user * 2 + (trial - 1)
    for row in rows:
        got = times[int(row["trial"])]
        assert float(row["time_avg"]) == pytest.approx(
            sum(got) / len(got), abs=1e-3)

    summary = json.loads((out_dir / "summary.json").read_text())
    assert len(summary["rows"]) == 2


def test_batch_bad_spec_is_usage_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{}")
    assert run_cli("batch", str(p), "--out", str(tmp_path / "o")) == 2


# ---------------------------------------------------------------------------
# validate-map


def test_validate_bundled_maps_clean(capsys):
    for name in ("straight", "corridor_loop", "three_dest", "junctions"):
        path = bundled_asset_path("maps", name)
        assert run_cli("validate-map", path) == 0
        assert "OK" in capsys.readouterr().out


def test_validate_broken_map_reports_violation(tmp_path, capsys):
    path = bundled_asset_path("maps", "straight")
    doc = json.loads(open(path).read())
    doc["nodes"][0]["exits"]["90"] = "e_missing"
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(doc))
    assert run_cli("validate-map", str(p)) == 1


# ---------------------------------------------------------------------------
# report


def test_report_writes_figures_and_csv(tmp_path):
    log_path = tmp_path / "t.ndjson"
    run_cli("run", "--config", "glide_straight", "--out", str(log_path))
    out = tmp_path / "rep"
    assert run_cli("report", "--log", str(log_path), "--out", str(out)) == 0
    for name in ("trajectory.png", "timeseries.png", "trial.csv",
                 "metrics.json"):
        assert (out / name).stat().st_size > 0
    with open(out / "trial.csv") as f:
        rows = list(csv.DictReader(f))
    log = EventLog.read(log_path)
    assert len(rows) == len(log.records)
    assert float(rows[-1]["x"]) == pytest.approx(log.records[-1]["truth"][0])


def test_report_batch_figure(tmp_path):
    spec = {"users": 1, "trials": 1,
            "configs": [{"label": "g", "config": "glide_straight"}]}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out_dir = tmp_path / "b"
    run_cli("batch", str(spec_path), "--out", str(out_dir), "--no-logs")
    rep = tmp_path / "rep"
    assert run_cli("report", "--batch", str(out_dir), "--out", str(rep)) == 0
    assert (rep / "batch.png").stat().st_size > 0


def test_report_without_inputs_is_usage_error(tmp_path, capsys):
    assert run_cli("report", "--out", str(tmp_path)) == 2
