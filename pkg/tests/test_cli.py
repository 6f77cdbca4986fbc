import csv
import json
from datetime import datetime

import pytest

from farecast.cli import discover_stations, load_run_config, main
from farecast.errors import ConfigError
from farecast.ingest import TripRecord


def _run_raw(**overrides):
    raw = {
        "calendar": {"start": "2017-07-24", "end": "2017-08-11"},
        "splits": {
            "estimate": ["2017-07-24", "2017-07-28"],
            "train": ["2017-07-31", "2017-08-08"],
            "test": ["2017-08-09", "2017-08-11"],
        },
        "order": [1, 0, 1],
        "models": ["M0", "M1", "M2"],
    }
    raw.update(overrides)
    return raw


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


# ------------------------------------------------------------- configuration


def test_load_run_config_defaults(tmp_path):
    cfg = load_run_config(_write(tmp_path, "run.json", _run_raw(order=[2, 0, 1, 1, 1, 0])))
    assert cfg.estimate_span == (0, 180)
    assert cfg.train_span == (180, 432)
    assert cfg.test_span == (432, 540)
    assert cfg.stations is None  # discover from the data
    assert (cfg.order.p, cfg.order.D, cfg.order.m) == (2, 1, 36)
    assert (cfg.event_order.p, cfg.event_order.m) == (2, 1)
    assert cfg.models == ("M0", "M1", "M2")
    assert not cfg.events_enabled


def test_load_run_config_nonseasonal_order_keeps_period_one(tmp_path):
    cfg = load_run_config(_write(tmp_path, "run.json", _run_raw(order=[2, 0, 1, 0, 0, 0])))
    assert cfg.order.m == 1


def test_load_run_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    with pytest.raises(ConfigError):
        load_run_config(bad)
    overlapping = _run_raw()
    overlapping["splits"]["train"] = ["2017-07-27", "2017-08-08"]
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, "a.json", overlapping))
    gap = _run_raw()
    gap["splits"]["test"] = ["2017-08-10", "2017-08-11"]
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, "b.json", gap))
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, "c.json", _run_raw(models=["M0", "M9"])))
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, "d.json", _run_raw(order=[1, 0, 1, 1])))
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, "e.json", _run_raw(workers=0)))
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, "f.json", _run_raw(cv_horizons=[1, 0])))


def test_discover_stations_needs_both_sides():
    t0 = datetime(2017, 7, 24, 8, 0)

    def trip(card, board, alight):
        return TripRecord(card, board, t0, alight, datetime(2017, 7, 24, 8, 20))

    records = [trip("a", "A", "B"), trip("b", "B", "A"), trip("c", "C", "A")]
    assert discover_stations(records) == ["A", "B"]


# ----------------------------------------------------------------- execution


SCENARIO = {
    "calendar": {"start": "2017-07-24", "end": "2017-08-11"},
    "seed": 99,
    "stations": [
        {"id": "C1", "archetype": "commercial", "alight_scale": 25.0, "g2_scale": 10.0},
        {"id": "R1", "archetype": "residential", "alight_scale": 25.0, "g2_scale": 10.0},
    ],
}


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    """Simulate a small two-station scenario and run the full pipeline once."""
    root = tmp_path_factory.mktemp("cli")
    scenario = root / "scenario.json"
    scenario.write_text(json.dumps(SCENARIO))
    run_cfg = root / "run.json"
    run_cfg.write_text(json.dumps(_run_raw()))
    trips = root / "trips.csv"
    outdir = root / "out"
    assert main(["simulate", "--config", str(scenario), "--out", str(trips)]) == 0
    rc = main(
        ["pipeline", "--config", str(run_cfg), "--trips", str(trips), "--out", str(outdir)]
    )
    assert rc == 0
    return {"root": root, "trips": trips, "run": run_cfg, "out": outdir}


def test_pipeline_writes_all_reports(pipeline_run):
    out = pipeline_run["out"]
    for name in (
        "flows.csv",
        "rejects.csv",
        "overlaps.csv",
        "rpp.csv",
        "evaluation.csv",
        "predictions.csv",
        "fits.json",
        "clusters.csv",
        "dendrogram.csv",
    ):
        assert (out / name).exists(), name


def test_pipeline_evaluation_rows(pipeline_run):
    with open(pipeline_run["out"] / "evaluation.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:5] == ["station", "variant", "model", "horizon", "n_test"]
    seasonal = [r for r in rows[1:] if r[1] == "seasonal"]
    assert {(r[0], r[2]) for r in seasonal} == {
        (s, m) for s in ("C1", "R1") for m in ("M0", "M1", "M2")
    }
    # every model scored the same 108 test windows
    assert {r[4] for r in seasonal} == {"108"}
    # comparisons against M0 carry a p-value; M0 itself does not
    for r in seasonal:
        assert (r[10] != "") == (r[2] != "M0")


def test_pipeline_fits_json(pipeline_run):
    doc = json.loads((pipeline_run["out"] / "fits.json").read_text())
    assert set(doc) == {"C1", "R1"}
    for station, entry in doc.items():
        assert set(entry) == {"M0", "M1", "M2"}
        assert entry["M0"]["beta"] is None
        assert entry["M2"]["beta"] is not None
        assert entry["M0"]["order"] == [1, 0, 1, 0, 0, 0, 1]


def test_pipeline_cluster_labels(pipeline_run):
    with open(pipeline_run["out"] / "clusters.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["station", "cluster"]
    assert [r[0] for r in rows[1:]] == ["C1", "R1"]


def test_station_filter_limits_outputs(pipeline_run):
    outdir = pipeline_run["root"] / "only_c1"
    rc = main(
        [
            "evaluate",
            "--config",
            str(pipeline_run["run"]),
            "--trips",
            str(pipeline_run["trips"]),
            "--out",
            str(outdir),
            "--stations",
            "C1",
        ]
    )
    assert rc == 0
    with open(outdir / "evaluation.csv", newline="") as fh:
        stations = {r[0] for r in list(csv.reader(fh))[1:]}
    assert stations == {"C1"}


def test_cluster_needs_two_stations(pipeline_run, capsys):
    rc = main(
        [
            "cluster",
            "--config",
            str(pipeline_run["run"]),
            "--trips",
            str(pipeline_run["trips"]),
            "--out",
            str(pipeline_run["root"] / "clu"),
            "--stations",
            "C1",
        ]
    )
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_main_exit_codes(tmp_path, capsys):
    # configuration problems exit 1
    bad = _run_raw()
    bad["splits"]["train"] = ["2017-07-26", "2017-08-08"]
    bad_cfg = _write(tmp_path, "bad.json", bad)
    rc = main(
        ["flows", "--config", str(bad_cfg), "--trips", "x.csv", "--out", str(tmp_path / "o")]
    )
    assert rc == 1
    # unreadable trip data exits 2
    good_cfg = _write(tmp_path, "good.json", _run_raw())
    rc = main(
        [
            "flows",
            "--config",
            str(good_cfg),
            "--trips",
            str(tmp_path / "nope.csv"),
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert rc == 2
    assert "error:" in capsys.readouterr().err
