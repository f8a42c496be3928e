import json
import math
from pathlib import Path

import numpy as np
import pytest

from cellplan import paper_budget_path
from cellplan.cli import main
from cellplan.drive_test import LeeParams, ScannerSample, write_scanner_csv
from cellplan.geo import GeoPoint, parse_ascii_grid
from cellplan.synthetic import rayleigh_amplitude, route_latlon

GOLDEN = Path(__file__).parent / "data" / "golden"


def _run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def _predict(capsys, out):
    return _run(capsys, "predict", "--dtm", GOLDEN / "dtm.asc", "--clutter", GOLDEN / "clutter.asc",
                "--site-config", GOLDEN / "site.json", "--out", out)


def _scanner_log(tmp_path, seed=0):
    # east-west pass through the golden area, every 2 cm at constant level
    dtm = parse_ascii_grid((GOLDEN / "dtm.asc").read_text())
    lat, lon, x, _ = route_latlon(dtm.origin, [(0.5, 15.0), (31.5, 15.0)], 0.02)
    rng = np.random.default_rng(seed)
    fade = 20 * np.log10(rayleigh_amplitude(lat.size, rng))
    samples = [ScannerSample(i * 10, GeoPoint(float(a), float(b)), 3, -85.0 + float(f), -11.0)
               for i, (a, b, f) in enumerate(zip(lat, lon, fade)) if -160 < -85 + f < -20]
    path = tmp_path / "scan.csv"
    path.write_text(write_scanner_csv(samples))
    return path


def test_budget_shipped_config(capsys, tmp_path):
    rc, out, _ = _run(capsys, "budget", "--config", paper_budget_path(), "--json", tmp_path / "b.json")
    assert rc == 0
    assert "-90.62 dBm" in out
    d = json.loads((tmp_path / "b.json").read_text())
    assert round(d["required_nrsrp_dbm"], 2) == -90.62


def test_budget_throughput_override(capsys):
    _, a, _ = _run(capsys, "budget", "--config", paper_budget_path())
    _, b, _ = _run(capsys, "budget", "--config", paper_budget_path(), "--throughput", "400")
    va = float(a.strip().splitlines()[-1].split(":")[1].split()[0])
    vb = float(b.strip().splitlines()[-1].split(":")[1].split()[0])
    assert vb > va


def test_budget_bad_inputs(capsys, tmp_path):
    rc, _, err = _run(capsys, "budget", "--config", tmp_path / "missing.json")
    assert rc == 1 and "cannot read" in err
    bad = tmp_path / "bad.json"
    bad.write_text('{"carrier": {"center_freq_mhz": 3500,}')
    rc, _, err = _run(capsys, "budget", "--config", bad)
    assert rc == 1 and "line 1" in err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["budget"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_lee_parameters_only(capsys):
    rc, out, _ = _run(capsys, "lee", "--freq", "3500")
    assert rc == 0
    assert "8.57 cm" in out and "342.86 cm" in out and "6.86 cm" in out
    assert "window samples = 50" in out


def test_predict_matches_golden(capsys, tmp_path):
    rc, _, _ = _predict(capsys, tmp_path)
    assert rc == 0
    for name in ("nrsrp.asc", "best_beam.asc", "bands.asc"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / "expected" / name).read_bytes(), name


def test_predict_reproducible_and_thread_independent(capsys, tmp_path):
    _predict(capsys, tmp_path / "a")
    rc, _, _ = _run(capsys, "predict", "--dtm", GOLDEN / "dtm.asc", "--clutter", GOLDEN / "clutter.asc",
                    "--site-config", GOLDEN / "site.json", "--out", tmp_path / "b", "--threads", "4",
                    "--ppm")
    assert rc == 0
    for name in ("nrsrp.asc", "best_beam.asc", "bands.asc"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ppm = (tmp_path / "b" / "nrsrp.ppm").read_bytes()
    assert ppm.startswith(b"P6\n16 16\n255\n") and len(ppm) == len(b"P6\n16 16\n255\n") + 16 * 16 * 3


def test_predict_project_file(capsys, tmp_path):
    proj = tmp_path / "project.json"
    proj.write_text(json.dumps({"dtm": str(GOLDEN / "dtm.asc"), "clutter": str(GOLDEN / "clutter.asc"),
                                "site_config": str(GOLDEN / "site.json"), "output_dir": "out"}))
    rc, _, _ = _run(capsys, "predict", "--project", proj)
    assert rc == 0
    assert (tmp_path / "out" / "nrsrp.asc").read_bytes() == (GOLDEN / "expected" / "nrsrp.asc").read_bytes()


def test_predict_input_errors(capsys, tmp_path):
    rc, _, err = _run(capsys, "predict", "--dtm", GOLDEN / "dtm.asc", "--site-config", GOLDEN / "site.json")
    assert rc == 1 and "--clutter" in err
    bad = tmp_path / "dtm.asc"
    bad.write_text("ncols 2\nnrows 2\nxllcorner 151\nyllcorner -33.8\ncellsize 2\n1 2\n3\n")
    rc, _, err = _run(capsys, "predict", "--dtm", bad, "--clutter", GOLDEN / "clutter.asc",
                      "--site-config", GOLDEN / "site.json", "--out", tmp_path)
    assert rc == 1 and "short by 1" in err
    rc, _, err = _run(capsys, "predict", "--dtm", GOLDEN / "dtm.asc", "--clutter", GOLDEN / "clutter.asc",
                      "--site-config", GOLDEN / "site.json", "--thresholds=-80,-90")
    assert rc == 1 and "increasing" in err


def test_ingest(capsys, tmp_path):
    log = tmp_path / "scan.csv"
    log.write_text("timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db\n"
                   "20,-33.8,151.0,1,-80,-11\n10,-33.8,151.0,1,-81,-11\n30,-33.8,151.0,12,-80,-11\n")
    rc, out, _ = _run(capsys, "ingest", "--log", log, "--out", tmp_path / "clean.csv")
    assert rc == 0
    d = json.loads(out)
    assert d["samples"] == 2 and d["beams"] == [1]
    assert any("out of time order" in s for s in d["diagnostics"])
    assert (tmp_path / "clean.csv").read_text().splitlines()[1].startswith("10,")
    empty = tmp_path / "empty.csv"
    empty.write_text("timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db\n")
    rc, _, err = _run(capsys, "ingest", "--log", empty)
    assert rc == 1 and "no samples" in err


def test_lee_compare_tune_pipeline(capsys, tmp_path):
    log = _scanner_log(tmp_path)
    rc, _, _ = _run(capsys, "lee", "--log", log, "--out", tmp_path / "lee")
    assert rc == 0
    summary = json.loads((tmp_path / "lee" / "lee_summary.json").read_text())
    assert summary["envelope_points"] == summary["resampled_points"] - LeeParams().window_samples + 1
    env_lines = (tmp_path / "lee" / "envelope.csv").read_text().splitlines()
    assert env_lines[0] == "distance_m,lat,lon,nrsrp_dbm"
    levels = np.array([float(line.split(",")[3]) for line in env_lines[1:]])
    assert abs(levels.mean() + 85.0) < 0.5

    _predict(capsys, tmp_path / "pred")
    rc, out, _ = _run(capsys, "compare", "--prediction", tmp_path / "pred" / "nrsrp.asc",
                      "--envelope", tmp_path / "lee" / "envelope.csv", "--out", tmp_path / "cmp")
    assert rc == 0
    rep = json.loads(out)
    assert rep == json.loads((tmp_path / "cmp" / "comparison.json").read_text())
    assert rep["n"] == len(levels)
    assert math.isfinite(rep["rmse_db"])
    delta = parse_ascii_grid((tmp_path / "cmp" / "delta.asc").read_text())
    assert delta.values.shape == (16, 16)

    rc, out, _ = _run(capsys, "tune", "--dtm", GOLDEN / "dtm.asc", "--clutter", GOLDEN / "clutter.asc",
                      "--site-config", GOLDEN / "site.json", "--envelope", tmp_path / "lee" / "envelope.csv",
                      "--out", tmp_path / "offsets.json")
    assert rc == 0
    t = json.loads(out)
    assert t == json.loads((tmp_path / "offsets.json").read_text())
    assert set(t["offsets_db"]) <= {"1", "2", "4"}
    assert t["post_rmse_db"] <= t["pre_rmse_db"]


def test_lee_route_too_short(capsys, tmp_path):
    log = tmp_path / "short.csv"
    log.write_text("timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db\n"
                   "0,-33.8,151.0,0,-80,-11\n1,-33.79999,151.0,0,-80,-11\n")
    rc, _, err = _run(capsys, "lee", "--log", log, "--out", tmp_path)
    assert rc == 1 and "averaging window" in err


def test_stats(capsys, tmp_path):
    ue = tmp_path / "ue.csv"
    rows = ["dl_mbps,ul_mbps,latency_ms,nrsrp_dbm"] + [f"{200 + i},{20 + i % 3},{10 + i},-91" for i in range(32)]
    ue.write_text("\n".join(rows) + "\n")
    rc, out, _ = _run(capsys, "stats", "--ue", ue, "--out", tmp_path / "s.json")
    assert rc == 0
    d = json.loads(out)
    assert d["n"] == 32 and d["clt_normality_assumable"] is True
    assert d["metrics"]["latency_ms"]["median"] == 25.5
    assert d == json.loads((tmp_path / "s.json").read_text())


def test_outputs_byte_reproducible(capsys, tmp_path):
    log = _scanner_log(tmp_path, seed=2)
    for d in ("r1", "r2"):
        assert _run(capsys, "lee", "--log", log, "--out", tmp_path / d)[0] == 0
    for name in ("envelope.csv", "residual.csv", "lee_summary.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
