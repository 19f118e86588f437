import csv
import json
import math
from pathlib import Path

import pytest

from reskit import cli
from reskit.events import read_events_json
from reskit.fitting import fit_event, mean_restore_curve
from reskit.metrics import compute_metrics

from conftest import make_event

DATA = Path(__file__).parent / "data" / "records_50.csv"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    assert run("report", "--input", DATA, "--out", out, "--seed", 3, "--gof-reps", 199) == 0
    return out


def test_report_files(report):
    names = {p.name for p in report.iterdir()}
    assert {"events.json", "metrics.json", "metrics.csv", "summary_by_interconnection.csv", "summary_median.csv",
            "summary_weather.csv", "gof.csv", "gof_summary.csv"} <= names


def test_summary_one_row_per_interconnection(report):
    table = rows(report / "summary_by_interconnection.csv")
    assert [r["interconnection"] for r in table] == ["ERCOT", "Eastern", "Western"]
    assert [r["events"] for r in table] == ["1", "2", "1"]


def test_weather_table(report):
    table = {r["category"]: r for r in rows(report / "summary_weather.csv")}
    assert set(table) == {"lightning", "fire", "weather", "all weather", "non-weather"}
    assert table["fire"]["events"] == "1" and table["all weather"]["events"] == "3"


def test_summary_values_match_library(report):
    events = read_events_json(report / "events.json")
    by_id = {r["event_id"]: r for r in rows(report / "metrics.csv")}
    for e in events:
        m = compute_metrics(e).scalars()
        for name in ("D_O", "D_GM", "D_95", "D_ln_95", "tau"):
            assert float(by_id[e.event_id][name]) == pytest.approx(m[name], abs=5e-5)
        assert float(by_id[e.event_id]["lambda_O"]) == pytest.approx(m["lambda_O"], abs=5e-4)
    med = rows(report / "summary_median.csv")[0]
    d_gm = sorted(compute_metrics(e).D_GM for e in events)
    assert float(med["D_GM"]) == pytest.approx((d_gm[1] + d_gm[2]) / 2, abs=5e-5)


def test_number_formats(report):
    row = rows(report / "metrics.csv")[0]
    assert len(row["D_O"].split(".")[1]) == 4 and len(row["lambda_O"].split(".")[1]) == 3
    g = rows(report / "gof.csv")[0]
    assert len(g["p_value"].split(".")[1]) == 4
    assert list(g) == ["event_id", "model", "test", "statistic", "p_value", "method", "satisfied"]


def test_metrics_json_shape(report):
    first = json.loads((report / "metrics.json").read_text())[0]
    assert first["x_grid"] == ["50", "90", "95"] and len(first["D_ln"]) == 3
    assert set(first["fit"]) == {"event_id", "n", "z", "lambda_O", "mu", "sigma", "tau"}


def test_byte_identical_reruns(tmp_path):
    for d in ("a", "b"):
        assert run("report", "--input", DATA, "--out", tmp_path / d, "--seed", 9, "--gof-reps", 99) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RESKIT_SEED", "9")
    run("gof", "--input", DATA, "--out", tmp_path / "env", "--gof-reps", 99)
    monkeypatch.delenv("RESKIT_SEED")
    run("gof", "--input", DATA, "--out", tmp_path / "flag", "--seed", 9, "--gof-reps", 99)
    assert (tmp_path / "env" / "gof.csv").read_bytes() == (tmp_path / "flag" / "gof.csv").read_bytes()


def test_median_is_robust():
    assert cli._summary([1, 2, 100])[2] == 2


def test_extract_fit_metrics_commands(tmp_path):
    assert run("extract", "--input", DATA, "--out", tmp_path, "--min-n", 1, "--weather-only") == 0
    events = read_events_json(tmp_path / "events.json")
    assert len(events) == 3 and all(e.weather_related for e in events)
    assert run("fit", "--input", tmp_path / "events.json", "--out", tmp_path) == 0
    fits = json.loads((tmp_path / "fits.json").read_text())
    assert [f["event_id"] for f in fits] == sorted(e.event_id for e in events)
    assert run("metrics", "--input", DATA, "--out", tmp_path, "--x-grid", "50,97.5") == 0
    assert "D_ln_97.5" in rows(tmp_path / "metrics.csv")[0]


def test_variability_table(tmp_path):
    assert run("variability", "table", "--out", tmp_path) == 0
    table = rows(tmp_path / "variability_table.csv")
    assert [r["n"] for r in table] == ["10", "20", "50", "100", "200"]
    assert list(table[0])[:4] == ["n", "mu", "sigma", "D_GM"]
    assert float(table[2]["D_GM"]) == pytest.approx(1.3733, abs=1e-4)
    assert run("variability", "table", "--out", tmp_path, "--rows", "30,1.0,1.2", "--metrics", "D_GM,D_n") == 0
    assert list(rows(tmp_path / "variability_table.csv")[0]) == ["n", "mu", "sigma", "D_GM", "D_n"]


def test_simulate_outputs(tmp_path):
    assert run("simulate", "--n", 12, "--count", 3, "--r1-offset", 4, "--window", 0.5, "--format", "csv", "--out", tmp_path) == 0
    assert run("extract", "--input", tmp_path / "simulated_records.csv", "--out", tmp_path) == 0
    assert [e.n for e in read_events_json(tmp_path / "events.json")] == [12, 12, 12]
    assert run("simulate", "--n", 12, "--count", 2, "--out", tmp_path, "--seed", 1) == 0
    assert len(read_events_json(tmp_path / "simulated_events.json")) == 2


def test_plotdata(tmp_path):
    assert run("plotdata", "--input", DATA, "--out", tmp_path) == 0
    d = tmp_path / "Eastern-00001"
    n = 14
    finals = [rows(d / f)[-1]["value"] for f in ("outage.csv", "restore.csv", "performance.csv")]
    assert finals == [str(n), str(n), "0"]
    grid = rows(d / "mean_restore_lognormal.csv")
    assert len(grid) == cli.PLOT_GRID_POINTS


def test_plot_overlay_matches_library(tmp_path):
    ev = make_event([0, 0.2, 0.5, 1.0, 1.5], [2, 2.5, 3, 6, 12], event_id="P-00001")
    fit = fit_event(ev)
    cli.write_plotdata(tmp_path, ev, fit)
    for r in rows(tmp_path / "P-00001" / "mean_restore_lognormal.csv"):
        t = float(r["time_hours"])
        expected = 0.0 if t < 2 else mean_restore_curve(fit, ev, t)
        assert float(r["value"]) == pytest.approx(expected, abs=2e-4)
    assert mean_restore_curve(fit, ev, 2 + math.exp(fit.mu)) == pytest.approx(1 + 4 / 2)


def test_plot_grid_cap():
    ev = make_event([0, 0.2, 0.5, 1.0], [1.1, 1.2, 1.3, 1.4])
    fit = fit_event(ev)
    assert cli.plot_grid_end(ev, fit) == pytest.approx(1.4)
    wide = make_event([0, 0.2, 0.5, 1.0], [1, 1.1, 50, 400])
    wfit = fit_event(wide)
    assert cli.plot_grid_end(wide, wfit) == pytest.approx(min(1 + 4 * math.exp(wfit.mu + wfit.sigma ** 2), 400))


def test_undefined_fit_emits_step_data_only(tmp_path):
    ev = make_event([0, 0, 0], [1, 1, 1], event_id="U-00001")
    cli.write_plotdata(tmp_path, ev, fit_event(ev))
    assert {p.name for p in (tmp_path / "U-00001").iterdir()} == {"outage.csv", "restore.csv", "performance.csv"}


def test_fatal_errors_exit_nonzero(tmp_path, capsys):
    assert run("report", "--input", tmp_path / "missing.csv", "--out", tmp_path) == 1
    assert "error:" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run("extract", "--input", bad, "--out", tmp_path) == 1


def test_weather_bucket_dominance():
    mapping = cli.load_weather_map(None)
    ev = make_event([0, 1], [2, 3], causes=(("Fire", 1), ("Hurricane Laura", 3)))
    assert cli.weather_bucket(ev, mapping) == "hurricane"
    assert cli.weather_bucket(make_event([0], [1], causes=(("Human Error", 1),)), mapping) is None


def test_custom_weather_map(tmp_path):
    m = tmp_path / "map.json"
    m.write_text(json.dumps({"storm": "lightning|weather"}))
    out = tmp_path / "r"
    assert run("report", "--input", DATA, "--out", out, "--weather-map", m, "--skip-gof") == 0
    cats = [r["category"] for r in rows(out / "summary_weather.csv")]
    assert cats == ["storm", "all weather", "non-weather"]
