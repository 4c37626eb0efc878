import csv
import json
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pytest

from spherecast.cli import main
from spherecast.container import read_container, read_scores, write_container
from spherecast.grid import FieldSeries
from spherecast.preprocess import Climatology
from conftest import make_series, make_spectrum_fixture

T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)
DATA = Path(__file__).parent / "data"

SUBCOMMANDS = ["stats", "normalize", "denormalize", "climatology", "solar",
               "pad", "filter", "spectrum", "verify", "correlate", "rollout"]


def write_target(tmp_path, grid, n_time=8, seed=0, variable="T"):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(n_time,) + grid.shape).astype(np.float32)
    series = FieldSeries(grid, variable, "single",
                         [T0 + timedelta(hours=6 * k) for k in range(n_time)],
                         vals.astype(np.float64))
    path = tmp_path / "target.gvf"
    write_container({series.key: series}, path, dtype="f32")
    return path, series


def write_zero_climatology(tmp_path, grid, keys):
    clim = Climatology(grid=grid, hours=[0, 6, 12, 18], window_days=61,
                       std_days=10.0,
                       data={k: np.zeros((365, 4) + grid.shape) for k in keys})
    path = tmp_path / "clim.gvf"
    clim.to_container(path)
    return path


def test_help_exits_zero(capsys):
    for name in SUBCOMMANDS:
        with pytest.raises(SystemExit) as exc:
            main([name, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--config" in out


def test_unknown_subcommand_exit_one(capsys):
    assert main(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err.lower()


def test_missing_required_flag_exit_one(capsys):
    assert main(["stats"]) == 1
    assert "--input" in capsys.readouterr().err


def test_missing_input_file_exit_two(tmp_path, capsys):
    assert main(["stats", "--input", str(tmp_path / "nope.gvf"),
                 "--output", str(tmp_path / "s.json")]) == 2


def test_unknown_config_key_exit_three(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"inputt": "x.gvf"}))
    assert main(["stats", "--config", str(cfg),
                 "--output", str(tmp_path / "s.json")]) == 3
    assert "inputt" in capsys.readouterr().err


def test_stats_normalize_denormalize_round_trip(tmp_path, grid16):
    src = {("T", "single"): make_series(grid16, n_time=6, seed=1),
           ("Q", "single"): make_series(grid16, "Q", n_time=6, seed=2)}
    inp = tmp_path / "in.gvf"
    write_container(src, inp, dtype="f64")
    stats_path = tmp_path / "stats.json"
    assert main(["stats", "--input", str(inp), "--output", str(stats_path)]) == 0
    doc = json.loads(stats_path.read_text())
    assert set(doc["entries"]) == {"T|single", "Q|single"}
    prod = np.prod([e["xi"] for e in doc["entries"].values()])
    assert abs(prod - 1.0) < 1e-10

    norm = tmp_path / "norm.gvf"
    assert main(["normalize", "--input", str(inp), "--stats", str(stats_path),
                 "--output", str(norm)]) == 0
    back = tmp_path / "back.gvf"
    assert main(["denormalize", "--input", str(norm), "--stats", str(stats_path),
                 "--output", str(back)]) == 0
    a = read_container(inp).to_dict()
    b = read_container(back).to_dict()
    for key in src:
        np.testing.assert_allclose(b[key].values, a[key].values, rtol=1e-12)
    # manifest echoes the effective config
    manifest = json.loads((tmp_path / "norm.gvf.manifest.json").read_text())
    assert manifest["subcommand"] == "normalize"
    assert manifest["config"]["input"] == str(inp)


def test_solar_cli(tmp_path):
    out = tmp_path / "solar.gvf"
    assert main(["solar", "--grid", "gaussian:8x16", "--start",
                 "2020-03-20T00:00:00Z", "--windows", "2",
                 "--window-hours", "6", "--output", str(out)]) == 0
    c = read_container(out)
    assert c.keys == [("Is", "single")]
    assert len(c.times) == 2
    assert c.times[0] == datetime(2020, 3, 20, 6, tzinfo=timezone.utc)
    vals = c.values(0, "Is")
    assert np.all(vals >= 0.0)
    assert vals.max() > 1e6


def test_pad_cli(tmp_path, grid16):
    src = {("T", "single"): make_series(grid16, n_time=2, seed=3)}
    inp = tmp_path / "in.gvf"
    write_container(src, inp, dtype="f64")
    out = tmp_path / "padded.gvf"
    assert main(["pad", "--input", str(inp), "--output", str(out),
                 "--pad-ns", "2", "--pad-ew", "3"]) == 0
    c = read_container(out)
    assert c.grid.shape == (16 + 4, 32 + 6)
    assert c.attrs["padding"]["pad_ns"] == 2
    from spherecast.padding import PadSpec, pad
    expect = pad(src[("T", "single")].values[0], PadSpec(2, 3))
    np.testing.assert_array_equal(c.values(0, "T"), expect)


def test_filter_cli(tmp_path, grid16):
    src = {("T", "single"): make_series(grid16, n_time=1, seed=4)}
    inp = tmp_path / "in.gvf"
    write_container(src, inp, dtype="f64")
    out = tmp_path / "filtered.gvf"
    assert main(["filter", "--input", str(inp), "--output", str(out),
                 "--diffuse", "1e-5,2", "--pole-filter", "60"]) == 0
    c = read_container(out)
    assert not np.array_equal(c.values(0, "T"), src[("T", "single")].values[0])
    # stability violation surfaces as exit 3
    assert main(["filter", "--input", str(inp), "--output", str(out),
                 "--diffuse", "0.5,1"]) == 3


def test_climatology_cli(tmp_path, grid16):
    times = [datetime(2019, 1, 1, tzinfo=timezone.utc) + timedelta(hours=6 * k)
             for k in range(4 * 730)]
    vals = np.full((len(times),) + grid16.shape, 2.5)
    series = FieldSeries(grid16, "T", "single", times, vals)
    inp = tmp_path / "in.gvf"
    write_container({series.key: series}, inp, dtype="f64")
    out = tmp_path / "clim.gvf"
    assert main(["climatology", "--input", str(inp), "--output", str(out)]) == 0
    clim = Climatology.from_container(out)
    np.testing.assert_allclose(clim.data[("T", "single")], 2.5, rtol=1e-12)


def test_spectrum_cli_matches_committed_golden(tmp_path):
    inp = tmp_path / "fixture.gvf"
    make_spectrum_fixture(inp)
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--input", str(inp), "--output", str(out),
                 "--l-max", "10"]) == 0

    def load(path):
        with open(path, newline="") as fh:
            return {(r["variable"], int(r["lead_hours"]), int(r["m"])):
                    float(r["power"]) for r in csv.DictReader(fh)}

    got = load(out)
    golden = load(DATA / "spectrum_golden.csv")
    assert set(got) == set(golden)
    for key, val in golden.items():
        assert abs(got[key] - val) <= 1e-9 * max(1.0, abs(val)), key


def test_correlate_cli(tmp_path, grid16):
    src = {("T", "L1"): make_series(grid16, "T", "L1", n_time=3, seed=5),
           ("U", "L1"): make_series(grid16, "U", "L1", n_time=3, seed=6)}
    inp = tmp_path / "in.gvf"
    write_container(src, inp, dtype="f64")
    out = tmp_path / "corr.csv"
    assert main(["correlate", "--input", str(inp), "--output", str(out)]) == 0
    from spherecast.verify import read_correlation_csv
    m = read_correlation_csv(out)
    assert m.labels == [("T", "L1"), ("U", "L1")]
    assert m.values[0, 0] == 1.0

    ref = tmp_path / "ref.gvf"
    write_container(src, ref, dtype="f64")
    out2 = tmp_path / "corr2.csv"
    diff = tmp_path / "diff.csv"
    assert main(["correlate", "--input", str(inp), "--reference", str(ref),
                 "--output", str(out2), "--difference-output", str(diff)]) == 0
    d = read_correlation_csv(diff)
    np.testing.assert_allclose(d.values, 0.0, atol=1e-12)


def test_rollout_and_verify_pipeline(tmp_path, grid16):
    target_path, series = write_target(tmp_path, grid16, n_time=8, seed=7)
    clim_path = write_zero_climatology(tmp_path, grid16, [("T", "single")])
    fc_dir = tmp_path / "fc"
    assert main(["rollout", "--initial-states", str(target_path),
                 "--output-dir", str(fc_dir),
                 "--inits", "2020-01-01T00:00:00,3,6",
                 "--step-hours", "6", "--max-lead-hours", "12"]) == 0
    assert len(list(fc_dir.glob("*.gvf"))) == 3

    scores = tmp_path / "scores.csv"
    assert main(["verify", "--forecast-dir", str(fc_dir),
                 "--target", str(target_path),
                 "--climatology", str(clim_path),
                 "--output", str(scores), "--bootstrap", "50",
                 "--seed", "0"]) == 0
    records = read_scores(scores)
    lead0 = {r.metric: r for r in records if r.lead_hours == 0}
    assert lead0["rmse"].value == 0.0
    assert lead0["rmse"].ci_low == 0.0 and lead0["rmse"].ci_high == 0.0
    assert abs(lead0["acc"].value - 1.0) < 1e-12
    assert lead0["rmse"].n_inits == 3
    # all leads are 6-hour multiples
    assert {r.lead_hours for r in records} == {0, 6, 12}


def test_verify_deterministic_byte_identical(tmp_path, grid16):
    target_path, _ = write_target(tmp_path, grid16, n_time=8, seed=8)
    clim_path = write_zero_climatology(tmp_path, grid16, [("T", "single")])
    fc_dir = tmp_path / "fc"
    main(["rollout", "--initial-states", str(target_path),
          "--output-dir", str(fc_dir), "--inits", "2020-01-01T00:00:00,2,6",
          "--step-hours", "6", "--max-lead-hours", "12"])
    s1, s2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    args = ["verify", "--forecast-dir", str(fc_dir), "--target",
            str(target_path), "--climatology", str(clim_path),
            "--bootstrap", "200", "--seed", "42"]
    assert main(args + ["--output", str(s1)]) == 0
    assert main(args + ["--output", str(s2)]) == 0
    assert s1.read_bytes() == s2.read_bytes()
    # a different seed must change the bootstrap intervals
    s3 = tmp_path / "s3.csv"
    assert main(args[:-2] + ["--seed", "7", "--output", str(s3)]) == 0
    assert s1.read_bytes() != s3.read_bytes()


def test_verify_threads_do_not_change_output(tmp_path, grid16):
    target_path, _ = write_target(tmp_path, grid16, n_time=8, seed=9)
    clim_path = write_zero_climatology(tmp_path, grid16, [("T", "single")])
    fc_dir = tmp_path / "fc"
    main(["rollout", "--initial-states", str(target_path),
          "--output-dir", str(fc_dir), "--inits", "2020-01-01T00:00:00,2,6",
          "--step-hours", "6", "--max-lead-hours", "12"])
    s1, s2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    base = ["verify", "--forecast-dir", str(fc_dir), "--target",
            str(target_path), "--climatology", str(clim_path),
            "--bootstrap", "100", "--seed", "5"]
    assert main(base + ["--output", str(s1)]) == 0
    assert main(base + ["--threads", "4", "--output", str(s2)]) == 0
    assert s1.read_bytes() == s2.read_bytes()


def test_config_file_with_flag_override(tmp_path, grid16):
    src = {("T", "single"): make_series(grid16, n_time=6, seed=10)}
    inp = tmp_path / "in.gvf"
    write_container(src, inp, dtype="f64")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(inp),
                               "output": str(tmp_path / "from_config.json"),
                               "residual": False}))
    override = tmp_path / "override.json"
    assert main(["stats", "--config", str(cfg), "--output", str(override)]) == 0
    assert override.exists()
    assert not (tmp_path / "from_config.json").exists()
    doc = json.loads(override.read_text())
    assert doc["entries"]["T|single"]["xi"] == 1.0


def test_external_rollout_cli(tmp_path, grid16):
    script = tmp_path / "identity.py"
    script.write_text(
        "import argparse, shutil\n"
        "p = argparse.ArgumentParser()\n"
        "p.add_argument('--in', dest='inp')\n"
        "p.add_argument('--out')\n"
        "p.add_argument('--step-hours')\n"
        "a = p.parse_args()\n"
        "shutil.copy(a.inp, a.out)\n")
    target_path, _ = write_target(tmp_path, grid16, n_time=4, seed=11)
    ext_dir = tmp_path / "ext"
    per_dir = tmp_path / "per"
    common = ["--initial-states", str(target_path),
              "--inits", "2020-01-01T00:00:00,1,6",
              "--step-hours", "6", "--max-lead-hours", "18"]
    assert main(["rollout", *common, "--output-dir", str(per_dir)]) == 0
    assert main(["rollout", *common, "--output-dir", str(ext_dir),
                 "--forecaster", "external",
                 "--external-cmd", f"{sys.executable} {script}"]) == 0
    a = sorted(per_dir.glob("*.gvf"))[0]
    b = sorted(ext_dir.glob("*.gvf"))[0]
    assert a.read_bytes() == b.read_bytes()
