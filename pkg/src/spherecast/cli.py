"""Command-line interface: one executable, one subcommand per pipeline stage.

Parameters come from a JSON config file (--config) with individual flags
overriding it; unknown config keys are rejected.  The effective parameter
set is echoed to a .manifest.json next to the primary output so a run can
be reproduced exactly.  Exit codes: 0 success, 1 usage error, 2 data
error, 3 numeric/validation error.  Identical config and seed produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from datetime import timedelta
from pathlib import Path

import numpy as np

from . import container as cio
from .container import ContainerError, read_container, write_container
from .filters import DiffusionSpec, PoleFilterSpec, diffuse_values, pole_filter_values
from .grid import FieldSeries, make_equiangular_grid, make_gaussian_grid
from .padding import PadSpec, pad
from .preprocess import (Climatology, NormStats, compute_climatology,
                         compute_residual_coeff, compute_stats, denormalize,
                         normalize)
from .rollout import PipelineStep, RolloutPlan, run_rollout_to_dir
from .sht import (kinetic_energy_spectrum, potential_temperature_energy_spectrum,
                  zonal_power_spectrum)
from .solar import SolarConfig, accumulated_irradiance, read_gsc_csv
from .verify import (acc, load_forecast_set, rmse, score_records,
                     average_correlations, correlation_difference,
                     spatial_correlation, write_correlation_csv)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_grid(spec: str):
    kind, _, dims = spec.partition(":")
    try:
        n_lat, n_lon = (int(x) for x in dims.lower().split("x"))
    except ValueError:
        raise UsageError(
            f"grid must look like 'gaussian:64x128', got {spec!r}") from None
    if kind == "gaussian":
        return make_gaussian_grid(n_lat, n_lon)
    if kind == "equiangular":
        return make_equiangular_grid(n_lat, n_lon)
    raise UsageError(f"unknown grid kind {kind!r}")


def _parse_time_arg(s: str):
    return cio._parse_time(s if s.endswith("Z") else s + "Z")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _task_seed(master: int, tag: str) -> int:
    return int(np.random.SeedSequence(
        [master, zlib.crc32(tag.encode())]).generate_state(1)[0])


def _merge_config(args: argparse.Namespace, parser_defaults: dict) -> dict:
    """defaults < config file < explicit flags; unknown config keys rejected."""
    provided = {k: v for k, v in vars(args).items()
                if k not in ("func", "config", "subcommand") and v is not None}
    effective = dict(parser_defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            doc = json.loads(Path(config_path).read_text())
        except FileNotFoundError:
            raise ContainerError(f"{config_path}: config file not found")
        except json.JSONDecodeError as exc:
            raise ValueError(f"{config_path}: config is not valid JSON: {exc}")
        unknown = sorted(set(doc) - set(parser_defaults))
        if unknown:
            raise ValueError(
                f"{config_path}: unknown config keys {unknown}; "
                f"known keys: {sorted(parser_defaults)}")
        effective.update(doc)
    effective.update(provided)
    return effective


def _write_manifest(primary_output, subcommand: str, effective: dict) -> None:
    path = Path(str(primary_output) + ".manifest.json")
    doc = {"subcommand": subcommand,
           "config": {k: effective[k] for k in sorted(effective)}}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


# ---------------------------------------------------------------- handlers

def _cmd_stats(cfg):
    c = read_container(cfg["input"])
    series_map = c.to_dict()
    stats = compute_stats(series_map)
    if cfg["residual"]:
        stats = compute_residual_coeff(series_map, stats,
                                       denominator=cfg["denominator"])
    stats.to_json(cfg["output"])
    _write_manifest(cfg["output"], "stats", cfg)
    return EXIT_OK


def _apply_per_field(cfg, subcommand, transform):
    c = read_container(cfg["input"])
    stats = NormStats.from_json(cfg["stats"])
    out = {}
    for key, series in c.to_dict().items():
        fields = [transform(series.field(i), stats) for i in range(len(series))]
        out[key] = FieldSeries.from_fields(fields)
    dtype = cfg["dtype"] or c.dtype_name
    write_container(out, cfg["output"], dtype=dtype, attrs=c.attrs)
    _write_manifest(cfg["output"], subcommand, cfg)
    return EXIT_OK


def _cmd_normalize(cfg):
    return _apply_per_field(cfg, "normalize", normalize)


def _cmd_denormalize(cfg):
    return _apply_per_field(cfg, "denormalize", denormalize)


def _cmd_climatology(cfg):
    c = read_container(cfg["input"])
    clim = compute_climatology(c.to_dict(), window_days=cfg["window_days"],
                               gaussian_std_days=cfg["std_days"])
    clim.to_container(cfg["output"], dtype=cfg["dtype"] or "f64")
    _write_manifest(cfg["output"], "climatology", cfg)
    return EXIT_OK


def _cmd_solar(cfg):
    grid = _parse_grid(cfg["grid"])
    table = read_gsc_csv(cfg["gsc_csv"]) if cfg["gsc_csv"] else None
    config = SolarConfig(gsc_table=table)
    start = _parse_time_arg(cfg["start"])
    fields = []
    for k in range(cfg["windows"]):
        fields.append(accumulated_irradiance(
            start + timedelta(hours=k * cfg["window_hours"]),
            cfg["window_hours"], grid, config))
    series = FieldSeries.from_fields(fields)
    write_container({series.key: series}, cfg["output"],
                    dtype=cfg["dtype"] or "f32",
                    attrs={"window_hours": cfg["window_hours"]})
    _write_manifest(cfg["output"], "solar", cfg)
    return EXIT_OK


def _cmd_pad(cfg):
    c = read_container(cfg["input"])
    spec = PadSpec(pad_ns=cfg["pad_ns"], pad_ew=cfg["pad_ew"], mode=cfg["mode"])
    pseudo = make_equiangular_grid(c.grid.n_lat + 2 * spec.pad_ns,
                                   c.grid.n_lon + 2 * spec.pad_ew)
    out = {}
    for key, series in c.to_dict().items():
        padded = np.stack([pad(series.values[i], spec)
                           for i in range(len(series))])
        out[key] = FieldSeries(pseudo, key[0], key[1], series.times, padded,
                               units=series.units)
    attrs = dict(c.attrs)
    attrs["padding"] = {"pad_ns": spec.pad_ns, "pad_ew": spec.pad_ew,
                        "mode": spec.mode,
                        "interior_grid": {"kind": c.grid.kind,
                                          "n_lat": c.grid.n_lat,
                                          "n_lon": c.grid.n_lon}}
    write_container(out, cfg["output"], dtype=cfg["dtype"] or c.dtype_name,
                    attrs=attrs)
    _write_manifest(cfg["output"], "pad", cfg)
    return EXIT_OK


def _cmd_filter(cfg):
    if not cfg["diffuse"] and not cfg["pole_filter"]:
        raise UsageError("filter needs --diffuse and/or --pole-filter")
    c = read_container(cfg["input"])
    diffuse_spec = None
    if cfg["diffuse"]:
        nu_dt, steps = cfg["diffuse"].split(",")
        diffuse_spec = DiffusionSpec(nu_dt=float(nu_dt), steps=int(steps))
    pole_spec = None
    if cfg["pole_filter"]:
        parts = [float(x) for x in str(cfg["pole_filter"]).split(",")]
        pole_spec = PoleFilterSpec(start_lat=parts[0],
                                   reference_lat=parts[1] if len(parts) > 1 else None)
    out = {}
    for key, series in c.to_dict().items():
        vals = series.values.copy()
        for i in range(len(series)):
            if diffuse_spec:
                vals[i] = diffuse_values(vals[i], c.grid, diffuse_spec)
            if pole_spec:
                vals[i] = pole_filter_values(vals[i], c.grid, pole_spec)
        out[key] = FieldSeries(c.grid, key[0], key[1], series.times, vals,
                               units=series.units)
    write_container(out, cfg["output"], dtype=cfg["dtype"] or c.dtype_name,
                    attrs=c.attrs)
    _write_manifest(cfg["output"], "filter", cfg)
    return EXIT_OK


def _spectrum_rows(cfg, c):
    l_max = cfg["l_max"] or min(c.grid.n_lat - 1, (c.grid.n_lon - 1) // 2)
    init = c.attrs.get("init_time")
    t0 = cio._parse_time(init) if init else c.times[0]
    rows = []
    if cfg["kind"] == "kinetic":
        for i, t in enumerate(c.times):
            u = c.field(i, cfg["u_var"], cfg["level"])
            v = c.field(i, cfg["v_var"], cfg["level"])
            spec = kinetic_energy_spectrum(u, v, l_max, half=not cfg["no_half"])
            lead = int((t - t0).total_seconds() // 3600)
            rows += [("KE", lead, m, p) for m, p in enumerate(spec.power)]
        return rows
    if cfg["kind"] == "theta":
        for i, t in enumerate(c.times):
            tf = c.field(i, cfg["t_var"], cfg["level"])
            spec = potential_temperature_energy_spectrum(
                tf, l_max, pressure_hpa=cfg["pressure"])
            lead = int((t - t0).total_seconds() // 3600)
            rows += [("theta", lead, m, p) for m, p in enumerate(spec.power)]
        return rows
    for name, level, _units in c.variables:
        tag = name if level == "single" else f"{name}|{level}"
        for i, t in enumerate(c.times):
            spec = zonal_power_spectrum(c.values(i, name, level), l_max,
                                        c.grid)
            lead = int((t - t0).total_seconds() // 3600)
            rows += [(tag, lead, m, p) for m, p in enumerate(spec.power)]
    return rows


def _cmd_spectrum(cfg):
    c = read_container(cfg["input"])
    rows = _spectrum_rows(cfg, c)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    with open(cfg["output"], "w", newline="") as fh:
        fh.write("variable,lead_hours,m,power\n")
        for var, lead, m, p in rows:
            fh.write(f"{var},{lead},{m},{_fmt(p)}\n")
    _write_manifest(cfg["output"], "spectrum", cfg)
    return EXIT_OK


def _cmd_verify(cfg):
    fs = load_forecast_set(cfg["forecast_dir"], cfg["target"],
                           climatology_path=cfg["climatology"])
    metrics = [m.strip() for m in cfg["metrics"].split(",") if m.strip()]
    for m in metrics:
        if m not in ("rmse", "acc"):
            raise ValueError(f"unknown metric {m!r}: choose from rmse, acc")
    if "acc" in metrics and fs.climatology is None:
        raise ValueError("acc requires --climatology")
    leads = [h for h in fs.lead_hours() if h % 6 == 0]
    tasks = []
    for key in fs.keys:
        for lead in leads:
            for metric in metrics:
                tasks.append((key, lead, metric))

    def one(task):
        key, lead, metric = task
        tag = f"{key[0]}|{key[1]}|{lead}|{metric}"
        seed = _task_seed(cfg["seed"], tag)
        fn = rmse if metric == "rmse" else acc
        return fn(fs, key[0], level=key[1], lead_hours=lead,
                  n_boot=cfg["bootstrap"], seed=seed)

    threads = cfg["threads"]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            series = list(pool.map(one, tasks))
    else:
        series = [one(t) for t in tasks]
    records = score_records(series)
    cio.write_scores(records, cfg["output"], format=cfg["format"])
    _write_manifest(cfg["output"], "verify", cfg)
    return EXIT_OK


def _cmd_correlate(cfg):
    c = read_container(cfg["input"])
    mats = []
    for i in range(len(c.times)):
        fields = [c.field(i, name, level) for name, level, _ in c.variables]
        mats.append(spatial_correlation(fields, weighted=cfg["weighted"]))
    mean = average_correlations(mats)
    write_correlation_csv(mean, cfg["output"])
    if cfg["reference"]:
        ref_c = read_container(cfg["reference"])
        ref_mats = []
        for i in range(len(ref_c.times)):
            fields = [ref_c.field(i, name, level)
                      for name, level, _ in ref_c.variables]
            ref_mats.append(spatial_correlation(fields, weighted=cfg["weighted"]))
        ref = average_correlations(ref_mats)
        diff = correlation_difference(mean, ref)
        diff_path = cfg["difference_output"] or str(cfg["output"]) + ".diff.csv"
        write_correlation_csv(mean, diff_path, values=diff)
    _write_manifest(cfg["output"], "correlate", cfg)
    return EXIT_OK


def _cmd_rollout(cfg):
    c = read_container(cfg["initial_states"])
    states = c.to_dict()
    if cfg["init_times"]:
        inits = [_parse_time_arg(s.strip()) for s in cfg["init_times"].split(",")]
    else:
        start, count, stride = cfg["inits"].split(",")
        t0 = _parse_time_arg(start.strip())
        inits = [t0 + timedelta(hours=int(stride) * k)
                 for k in range(int(count))]
    postprocess = []
    for step in json.loads(cfg["postprocess"] or "[]"):
        postprocess.append(PipelineStep(
            kind=step["kind"], params=step.get("params", {}),
            variables=tuple(step["variables"]) if step.get("variables") else None))
    plan = RolloutPlan(
        init_times=inits, step_hours=cfg["step_hours"],
        max_lead_hours=cfg["max_lead_hours"], forecaster=cfg["forecaster"],
        external_command=(cfg["external_cmd"].split() if cfg["external_cmd"]
                          else None),
        postprocess=postprocess,
        state_dtype=cfg["dtype"] or c.dtype_name)
    clim = (Climatology.from_container(cfg["climatology"])
            if cfg["climatology"] else None)
    run_rollout_to_dir(plan, states, cfg["output_dir"], climatology=clim)
    _write_manifest(Path(cfg["output_dir"]) / "rollout", "rollout", cfg)
    return EXIT_OK


# ----------------------------------------------------------------- parser

def build_parser() -> _Parser:
    parser = _Parser(prog="spherecast",
                     description="Global gridded-field pipeline toolkit")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text, prog=f"spherecast {name}")
        p.set_defaults(func=handler)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: logical cores)")
        return p

    p = add("stats", _cmd_stats, "compute normalization statistics")
    p.add_argument("--input", help="input GVF1 container")
    p.add_argument("--output", help="output stats JSON")
    p.add_argument("--residual", action="store_true", default=None,
                   help="also compute residual coefficients (default)")
    p.add_argument("--no-residual", dest="residual", action="store_false",
                   help="skip residual coefficients")
    p.add_argument("--denominator", choices=["tendency", "standardized"],
                   default=None, help="residual rescaling denominator")

    for name, handler in (("normalize", _cmd_normalize),
                          ("denormalize", _cmd_denormalize)):
        p = add(name, handler, f"{name} a container with given stats")
        p.add_argument("--input")
        p.add_argument("--stats", help="stats JSON from the stats subcommand")
        p.add_argument("--output")
        p.add_argument("--dtype", choices=["f32", "f64"], default=None)

    p = add("climatology", _cmd_climatology,
            "compute day-of-year/hour-of-day climatology")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--window-days", type=int, default=None)
    p.add_argument("--std-days", type=float, default=None)
    p.add_argument("--dtype", choices=["f32", "f64"], default=None)

    p = add("solar", _cmd_solar, "generate accumulated solar forcing")
    p.add_argument("--grid", help="e.g. gaussian:64x128")
    p.add_argument("--start", help="first window start, ISO UTC")
    p.add_argument("--windows", type=int, default=None, help="window count")
    p.add_argument("--window-hours", type=int, choices=[1, 6], default=None)
    p.add_argument("--gsc-csv", default=None,
                   help="year,value CSV of annual solar constants")
    p.add_argument("--output")
    p.add_argument("--dtype", choices=["f32", "f64"], default=None)

    p = add("pad", _cmd_pad, "emit padded arrays for debugging")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--pad-ns", type=int, default=None)
    p.add_argument("--pad-ew", type=int, default=None)
    p.add_argument("--mode", choices=["rotate_reflect", "reflect_only"],
                   default=None)
    p.add_argument("--dtype", choices=["f32", "f64"], default=None)

    p = add("filter", _cmd_filter, "smooth fields (diffusion/pole filter)")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--diffuse", default=None, metavar="NU_DT,STEPS")
    p.add_argument("--pole-filter", default=None, metavar="START_LAT[,REF_LAT]")
    p.add_argument("--dtype", choices=["f32", "f64"], default=None)

    p = add("spectrum", _cmd_spectrum, "zonal-wavenumber energy spectra")
    p.add_argument("--input")
    p.add_argument("--output", help="CSV: variable,lead_hours,m,power")
    p.add_argument("--l-max", type=int, default=None)
    p.add_argument("--kind", choices=["power", "kinetic", "theta"], default=None)
    p.add_argument("--u-var", default=None)
    p.add_argument("--v-var", default=None)
    p.add_argument("--t-var", default=None)
    p.add_argument("--level", default=None)
    p.add_argument("--pressure", type=float, default=None, help="hPa for theta")
    p.add_argument("--no-half", action="store_true", default=None,
                   help="drop the 1/2 factor in kinetic energy")

    p = add("verify", _cmd_verify, "score forecasts against a target")
    p.add_argument("--forecast-dir", help="directory of per-init containers")
    p.add_argument("--target", help="verification target container")
    p.add_argument("--climatology", default=None, help="climatology container")
    p.add_argument("--metrics", default=None, help="comma list: rmse,acc")
    p.add_argument("--bootstrap", type=int, default=None,
                   help="bootstrap resamples (default 1000)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", help="score file")
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)

    p = add("correlate", _cmd_correlate, "cross-variable spatial correlation")
    p.add_argument("--input")
    p.add_argument("--reference", default=None,
                   help="optional reference container for a difference matrix")
    p.add_argument("--output")
    p.add_argument("--difference-output", default=None)
    p.add_argument("--weighted", action="store_true", default=None)

    p = add("rollout", _cmd_rollout, "run baseline or external forecasters")
    p.add_argument("--initial-states", help="container of initial conditions")
    p.add_argument("--output-dir")
    p.add_argument("--inits", default=None, metavar="START,COUNT,STRIDE_HOURS")
    p.add_argument("--init-times", default=None, help="comma list of ISO times")
    p.add_argument("--step-hours", type=int, choices=[1, 6], default=None)
    p.add_argument("--max-lead-hours", type=int, default=None)
    p.add_argument("--forecaster",
                   choices=["persistence", "climatology", "external"],
                   default=None)
    p.add_argument("--external-cmd", default=None,
                   help="command prefix for the external protocol")
    p.add_argument("--climatology", default=None)
    p.add_argument("--postprocess", default=None,
                   help='JSON list of {"kind", "params", "variables"} steps')
    p.add_argument("--dtype", choices=["f32", "f64"], default=None)

    return parser


_N_CORES = os.cpu_count() or 1

_DEFAULTS = {
    "stats": {"input": None, "output": None, "residual": True,
              "denominator": "tendency", "threads": _N_CORES},
    "normalize": {"input": None, "stats": None, "output": None, "dtype": None,
                  "threads": _N_CORES},
    "denormalize": {"input": None, "stats": None, "output": None, "dtype": None,
                    "threads": _N_CORES},
    "climatology": {"input": None, "output": None, "window_days": 61,
                    "std_days": 10.0, "dtype": None, "threads": _N_CORES},
    "solar": {"grid": None, "start": None, "windows": 1, "window_hours": 6,
              "gsc_csv": None, "output": None, "dtype": None, "threads": _N_CORES},
    "pad": {"input": None, "output": None, "pad_ns": 0, "pad_ew": 0,
            "mode": "rotate_reflect", "dtype": None, "threads": _N_CORES},
    "filter": {"input": None, "output": None, "diffuse": None,
               "pole_filter": None, "dtype": None, "threads": _N_CORES},
    "spectrum": {"input": None, "output": None, "l_max": None, "kind": "power",
                 "u_var": "U500", "v_var": "V500", "t_var": "T500",
                 "level": "single", "pressure": 500.0, "no_half": False,
                 "threads": _N_CORES},
    "verify": {"forecast_dir": None, "target": None, "climatology": None,
               "metrics": "rmse,acc", "bootstrap": 1000, "seed": 0,
               "output": None, "format": "csv", "threads": _N_CORES},
    "correlate": {"input": None, "reference": None, "output": None,
                  "difference_output": None, "weighted": False, "threads": _N_CORES},
    "rollout": {"initial_states": None, "output_dir": None, "inits": None,
                "init_times": None, "step_hours": 6, "max_lead_hours": 240,
                "forecaster": "persistence", "external_cmd": None,
                "climatology": None, "postprocess": None, "dtype": None,
                "threads": _N_CORES},
}

_REQUIRED = {
    "stats": ["input", "output"],
    "normalize": ["input", "stats", "output"],
    "denormalize": ["input", "stats", "output"],
    "climatology": ["input", "output"],
    "solar": ["grid", "start", "output"],
    "pad": ["input", "output"],
    "filter": ["input", "output"],
    "spectrum": ["input", "output"],
    "verify": ["forecast_dir", "target", "output"],
    "correlate": ["input", "output"],
    "rollout": ["initial_states", "output_dir"],
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "subcommand", None) is None:
            raise UsageError("a subcommand is required")
        sub = args.subcommand
        cfg = _merge_config(args, _DEFAULTS[sub])
        missing = [k for k in _REQUIRED[sub] if cfg.get(k) is None]
        if missing:
            raise UsageError(
                f"{sub}: missing required parameters "
                + ", ".join("--" + m.replace("_", "-") for m in missing))
        if sub == "rollout" and not (cfg["inits"] or cfg["init_times"]):
            raise UsageError("rollout: provide --inits or --init-times")
        return args.func(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (ContainerError, FileNotFoundError, KeyError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"data error: {msg}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
