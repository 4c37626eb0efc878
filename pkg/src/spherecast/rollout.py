"""Autoregressive forecast harness.

Built-in baselines: persistence repeats the initial state at every lead
(bit-identical, no numeric transform touches the values), and climatology
looks up the day-of-year/hour-of-day mean for each valid time.  External
forecasters are driven through a file protocol, one step per invocation:

    cmd --in <state.gvf> --out <next.gvf> --step-hours N

The command must exit 0 and write a GVF1 container on the input grid with
one time step; the harness validates the output header, applies the
configured post-processing pipeline, and feeds the state back in.  An
identity command therefore reproduces persistence bit-exactly (states are
written in the dtype they were read in).
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .container import read_container, write_container, _format_time
from .filters import (DiffusionSpec, PoleFilterSpec, diffuse_values,
                      pole_filter_values)
from .grid import FieldSeries, ensure_utc
from .preprocess import Climatology
from .verify import ForecastSet

__all__ = [
    "RolloutPlan",
    "PipelineStep",
    "run_rollout",
    "run_rollout_to_dir",
    "write_forecast_dir",
    "apply_postprocessing",
    "ExternalForecasterError",
]

FORECASTERS = ("persistence", "climatology", "external")


class ExternalForecasterError(RuntimeError):
    """External command failed or produced an unusable state file."""


@dataclass(frozen=True)
class PipelineStep:
    """One post-processing operator applied between autoregressive steps.

    kind is one of clamp_nonnegative / laplacian_diffuse / pole_filter;
    params feed the operator spec; variables optionally restricts which
    variables are touched.
    """

    kind: str
    params: dict = dc_field(default_factory=dict)
    variables: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("clamp_nonnegative", "laplacian_diffuse",
                             "pole_filter"):
            raise ValueError(f"unknown pipeline step {self.kind!r}")

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items())),
                     self.variables))


@dataclass
class RolloutPlan:
    """Initialization times, step, horizon, and the forecaster to run."""

    init_times: list[datetime]
    step_hours: int
    max_lead_hours: int
    forecaster: str = "persistence"
    external_command: list[str] | None = None
    postprocess: list[PipelineStep] = dc_field(default_factory=list)
    state_dtype: str = "f32"

    def __post_init__(self):
        if self.step_hours not in (1, 6):
            raise ValueError(f"step_hours must be 1 or 6, got {self.step_hours}")
        if self.max_lead_hours % self.step_hours:
            raise ValueError(
                f"max_lead_hours={self.max_lead_hours} not a multiple of "
                f"step_hours={self.step_hours}")
        if self.forecaster not in FORECASTERS:
            raise ValueError(
                f"forecaster must be one of {FORECASTERS}, got "
                f"{self.forecaster!r}")
        if self.forecaster == "external" and not self.external_command:
            raise ValueError("external forecaster requires a command")
        self.init_times = [ensure_utc(t) for t in self.init_times]

    @property
    def n_steps(self) -> int:
        return self.max_lead_hours // self.step_hours

    @property
    def leads(self) -> list[int]:
        return [k * self.step_hours for k in range(self.n_steps + 1)]


def apply_postprocessing(state: dict, pipeline: list[PipelineStep],
                         grid) -> dict:
    """Apply pipeline steps in order to a {(var, level): values} state.

    An empty pipeline returns the state object unchanged (identity, no
    copies), so baselines that configure no post-processing stay
    bit-identical to their inputs.
    """
    if not pipeline:
        return state
    out = dict(state)
    for step in pipeline:
        for key in out:
            if step.variables is not None and key[0] not in step.variables:
                continue
            if step.kind == "clamp_nonnegative":
                floor = step.params.get("floor", 1e-8)
                out[key] = np.where(out[key] < floor, floor, out[key])
            elif step.kind == "laplacian_diffuse":
                spec = DiffusionSpec(nu_dt=step.params["nu_dt"],
                                     steps=step.params.get("steps", 1))
                out[key] = diffuse_values(out[key], grid, spec)
            elif step.kind == "pole_filter":
                spec = PoleFilterSpec(
                    start_lat=step.params["start_lat"],
                    reference_lat=step.params.get("reference_lat"))
                out[key] = pole_filter_values(out[key], grid, spec)
    return out


def _state_to_series(state: dict, grid, when: datetime, units: dict) -> dict:
    return {key: FieldSeries(grid, key[0], key[1], [when], vals[None],
                             units=units.get(key))
            for key, vals in state.items()}


def _run_external_step(command: list[str], state: dict, grid, when: datetime,
                       step_hours: int, units: dict, dtype: str,
                       workdir: Path) -> dict:
    in_path = workdir / "state_in.gvf"
    out_path = workdir / "state_out.gvf"
    write_container(_state_to_series(state, grid, when, units), in_path,
                    dtype=dtype)
    if out_path.exists():
        out_path.unlink()
    cmd = list(command) + ["--in", str(in_path), "--out", str(out_path),
                           "--step-hours", str(step_hours)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ExternalForecasterError(
            f"external forecaster exited {proc.returncode} at "
            f"{when.isoformat()}: {proc.stderr.strip()[:500]}")
    try:
        c = read_container(out_path)
    except Exception as exc:
        raise ExternalForecasterError(
            f"external forecaster wrote an unreadable state at "
            f"{when.isoformat()}: {exc}") from exc
    if c.grid != grid:
        raise ExternalForecasterError(
            f"external forecaster changed the grid at {when.isoformat()}")
    if len(c.times) != 1:
        raise ExternalForecasterError(
            f"external state must hold exactly 1 time, got {len(c.times)}")
    missing = [k for k in state if k not in c.keys]
    if missing:
        raise ExternalForecasterError(
            f"external state is missing variables: {missing}")
    return {key: c.values(0, key[0], key[1]) for key in state}


def _rollout_one(plan: RolloutPlan, initial_states: dict, grid, units,
                 t_i: datetime, climatology: Climatology | None) -> dict:
    """One initialization -> {(var, level): FieldSeries over all leads}."""
    valid_times = [t_i + timedelta(hours=h) for h in plan.leads]
    if plan.forecaster == "persistence":
        out = {}
        for key, series in initial_states.items():
            state0 = series.at(t_i).values
            stack = np.broadcast_to(
                state0, (len(valid_times),) + grid.shape).copy()
            out[key] = FieldSeries(grid, key[0], key[1], valid_times, stack,
                                   units=units[key])
        return out
    if plan.forecaster == "climatology":
        out = {}
        for key in initial_states:
            stack = np.stack([climatology.values(key[0], key[1], t)
                              for t in valid_times])
            out[key] = FieldSeries(grid, key[0], key[1], valid_times, stack,
                                   units=units[key])
        return out
    # external, strictly sequential per step
    state = {key: series.at(t_i).values
             for key, series in initial_states.items()}
    trajectory = {key: [state[key]] for key in state}
    with tempfile.TemporaryDirectory(prefix="rollout_") as tmp:
        workdir = Path(tmp)
        when = t_i
        for _ in range(plan.n_steps):
            state = _run_external_step(plan.external_command, state, grid,
                                       when, plan.step_hours, units,
                                       plan.state_dtype, workdir)
            when = when + timedelta(hours=plan.step_hours)
            state = apply_postprocessing(state, plan.postprocess, grid)
            for key in trajectory:
                trajectory[key].append(state[key])
    return {key: FieldSeries(grid, key[0], key[1], valid_times,
                             np.stack(vals), units=units[key])
            for key, vals in trajectory.items()}


def run_rollout(plan: RolloutPlan, initial_states: dict,
                climatology: Climatology | None = None,
                target: dict | None = None) -> ForecastSet:
    """Produce forecasts for every initialization in the plan.

    initial_states maps (variable, level) to a FieldSeries covering every
    init time (for persistence/external this is also the verification
    target unless a separate target mapping is given).  The climatology
    forecaster requires a climatology and emits its (day, hour) field for
    each valid time.  Rollouts are deterministic: no hidden randomness.
    """
    if plan.forecaster == "climatology" and climatology is None:
        raise ValueError("climatology forecaster requires a climatology")
    first = next(iter(initial_states.values()))
    grid = first.grid
    units = {key: s.units for key, s in initial_states.items()}
    forecasts = {t_i: _rollout_one(plan, initial_states, grid, units, t_i,
                                   climatology)
                 for t_i in plan.init_times}
    return ForecastSet(forecasts,
                       target if target is not None else initial_states,
                       climatology=climatology)


def run_rollout_to_dir(plan: RolloutPlan, initial_states: dict, out_dir,
                       climatology: Climatology | None = None) -> list[Path]:
    """Roll out and write one container per initialization as it finishes.

    Streaming counterpart of run_rollout for long init lists: only one
    initialization is held in memory at a time.
    """
    if plan.forecaster == "climatology" and climatology is None:
        raise ValueError("climatology forecaster requires a climatology")
    first = next(iter(initial_states.values()))
    grid = first.grid
    units = {key: s.units for key, s in initial_states.items()}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t_i in plan.init_times:
        per_key = _rollout_one(plan, initial_states, grid, units, t_i,
                               climatology)
        paths.append(_write_one_init(per_key, t_i, out_dir, plan.state_dtype))
    return paths


def _write_one_init(per_key: dict, t_i: datetime, out_dir: Path,
                    dtype: str) -> Path:
    stamp = t_i.strftime("%Y%m%dT%H%M%SZ")
    path = out_dir / f"init_{stamp}.gvf"
    write_container(per_key, path, dtype=dtype,
                    attrs={"init_time": _format_time(t_i)})
    return path


def write_forecast_dir(fs: ForecastSet, out_dir, dtype: str = "f32") -> list[Path]:
    """Write one GVF1 container per initialization into a directory.

    Files are named init_<YYYYMMDDTHHMMSSZ>.gvf and tag their init time in
    the container attrs, which is how load_forecast_set reassembles them.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [_write_one_init(fs.forecasts[t_i], t_i, out_dir, dtype)
            for t_i in fs.init_times]
