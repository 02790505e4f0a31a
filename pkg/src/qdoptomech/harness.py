"""Scenario manifests, runs, sweeps and file output."""
from __future__ import annotations

import csv
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .covariance import (CovarianceSeries, default_initial_covariance, fluctuation_energies, integrate_covariance,
                         phonon_number, write_covariance_csv, write_energies_csv)
from .entanglement import EntanglementSeries, entanglement_timeseries, write_entanglement_csv
from .errors import ConfigError, IncommensurateStepError, ParameterError, SimulationError
from .meanfield import MeanFieldTrajectory, detect_limit_cycle, integrate_meanfield, steady_displacement_qs
from .model import PARAM_FIELDS, ZERO_STATE, SystemParams, validate
from .perturbative import DEFAULT_VARIANT, VARIANTS, FourierExpansion, expand, reconstruct_series, write_coefficients_csv

OUTPUTS = ("meanfield", "perturbative", "fluctuations", "entanglement")
REDUCTIONS = ("max", "mean_last5")
MEANFIELD_COLUMNS = ("q", "p", "re_a", "im_a", "abs_a", "re_sigma", "im_sigma", "abs_sigma2")
FLUCTUATION_COLUMNS = ("mirror", "cavity", "exciton", "phonons")
ENTANGLEMENT_COLUMNS = ("E_md", "E_cd", "E_cm")
SCALAR_COLUMNS = ("q_s",)
DEFAULT_STEPS_PER_PERIOD = 2000
DEFAULT_PERIODS = 70
SCENARIO_KEYS = {"name", "provenance", "assumed", "note", "params", "t_end", "dt", "t_end_periods",
                 "steps_per_period", "outputs", "output_dir", "csv_stride", "variant"}
SWEEP_KEYS = {"name", "base", "overrides", "axis", "values", "reduce", "column", "workers", "output_dir"}


class ScenarioError(SimulationError):
    """A module error raised while running a named scenario."""

    def __init__(self, scenario, cause):
        self.scenario = scenario
        self.cause = cause
        super().__init__(f"scenario '{scenario}': {cause}")


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation run.

    When ``periods`` / ``steps_per_period`` are set, ``t_end`` and ``dt`` are
    tied to the modulation period and follow it if ``Omega`` changes.
    """

    name: str
    params: SystemParams
    t_end: float
    dt: float
    outputs: tuple = ("meanfield",)
    output_dir: Path = None
    provenance: str = ""
    csv_stride: int = 10
    periods: float = None
    steps_per_period: int = None
    variant: str = DEFAULT_VARIANT

    @property
    def tau(self) -> float:
        return self.params.tau

    def with_params(self, **changes) -> "ScenarioSpec":
        """Copy with parameter changes; ``omega_e`` stays locked to ``Omega``
        when the two were equal."""
        if "Omega" in changes and "omega_e" not in changes and self.params.omega_e == self.params.Omega:
            changes["omega_e"] = changes["Omega"]
        params = self.params.replace(**changes)
        tau = params.tau
        t_end = self.periods * tau if self.periods is not None else self.t_end
        dt = tau / self.steps_per_period if self.steps_per_period is not None else self.dt
        return replace(self, params=params, t_end=t_end, dt=dt)


@dataclass(frozen=True)
class SweepSpec:
    name: str
    base: ScenarioSpec
    axis: str
    values: tuple
    reduce: str
    column: str
    workers: int = 1
    output_dir: Path = None


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    trajectory: MeanFieldTrajectory
    expansion: FourierExpansion = None
    covariance: CovarianceSeries = None
    entanglement: EntanglementSeries = None
    summary: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


# ---------------------------------------------------------------- loading

def _scenario_root():
    return resources.files("qdoptomech") / "scenarios"


def _sweep_root():
    return resources.files("qdoptomech") / "sweeps"


def _natural_key(name):
    m = re.match(r"([a-z]+)(\d+)(.*)", name)
    return (m.group(1), int(m.group(2)), m.group(3)) if m else (name, 0, "")


def builtin_scenarios():
    return sorted((p.name[:-5] for p in _scenario_root().iterdir() if p.name.endswith(".yaml")), key=_natural_key)


def builtin_sweeps():
    return sorted((p.name[:-5] for p in _sweep_root().iterdir() if p.name.endswith(".yaml")), key=_natural_key)


def _read_yaml(path):
    try:
        text = (path if hasattr(path, "read_text") else Path(path)).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc}", path=path) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"parse error: {getattr(exc, 'problem', exc)}", path=path, line=line) from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", path=path)
    return data


def _resolve(source):
    """Map a built-in name or a filesystem path to something readable."""
    p = Path(str(source))
    if p.exists():
        return p
    name = str(source)
    for root in (_scenario_root(), _sweep_root()):
        candidate = root / f"{name}.yaml"
        if candidate.is_file():
            return candidate
    raise ConfigError(f"no such file or built-in manifest: {source}")


def _float(value, key, problems):
    try:
        out = float(value)
    except (TypeError, ValueError):
        problems.append(f"key '{key}': expected a number, got {value!r}")
        return math.nan
    return out


def _parse_params(raw, problems):
    if not isinstance(raw, dict):
        problems.append("key 'params': expected a mapping")
        return None
    for key in raw:
        if key not in PARAM_FIELDS:
            problems.append(f"unknown parameter key '{key}'")
    values = {}
    for key in PARAM_FIELDS:
        if key in raw:
            values[key] = _float(raw[key], key, problems)
        elif key != "omega_m":
            problems.append(f"missing key '{key}'")
    if any(k not in values for k in PARAM_FIELDS if k != "omega_m"):
        return None
    params = SystemParams(**values)
    try:
        validate(params)
    except ParameterError as exc:
        problems.extend(exc.problems)
    return params


def _check_step(params, dt, problems):
    if not params.Omega > 0:
        problems.append("Omega must be positive to define the modulation period")
        return
    ratio = params.tau / dt
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        problems.append(str(IncommensurateStepError(f"tau/dt = {ratio!r} is not an integer")))


def parse_scenario(data: dict, path=None, overrides: dict = None) -> ScenarioSpec:
    problems = [f"unknown key '{k}'" for k in data if k not in SCENARIO_KEYS]
    name = str(data.get("name") or (Path(str(path)).stem if path else "scenario"))
    raw = dict(data.get("params") or {})
    raw.update(overrides or {})
    params = _parse_params(raw, problems)

    outputs = data.get("outputs", ["meanfield"])
    if isinstance(outputs, str):
        outputs = [outputs]
    bad = [o for o in outputs if o not in OUTPUTS]
    if bad:
        problems.append(f"key 'outputs': unknown products {bad}")
    outputs = tuple(o for o in OUTPUTS if o in outputs or o == "meanfield")
    variant = data.get("variant", DEFAULT_VARIANT)
    if variant not in VARIANTS:
        problems.append(f"key 'variant': expected one of {VARIANTS}")
    stride = data.get("csv_stride", 10)
    if not isinstance(stride, int) or stride < 1:
        problems.append("key 'csv_stride': expected a positive integer")

    spec = None
    if params is not None and params.Omega > 0:
        tau = params.tau
        periods = steps = None
        if "t_end" in data and "t_end_periods" in data:
            problems.append("give either 't_end' or 't_end_periods', not both")
        if "dt" in data and "steps_per_period" in data:
            problems.append("give either 'dt' or 'steps_per_period', not both")
        if "t_end" in data:
            t_end = _float(data["t_end"], "t_end", problems)
        else:
            periods = _float(data.get("t_end_periods", DEFAULT_PERIODS), "t_end_periods", problems)
            t_end = periods * tau
        if "dt" in data:
            dt = _float(data["dt"], "dt", problems)
        else:
            steps = data.get("steps_per_period", DEFAULT_STEPS_PER_PERIOD)
            if not isinstance(steps, int) or steps < 1:
                problems.append("key 'steps_per_period': expected a positive integer")
                steps = DEFAULT_STEPS_PER_PERIOD
            dt = tau / steps
        if not dt > 0:
            problems.append("key 'dt': must be positive")
        else:
            _check_step(params, dt, problems)
            if dt > tau / 1000 * (1 + 1e-12):
                problems.append("key 'dt': must not exceed tau/1000")
        if not t_end >= dt:
            problems.append("key 't_end': must be at least one step")
        out_dir = data.get("output_dir")
        spec = ScenarioSpec(name=name, params=params, t_end=t_end, dt=dt, outputs=outputs,
                            output_dir=Path(out_dir) if out_dir else None, provenance=str(data.get("provenance", "")),
                            csv_stride=stride if isinstance(stride, int) else 10, periods=periods,
                            steps_per_period=steps, variant=variant)
    elif params is not None:
        _check_step(params, 1.0, problems)
    if problems:
        raise ConfigError("; ".join(problems), path=path, problems=problems)
    return spec


def parse_sweep(data: dict, path=None) -> SweepSpec:
    problems = [f"unknown sweep key '{k}'" for k in data if k not in SWEEP_KEYS]
    for key in ("base", "axis", "values", "reduce", "column"):
        if key not in data:
            problems.append(f"missing key '{key}'")
    if problems:
        raise ConfigError("; ".join(problems), path=path, problems=problems)
    base_src = data["base"]
    overrides = data.get("overrides") or {}
    if isinstance(base_src, dict):
        base = parse_scenario(base_src, path, overrides)
    else:
        base_path = Path(str(base_src))
        if path is not None and not base_path.is_absolute() and (Path(str(path)).parent / base_path).exists():
            base_path = Path(str(path)).parent / base_path
        src = base_path if base_path.exists() else _resolve(base_src)
        base = parse_scenario(_read_yaml(src), src, overrides)
    axis = data["axis"]
    if axis not in PARAM_FIELDS:
        problems.append(f"key 'axis': '{axis}' is not a parameter")
    values = data["values"]
    if not isinstance(values, list) or not values:
        problems.append("key 'values': expected a nonempty list")
        values = []
    values = tuple(_float(v, "values", problems) for v in values)
    if not all(math.isfinite(v) for v in values):
        problems.append("key 'values': all values must be finite")
    if data["reduce"] not in REDUCTIONS:
        problems.append(f"key 'reduce': expected one of {REDUCTIONS}")
    column = data["column"]
    if column not in MEANFIELD_COLUMNS + FLUCTUATION_COLUMNS + ENTANGLEMENT_COLUMNS + SCALAR_COLUMNS:
        problems.append(f"key 'column': unknown column '{column}'")
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        problems.append("key 'workers': expected a positive integer")
    if problems:
        raise ConfigError("; ".join(problems), path=path, problems=problems)
    out_dir = data.get("output_dir")
    name = str(data.get("name") or (Path(str(path)).stem if path else "sweep"))
    return SweepSpec(name=name, base=base, axis=axis, values=values, reduce=data["reduce"], column=column,
                     workers=workers, output_dir=Path(out_dir) if out_dir else None)


def load_config(source):
    """Load a scenario or sweep manifest from a path or built-in name."""
    path = _resolve(source)
    data = _read_yaml(path)
    if "sweep" in data:
        if set(data) != {"sweep"}:
            raise ConfigError("a sweep manifest holds only the 'sweep' mapping", path=path)
        if not isinstance(data["sweep"], dict):
            raise ConfigError("expected a mapping", path=path, key="sweep")
        return parse_sweep(data["sweep"], path)
    return parse_scenario(data, path)


def list_scenarios():
    """Built-in scenarios in figure order, with provenance and parameters."""
    out = []
    for name in builtin_scenarios():
        data = _read_yaml(_scenario_root() / f"{name}.yaml")
        spec = parse_scenario(data, name)
        out.append({"name": name, "provenance": spec.provenance, "assumed": list(data.get("assumed", [])),
                    "params": spec.params.as_dict(), "outputs": list(spec.outputs)})
    return out


# ---------------------------------------------------------------- running

def _meanfield_rows(times, q, p, a, s):
    for row in zip(times, q, p, a.real, a.imag, s.real, s.imag):
        yield [repr(float(x)) for x in row]


def write_meanfield_csv(traj: MeanFieldTrajectory, path, stride: int = 1) -> None:
    sl = slice(None, None, stride)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "q", "p", "re_a", "im_a", "re_sigma", "im_sigma"])
        w.writerows(_meanfield_rows(traj.times[sl], traj.q[sl], traj.p[sl], traj.a[sl], traj.sigma[sl]))


def _window(times, tau, periods=5):
    """Indices covering the final ``periods`` periods, right end excluded."""
    dt = times[1] - times[0]
    k = int(round(periods * tau / dt))
    if k < 1 or len(times) < k + 1:
        return None
    return slice(len(times) - 1 - k, len(times) - 1)


def _series(result: ScenarioResult, column: str):
    traj = result.trajectory
    if column in MEANFIELD_COLUMNS:
        values = {
            "q": traj.q, "p": traj.p, "re_a": traj.a.real, "im_a": traj.a.imag, "abs_a": np.abs(traj.a),
            "re_sigma": traj.sigma.real, "im_sigma": traj.sigma.imag, "abs_sigma2": np.abs(traj.sigma) ** 2,
        }[column]
        return traj.times, values
    if column in FLUCTUATION_COLUMNS:
        cov = result.covariance
        if cov is None:
            raise ValueError(f"column '{column}' needs the fluctuations output")
        mirror, cavity, exciton = fluctuation_energies(cov.V)
        values = {"mirror": mirror, "cavity": cavity, "exciton": exciton, "phonons": phonon_number(cov.V)}[column]
        return cov.times, values
    if column in ENTANGLEMENT_COLUMNS:
        if result.entanglement is None:
            raise ValueError(f"column '{column}' needs the entanglement output")
        return result.entanglement.t, result.entanglement.column(column)
    raise ValueError(f"unknown column '{column}'")


def reduce_column(result: ScenarioResult, column: str, how: str) -> float:
    """``max`` over the run or mean over the final five periods."""
    if column == "q_s":
        value = result.summary.get("q_s")
        if value is None:
            raise ValueError("q_s is undefined for this scenario")
        return value
    times, values = _series(result, column)
    if how == "max":
        return float(np.max(values))
    if how == "mean_last5":
        w = _window(times, result.spec.tau)
        if w is None:
            raise ValueError("run shorter than five periods")
        return float(np.mean(values[w]))
    raise ValueError(f"unknown reduction '{how}'")


def _outputs_for(column):
    if column in ENTANGLEMENT_COLUMNS:
        return ("meanfield", "fluctuations", "entanglement")
    if column in FLUCTUATION_COLUMNS:
        return ("meanfield", "fluctuations")
    return ("meanfield",)


def _summarise(result: ScenarioResult) -> dict:
    spec, traj = result.spec, result.trajectory
    tau = spec.tau
    out = {"t_final": float(traj.times[-1])}
    k = traj.steps_per(tau)
    if len(traj) >= 2 * k + 1:
        last = np.abs(traj.a[-k - 1:])
        tol = 1e-3 * float(np.ptp(last)) if np.ptp(last) > 0 else 1e-9
        out["limit_cycle_time"] = detect_limit_cycle(traj, tau, tol, components=("abs_a",))
    w = _window(traj.times, tau)
    if w is not None:
        out["mean_q_last5"] = float(np.mean(traj.q[w]))
        sig2 = float(np.mean(np.abs(traj.sigma[w]) ** 2))
        out["mean_abs_sigma2_last5"] = sig2
        p = spec.params
        if p.g0 != 0 and p.N != 0:
            out["q_s"] = steady_displacement_qs(p, sig2)
    if result.entanglement is not None:
        for name in ENTANGLEMENT_COLUMNS:
            out[f"max_{name}"] = float(np.max(result.entanglement.column(name)))
    return out


def run_scenario(spec: ScenarioSpec, output_dir=None, write: bool = True) -> ScenarioResult:
    """Run every requested product and (optionally) write CSVs plus a manifest."""
    try:
        params = validate(spec.params)
        traj = integrate_meanfield(params, ZERO_STATE, spec.t_end, spec.dt)
        result = ScenarioResult(spec, traj)
        if "perturbative" in spec.outputs:
            result.expansion = expand(params, variant=spec.variant)
        if "fluctuations" in spec.outputs or "entanglement" in spec.outputs:
            result.covariance = integrate_covariance(params, default_initial_covariance(params), traj)
        if "entanglement" in spec.outputs:
            result.entanglement = entanglement_timeseries(result.covariance)
        result.summary = _summarise(result)
    except SimulationError as exc:
        raise ScenarioError(spec.name, exc) from exc

    out_dir = output_dir or spec.output_dir
    if write and out_dir is not None:
        _write_outputs(result, Path(out_dir))
    return result


def _write_outputs(result: ScenarioResult, out_dir: Path) -> None:
    spec = result.spec
    out_dir.mkdir(parents=True, exist_ok=True)
    stride = spec.csv_stride
    files = []

    def target(name):
        files.append(name)
        return out_dir / name

    write_meanfield_csv(result.trajectory, target("meanfield.csv"), stride)
    if result.expansion is not None:
        write_coefficients_csv(result.expansion, target("coefficients.csv"))
        traj = result.trajectory
        sl = slice(None, None, stride)
        rec = reconstruct_series(result.expansion, spec.params.G, traj.times[sl])
        with open(target("perturbative.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "q", "p", "re_a", "im_a", "re_sigma", "im_sigma"])
            w.writerows(_meanfield_rows(traj.times[sl], rec["q"], rec["p"], rec["a"], rec["sigma"]))
    if result.covariance is not None:
        cov_stride = max(1, stride // 2)
        write_covariance_csv(result.covariance, target("covariance.csv"), cov_stride)
        write_energies_csv(result.covariance, target("energies.csv"), cov_stride)
    if result.entanglement is not None:
        write_entanglement_csv(result.entanglement, target("entanglement.csv"), max(1, stride // 2))
    manifest = {
        "scenario": spec.name,
        "provenance": spec.provenance,
        "version": __version__,
        "params": spec.params.as_dict(),
        "t_end": spec.t_end,
        "dt": spec.dt,
        "outputs": list(spec.outputs),
        "variant": spec.variant,
        "csv_stride": stride,
        "files": list(files),
        "summary": result.summary,
    }
    files.append("manifest.json")
    manifest["files"] = list(files)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    result.files = [out_dir / f for f in files]


def _sweep_point(args):
    spec, axis, value, column, how = args
    try:
        point = spec.with_params(**{axis: value})
        point = replace(point, name=f"{spec.name}[{axis}={value!r}]",
                        outputs=tuple(sorted(set(point.outputs) | set(_outputs_for(column)), key=OUTPUTS.index)))
        result = run_scenario(point, write=False)
        return value, reduce_column(result, column, how), ""
    except Exception as exc:  # recorded per value; the sweep carries on
        return value, math.nan, f"{type(exc).__name__}: {exc}"


def run_sweep(sweep: SweepSpec, output_dir=None, workers: int = None):
    """Run one scenario per axis value and write ``summary.csv``.

    Rows come back in axis order whatever the completion order. Returns the
    list of ``(value, statistic, error)`` rows.
    """
    workers = workers or sweep.workers
    jobs = [(sweep.base, sweep.axis, v, sweep.column, sweep.reduce) for v in sweep.values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    out_dir = output_dir or sweep.output_dir
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([sweep.axis, f"{sweep.reduce}({sweep.column})", "error"])
            for value, stat, err in rows:
                w.writerow([repr(float(value)), repr(float(stat)), err])
        manifest = {
            "sweep": sweep.name, "version": __version__, "base": sweep.base.name,
            "base_params": sweep.base.params.as_dict(), "axis": sweep.axis, "values": list(sweep.values),
            "reduce": sweep.reduce, "column": sweep.column,
            "steps_per_period": sweep.base.steps_per_period, "periods": sweep.base.periods,
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return rows
