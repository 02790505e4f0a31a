"""Command-line entry point: ``qdopt {validate,run,sweep,list}``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import ConfigError, SimulationError
from .harness import ScenarioSpec, SweepSpec, list_scenarios, load_config, run_scenario, run_sweep


def _time(text: str):
    """Parse ``12.5`` or ``70tau``; returns ``(value, in_periods)``."""
    text = text.strip()
    if text.endswith("tau"):
        return float(text[:-3]), True
    return float(text), False


def _apply_overrides(spec: ScenarioSpec, dt_text, t_end_text) -> ScenarioSpec:
    tau = spec.tau
    if dt_text is not None:
        value, periods = _time(dt_text)
        dt = value * tau if periods else value
        if not dt > 0:
            raise ConfigError("--dt must be positive", key="dt")
        # snap so that tau is an integer number of steps
        steps = max(1000, math.ceil(tau / dt - 1e-9))
        spec = replace(spec, dt=tau / steps, steps_per_period=steps)
    if t_end_text is not None:
        value, periods = _time(t_end_text)
        if periods:
            spec = replace(spec, t_end=value * tau, periods=value)
        else:
            spec = replace(spec, t_end=value, periods=None)
        if not spec.t_end >= spec.dt:
            raise ConfigError("--t-end must cover at least one step", key="t_end")
    return spec


def _describe(spec) -> dict:
    if isinstance(spec, SweepSpec):
        return {"kind": "sweep", "name": spec.name, "base": spec.base.name, "axis": spec.axis,
                "values": list(spec.values), "reduce": spec.reduce, "column": spec.column, "workers": spec.workers}
    return {"kind": "scenario", "name": spec.name, "params": spec.params.as_dict(), "t_end": spec.t_end,
            "dt": spec.dt, "outputs": list(spec.outputs), "provenance": spec.provenance}


def _cmd_validate(args):
    spec = load_config(args.config)
    print(json.dumps({"status": "ok", **_describe(spec)}, indent=2, sort_keys=True))


def _cmd_run(args):
    spec = load_config(args.config)
    if isinstance(spec, SweepSpec):
        raise ConfigError("this is a sweep manifest; use the 'sweep' subcommand", path=args.config)
    spec = _apply_overrides(spec, args.dt, args.t_end)
    out = Path(args.out) if args.out else Path("runs") / spec.name
    result = run_scenario(spec, out)
    print(json.dumps({"status": "ok", "scenario": spec.name, "files": [str(f) for f in result.files],
                      "summary": result.summary}, indent=2, sort_keys=True))


def _cmd_sweep(args):
    sweep = load_config(args.config)
    if not isinstance(sweep, SweepSpec):
        raise ConfigError("this is a scenario manifest; use the 'run' subcommand", path=args.config)
    sweep = replace(sweep, base=_apply_overrides(sweep.base, args.dt, args.t_end))
    out = Path(args.out) if args.out else Path("runs") / sweep.name
    rows = run_sweep(sweep, out, workers=args.workers)
    failed = [{"value": v, "error": e} for v, _, e in rows if e]
    print(json.dumps({"status": "ok" if not failed else "partial", "sweep": sweep.name,
                      "summary": str(out / "summary.csv"), "failures": failed}, indent=2, sort_keys=True))
    return 0 if not failed else 3


def _cmd_list(args):
    catalog = list_scenarios()
    if args.json:
        print(json.dumps(catalog, indent=2, sort_keys=True))
        return
    for entry in catalog:
        p = entry["params"]
        print(f"{entry['name']:<8} {entry['provenance']:<30} Omega={p['Omega']:g} delta_0={p['delta_0']:g} "
              f"eps={p['eps']:g} G={p['G']:g} g0={p['g0']:g} kappa_d={p['kappa_d']:g} n_b={p['n_b']:g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdopt", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a scenario or sweep manifest")
    p.add_argument("config", help="path or built-in name")
    p.set_defaults(func=_cmd_validate)

    for name, func, helptext in (("run", _cmd_run, "run one scenario"), ("sweep", _cmd_sweep, "run a sweep")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="path or built-in name")
        p.add_argument("--out", help="output directory (default runs/<name>)")
        p.add_argument("--dt", help="time step, plain or as a multiple of tau ('0.0005tau'); snapped to tau/k")
        p.add_argument("--t-end", dest="t_end", help="end time, plain or in periods ('70tau')")
        p.add_argument("--workers", type=int, default=None, help="parallel scenario runs for sweeps")
        p.set_defaults(func=func)

    p = sub.add_parser("list", help="list built-in scenarios")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print(json.dumps({"status": "error", "type": "ConfigError", "message": "--workers must be >= 1"}),
              file=sys.stderr)
        return 2
    try:
        code = args.func(args)
    except (SimulationError, ValueError, OSError) as exc:
        report = {"status": "error", "type": type(exc).__name__, "message": str(exc)}
        problems = getattr(exc, "problems", None)
        if problems:
            report["problems"] = problems
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
