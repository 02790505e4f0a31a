"""Run every built-in scenario and sweep, writing CSVs under ``runs/``."""
import argparse
import sys
from pathlib import Path

from qdoptomech.harness import builtin_scenarios, builtin_sweeps, load_config, run_scenario, run_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs")
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--only", nargs="*", help="subset of scenario or sweep names")
    args = parser.parse_args()
    out = Path(args.out)
    names = args.only or builtin_scenarios() + builtin_sweeps()
    for name in names:
        spec = load_config(name)
        if name in builtin_sweeps():
            rows = run_sweep(spec, out / name, workers=args.workers)
            print(f"{name:<18} sweep over {spec.axis}: " + ", ".join(f"{v:g}->{s:.4g}" for v, s, _ in rows))
        else:
            result = run_scenario(spec, out / name)
            print(f"{name:<18} " + ", ".join(f"{k}={v:.4g}" for k, v in sorted(result.summary.items())
                                              if isinstance(v, float)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
