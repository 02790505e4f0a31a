"""Cross-correlation lags between fluctuation energies late in a run."""
import argparse

from qdoptomech.analysis import cross_correlation_lag
from qdoptomech.covariance import fluctuation_energies
from qdoptomech.harness import load_config, run_scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenarios", nargs="*", default=["fig4a", "fig4b"])
    parser.add_argument("--from-periods", type=float, default=60)
    args = parser.parse_args()
    for name in args.scenarios:
        result = run_scenario(load_config(name), write=False)
        tau = result.spec.tau
        cov = result.covariance
        w = cov.times >= args.from_periods * tau - 1e-9
        mirror, cavity, exciton = (e[w] for e in fluctuation_energies(cov.V))
        h = cov.times[1] - cov.times[0]
        print(f"{name}: cavity->exciton {cross_correlation_lag(cavity, exciton, h, tau / 2) / tau:+.3f} tau, "
              f"mirror->cavity {cross_correlation_lag(mirror, cavity, h, tau / 2) / tau:+.3f} tau")


if __name__ == "__main__":
    main()
