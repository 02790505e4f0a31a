"""Error of each perturbative recursion against a long numerical run.

The limit cycle is the last period of a run long enough for the slow
mirror transient to die out. Errors are relative to the trace diameter
of <a> and the peak-to-peak range of <q>.
"""
import argparse

import numpy as np

from qdoptomech.harness import load_config
from qdoptomech.meanfield import integrate_meanfield
from qdoptomech.perturbative import VARIANTS, expand, reconstruct_series


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenario", nargs="?", default="fig2")
    parser.add_argument("--periods", type=int, default=300)
    args = parser.parse_args()
    p = load_config(args.scenario).params
    tau = p.tau
    traj = integrate_meanfield(p, t_end=args.periods * tau, dt=tau / 1000)
    w = slice(len(traj) - 1001, len(traj) - 1)
    a, q = traj.a[w], traj.q[w]
    diameter = np.abs(a[:, None] - a[None, :]).max()
    print(f"{'variant':<11}" + "".join(f"  j<={j}: a / q    " for j in range(5)))
    for variant in VARIANTS:
        exp = expand(p, variant=variant)
        cells = []
        for j in range(5):
            rec = reconstruct_series(exp, p.G, traj.times[w], j_max=j)
            cells.append(f"{np.abs(rec['a'] - a).max() / diameter:7.2%} {np.abs(rec['q'] - q).max() / np.ptp(q):7.2%}")
        print(f"{variant:<11}" + "  ".join(cells))


if __name__ == "__main__":
    main()
