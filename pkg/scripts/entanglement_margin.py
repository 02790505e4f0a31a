"""How far each pair is from the separability boundary.

Prints the smallest 2*nu_minus reached over a run for every pair; values
below 1 mean a nonzero logarithmic negativity.
"""
import argparse

import numpy as np

from qdoptomech.covariance import MODES
from qdoptomech.entanglement import PAIRS, TwoModeCovariance, symplectic_oracle
from qdoptomech.harness import load_config, run_scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenarios", nargs="*", default=["fig7a", "fig7b", "fig9", "fig11", "fig12a", "fig12b"])
    parser.add_argument("--stride", type=int, default=50)
    args = parser.parse_args()
    for name in args.scenarios:
        result = run_scenario(load_config(name), write=False)
        V = result.covariance.V[args.stride :: args.stride]  # skip the product state at t = 0
        margins = []
        for label, (ma, mb) in PAIRS.items():
            idx = list(MODES[ma]) + list(MODES[mb])
            low = min(2 * symplectic_oracle(TwoModeCovariance(M[:2, :2], M[2:, 2:], M[:2, 2:]))[0]
                      for M in V[:, idx][:, :, idx])
            margins.append(f"{label} min 2nu- = {low:.6f}")
        print(f"{name:<7} " + "; ".join(margins))


if __name__ == "__main__":
    main()
