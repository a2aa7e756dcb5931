"""Refinement study for the two multiplier identities."""

import argparse

import numpy as np

from degenwave.dynamics import multiplier_experiment
from degenwave.weights import Weight


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", default="0,0.5,1.5")
    ap.add_argument("--grids", default="100,200,400,800")
    ap.add_argument("--grading", type=float, default=None, help="override the default grid grading")
    args = ap.parse_args()
    ns = np.array([int(n) for n in args.grids.split(",")])
    for th in map(float, args.thetas.split(",")):
        reps = [multiplier_experiment(Weight.power(th), int(n), grading=args.grading) for n in ns]
        r1 = np.array([r.le1_residual for r in reps])
        r2 = np.array([r.le2_residual for r in reps])
        print(f"theta={th}")
        for n, a, b in zip(ns, r1, r2):
            print(f"  n={n:<5d} first={a:.3e} second={b:.3e}")
        o1 = -np.polyfit(np.log(ns), np.log(r1), 1)[0]
        print(f"  fitted order (first identity) {o1:.2f}")


if __name__ == "__main__":
    main()
