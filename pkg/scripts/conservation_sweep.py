"""Energy drift of the conservative scheme across theta and grid size."""

import argparse
import csv
import time
from pathlib import Path

import numpy as np

from degenwave import RandomSmooth, SimConfig, Weight, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", default="0,0.5,1,1.5,1.9")
    ap.add_argument("--grids", default="100,200,400")
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--out", default="out/scripts/conservation.csv")
    args = ap.parse_args()
    rows = []
    for th in map(float, args.thetas.split(",")):
        for n in map(int, args.grids.split(",")):
            t0 = time.perf_counter()
            tr = run(SimConfig(Weight.power(th), n, args.T, RandomSmooth(0)))
            drift = float(np.max(np.abs(tr.energy - tr.energy[0])) / tr.energy[0])
            rows.append((th, n, drift, time.perf_counter() - t0))
            print(f"theta={th:<5g} n={n:<5d} drift={drift:.2e}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "n", "max_rel_drift", "seconds"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
