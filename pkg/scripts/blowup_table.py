"""Upper estimates of the observability constant as theta -> 2, closed form against simulation."""

import argparse
import csv
from pathlib import Path

from degenwave.observability import blowup_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", default="1.0,1.25,1.5,1.8,1.9,1.95")
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--grid", type=int, default=800)
    ap.add_argument("--out", default="out/scripts/blowup.csv")
    args = ap.parse_args()
    rows = blowup_sweep([float(t) for t in args.thetas.split(",")], args.T, args.grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "bound", "optimal_phase", "sin_phase", "simulated", "rel_error"])
        for r in rows:
            w.writerow([r.theta, r.bound, r.closed_form, r.closed_form_sin_phase, r.simulated, r.rel_error])
            print(f"theta={r.theta:<5g} (2-theta)T={r.bound:<6g} optimal={r.closed_form:.5f} "
                  f"sin={r.closed_form_sin_phase:.5f} simulated={r.simulated:.5f}")


if __name__ == "__main__":
    main()
