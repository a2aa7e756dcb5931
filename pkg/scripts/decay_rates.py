"""Decay-rate table for the nonlinear feedback families (model envelopes and simulations)."""

import argparse
import csv
from pathlib import Path

from degenwave.decay import DEFAULT_TABLE_LAWS, decay_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--laws", default=";".join(DEFAULT_TABLE_LAWS), help="semicolon-separated laws")
    ap.add_argument("--simulate", default="poly:2;poly:3", help="laws to simulate ('' for none)")
    ap.add_argument("--grid", type=int, default=400)
    ap.add_argument("--out", default="out/scripts/decay_rates.csv")
    args = ap.parse_args()
    sim = [s for s in args.simulate.split(";") if s]
    rows = decay_table(args.laws.split(";"), sim, n=args.grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].to_dict()))
        w.writeheader()
        for r in rows:
            w.writerow(r.to_dict())
            sim_txt = f" simulated={r.simulated_exponent:.3f}" if r.simulated_exponent is not None else ""
            print(f"{r.law:<12} {r.rate:<10} expected={r.expected:g} envelope={r.envelope_exponent:.3f}{sim_txt}")


if __name__ == "__main__":
    main()
