"""HUM controls under grid refinement: iterations, final state and control norm."""

import argparse

import numpy as np

from degenwave.hum import HumOperator, HumProblem, lower_bracket, modal_gram_min_eigenvalue, solve_hum
from degenwave.weights import Weight


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta", type=float, default=0.5)
    ap.add_argument("--factor", type=float, default=1.5, help="T = factor * T_a")
    ap.add_argument("--grids", default="50,100,200")
    ap.add_argument("--method", choices=["cr", "cg"], default="cr")
    args = ap.parse_args()
    w = Weight.power(args.theta)
    T = args.factor * w.constants().T_a
    print(f"theta={args.theta} T={T:.4f} bracket={lower_bracket(w, T):.4f}")
    for n in map(int, args.grids.split(",")):
        x = np.arange(n + 1) / n
        sol = solve_hum(HumProblem(w, T, np.sin(np.pi * x), np.zeros(n + 1), n), method=args.method)
        modal = modal_gram_min_eigenvalue(HumOperator(w, T, n, 0.5 / n), 0.25) if n <= 100 else float("nan")
        print(f"  n={n:<4d} iterations={sol.iterations:<4d} final/initial={sol.relative_final_norm:.2e} "
              f"||f||={sol.control_norm(0.5 / n):.5f} ritz={sol.min_ritz:.4f} low-mode gram={modal:.4f}")


if __name__ == "__main__":
    main()
