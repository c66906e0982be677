"""CODA versus the Martins update for one agent hearing a single influencer playing 1.

Writes p, coda, martins, |diff| and 2p^3 over a grid of p to a CSV.
"""

import argparse
import csv

import numpy as np

from coda.dynamics import OpinionState, coda_step, martins_step
from coda.graph import build_from_edges


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=2 / 3)
    ap.add_argument("--points", type=int, default=99)
    ap.add_argument("--out", default="fig1_martins.csv")
    args = ap.parse_args()

    g = build_from_edges(2, [(1, 0)], directed=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "coda", "martins", "abs_diff", "two_p_cubed"])
        for p in np.linspace(0.01, 0.99, args.points):
            if p == 0.5:
                continue
            c = coda_step(g, OpinionState.initial([p, 0.9])).p[0]
            m = martins_step(g, [p, 0.9], [0, 1], args.alpha)[0]
            w.writerow([repr(p), repr(c), repr(m), repr(abs(c - m)), repr(2 * p**3)])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
