"""6x6 lattice: initial actions, detected clusters and predictions, and limit opinions.

One CSV row per cell with its row, column, p(0), q(0), cluster id, predicted action and
final p. Limits should land on ratios k/m with m in {2, 3, 4}.
"""

import argparse
import csv

from coda import scenarios as sc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default="fig3_lattice6.csv")
    args = ap.parse_args()

    cfg = sc.builtin("lattice6")
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    result = sc.run_scenario(cfg)
    tr, report = result.trace, result.report
    cluster_of = {i: c_id for c_id, c in enumerate(report.clusters, 1) for i in c.agents}
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "p0", "q0", "cluster", "predicted", "p_final"])
        for i in range(tr.graph.n):
            pred = report.predictions[i]
            w.writerow([i // 6 + 1, i % 6 + 1, repr(tr.p[0, i]), int(tr.q[0, i]),
                        cluster_of.get(i, 0), "" if pred is None else pred, repr(tr.final_p[i])])
    for c in result.checks:
        print(f"{c.status:7s} {c.name}: {c.detail}")
    print(f"{tr.verdict} after {tr.steps} steps; wrote {args.out}")


if __name__ == "__main__":
    main()
