"""Break-even FL rounds over a grid of samples per user, model size and participation."""

import argparse
import csv
import sys

import numpy as np

from dcalign.costmodel import CostParams, rstar_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    ap.add_argument("--gamma", type=float, default=100.0)
    args = ap.parse_args()

    base = CostParams.healthcare(gamma=args.gamma)
    rows = rstar_grid(base,
                      n_bars=np.logspace(2, 5, 7).round().astype(int).tolist(),
                      model_sizes=np.logspace(5, 9, 9).tolist(),
                      participations=[0.01, 0.1, 0.5, 1.0])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.DictWriter(fh, fieldnames=["p", "N", "n_bar", "r_star"])
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
