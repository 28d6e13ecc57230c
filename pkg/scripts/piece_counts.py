"""Piece count and certified error of the PWL interpolant across eps.

Writes a CSV (fixture, eps, pieces, bound, max_error) and prints the fitted
log-log exponent of piece count against eps per fixture.
"""
import argparse
import csv

import numpy as np

from nlse import catalog, pwl


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="0.5,0.2,0.1,0.05,0.02,0.01")
    ap.add_argument("--out", default="piece_counts.csv")
    args = ap.parse_args()
    eps_list = [float(e) for e in args.eps.split(",")]

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fixture", "eps", "pieces", "bound", "max_error"])
        for name, nl in catalog.FIXTURES.items():
            counts = []
            for eps in eps_list:
                rec = pwl.certify(nl, eps)
                counts.append(rec["pieces"])
                w.writerow([name, eps, rec["pieces"], pwl.piece_count_bound(nl, nl.constants, eps),
                            repr(rec["max_error"])])
            if nl.affine is None:
                slope = np.polyfit(np.log(eps_list), np.log(counts), 1)[0]
                print(f"{name:9s} exponent {slope:+.3f}  pieces {counts}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
