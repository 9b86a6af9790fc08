"""Regime map over (x_a, beta_a) at fixed beta, alpha; writes a CSV of lambda_plus and L.

    python scripts/threshold_sweep.py [--beta 0.3] [--alpha 0.1] [--n 101] [--out threshold.csv]
"""

import argparse
import csv

import numpy as np

from acdyn import analysis as an
from acdyn.models import AsisParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=0.3)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--beta-a-max", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=101)
    ap.add_argument("--out", default="threshold.csv")
    args = ap.parse_args()

    xs = np.linspace(0.0, 1.0, args.n)
    bas = np.linspace(0.0, args.beta_a_max, args.n)
    endemic = 0
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_a", "beta_a", "lambda_plus", "regime", "L"])
        for x in xs:
            for ba in bas:
                rep = an.classify(AsisParams(args.beta, ba, args.alpha, x))
                endemic += rep.regime is an.Regime.ENDEMIC
                w.writerow([f"{x:.6g}", f"{ba:.6g}", f"{rep.spectral.lambda_plus:.12g}", rep.regime.value,
                            f"{rep.limiting_infected:.12g}"])
    print(f"{args.n * args.n} points, {endemic} endemic; boundary beta_a * x_a = {args.beta - args.alpha:g}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
