"""Lyapunov grid certificates across the admissible R window and random endemic parameters.

    python scripts/certify_regions.py [--draws 200] [--grid 200] [--seed 0]
"""

import argparse

import numpy as np

from acdyn import analysis as an
from acdyn.models import AsisParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=200)
    ap.add_argument("--grid", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = AsisParams(0.3, 0.28, 0.1, 0.2)
    w = an.admissible_R(p)
    print(f"reference case: R in [{w.lower:.4f}, min({w.inverse_slope_bound:.4f}, {w.cone_bound:.4f}))")
    for R in np.linspace(w.lower, w.upper, 6, endpoint=False):
        c = an.certify_endemic(p, R=R, n=args.grid)
        print(f"  R={R:.4f}  max V_R' {c.max_violation:+.3e}  sign failures {c.sign_failures}")

    rng = np.random.default_rng(args.seed)
    failed = checked = 0
    while checked < args.draws:
        q = AsisParams(rng.uniform(0.1, 2), rng.uniform(0.01, 2), rng.uniform(0.01, 0.5), rng.uniform(0.02, 0.98))
        if an.spectral(q).lambda_plus <= 1e-3:
            if an.spectral(q).lambda_plus < 0:
                failed += not an.certify_ife(q, n=args.grid).passed
                checked += 1
            continue
        failed += not an.certify_endemic(q, n=args.grid).passed
        checked += 1
    print(f"random draws: {checked} certificates, {failed} failed")


if __name__ == "__main__":
    main()
