"""Optimal coverage/strength split and limiting infection as the budget grows.

    python scripts/budget_frontier.py [--family linear|hyperbolic] [--beta 1.0] [--alpha 0.1]
"""

import argparse

import numpy as np

from acdyn.investment import InvestmentProblem, build_family, solve, solve_by_golden

DEFAULTS = {
    "linear": {"c_1": 4.0, "c_2": 0.2},
    "hyperbolic": {"c_1": 2.0, "c_2": 1.0, "beta_bar": 0.5},
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=sorted(DEFAULTS), default="linear")
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--m-max", type=float, default=5.0)
    ap.add_argument("--n", type=int, default=20)
    args = ap.parse_args()

    h, g = build_family(args.family, **DEFAULTS[args.family])
    print(f"{'M':>6} {'a*':>9} {'b*':>9} {'case':>13} {'L':>8} {'|a*-golden|':>12}")
    for M in np.linspace(args.m_max / args.n, args.m_max, args.n):
        prob = InvestmentProblem(h, g, M, args.beta, args.alpha)
        sol = solve(prob)
        gap = abs(sol.a_star - solve_by_golden(prob)) if not sol.eradication_feasible else float("nan")
        print(f"{M:>6.2f} {sol.a_star:>9.5f} {sol.b_star:>9.5f} {sol.case.value:>13} "
              f"{sol.predicted_L:>8.5f} {gap:>12.1e}")


if __name__ == "__main__":
    main()
