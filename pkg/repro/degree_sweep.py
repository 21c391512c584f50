"""Exploratory: smallest Lyapunov degree found for the rotated center family
with an irrational lambda as theta shrinks.

Not an acceptance check. The needed degree should grow without bound as
theta -> 0, which no finite run can confirm; small thetas also stress the
solver, so an inconclusive status deep in the sweep is a numerical limit.
"""

import argparse
import math
import time

from lyapcert.dynamics import family_rotated_center
from lyapcert.lyap import find_lyapunov


def smallest_degree(theta: float, lam: float, max_degree: int):
    statuses = []
    for d in range(2, max_degree + 1, 2):
        out = find_lyapunov(family_rotated_center(theta, lam), d)
        statuses.append(out.status)
        if out.found:
            return d, statuses
    return None, statuses


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=math.pi)
    ap.add_argument("--max-degree", type=int, default=12)
    ap.add_argument("--thetas", type=float, nargs="+", default=[0.1, 0.01, 1e-3, 5e-4, 1e-4, 2e-5])
    args = ap.parse_args(argv)
    print(f"{'theta':>8}  {'degree':>6}  {'seconds':>8}  statuses")
    for theta in args.thetas:
        t0 = time.perf_counter()
        d, statuses = smallest_degree(theta, args.lam, args.max_degree)
        print(f"{theta:8.2g}  {d if d else '>' + str(args.max_degree):>6}  "
              f"{time.perf_counter() - t0:8.2f}  {' '.join(statuses)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
