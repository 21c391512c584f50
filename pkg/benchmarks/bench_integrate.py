"""Time the compiled RK4 kernel against the pure-Python fallback.

Usage: python benchmarks/bench_integrate.py [--steps N] [--repeat R]
"""

import argparse
import time

import numpy as np

from lyapcert import _rk4_py, dynamics

try:
    from lyapcert import _rk4
except ImportError:
    _rk4 = None


def bench(kernel, f, x0, opts, repeat):
    best = np.inf
    traj = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = dynamics.integrate(f, x0, opts, kernel=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cases = [
        ("nonmonotone theta=0.05", dynamics.family_nonmonotone(0.05), [1.0, 0.0]),
        ("rotated theta=0.2 lam=1.5", dynamics.family_rotated_center(0.2, 1.5), [1.0, 0.0]),
    ]
    opts = dynamics.IntegrationOptions(max_steps=args.steps, record_every=100)
    print(f"{'case':<28} {'backend':<9} {'steps':>8} {'seconds':>9} {'steps/s':>11}")
    for name, f, x0 in cases:
        results = {}
        for label, mod in (("compiled", _rk4), ("python", _rk4_py)):
            if mod is None:
                print(f"{name:<28} {label:<9} {'not built':>8}")
                continue
            secs, traj = bench(mod.integrate_kernel, f, x0, opts, args.repeat)
            results[label] = (secs, traj)
            print(f"{name:<28} {label:<9} {traj.steps:>8} {secs:>9.4f} {traj.steps / secs:>11.0f}")
        if len(results) == 2:
            (sc, tc), (sp, tp) = results["compiled"], results["python"]
            same = np.array_equal(tc.final_state, tp.final_state)
            print(f"{'':<28} speedup {sp / sc:.1f}x, identical final state: {same}")


if __name__ == "__main__":
    main()
