"""Random ONE-IN-THREE instances: compare the eps-margin sos verdict on the
homogenized quartic with brute-force satisfiability."""

import random
import sys

from lyapcert import reduction, sos
from lyapcert.poly import homogenize


def random_instance(rng: random.Random, max_vars: int = 4):
    n = rng.randint(3, max_vars)
    m = rng.randint(1, 4)
    clauses = []
    for _ in range(m):
        idx = rng.sample(range(1, n + 1), 3)
        clauses.append([i if rng.random() < 0.5 else -i for i in idx])
    return reduction.CnfInstance.from_ints(n, clauses)


def main(count: int = 200, seed: int = 0) -> int:
    rng = random.Random(seed)
    mismatches = sat = 0
    for _ in range(count):
        inst = random_instance(rng)
        p = reduction.build_quartic(inst)
        ph = homogenize(p, 4)
        satisfiable = reduction.exactly_one_true_satisfiable(inst) is not None
        sat += satisfiable
        pd = sos.check_positive_definite(ph, 1e-4).is_certificate and not reduction.zeros_on_cube(p)
        if pd == satisfiable:
            mismatches += 1
            print(f"mismatch: {inst.to_dimacs()!r} satisfiable={satisfiable}")
    print(f"{count} instances ({sat} satisfiable), {mismatches} mismatches")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 200))
