"""End-to-end acceptance checks. Each test prints one PASS/FAIL line."""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from lyapcert import reduction
from lyapcert.dynamics import (CONVERGED, PERIODIC, VectorField, conserved_quantity_rotated,
                               family_nonmonotone, family_rotated_center, integrate, sphere_points)
from lyapcert.lyap import FOUND, certify_positivity_gradient, lie_derivative, theta_sweep
from lyapcert.poly import Polynomial, grad_inner, homogenize, monomials_of_degree
from lyapcert.sdp import FEASIBLE, INFEASIBLE, SdpProblem, min_eigenvalue, solve_margin
from lyapcert.sos import NOT_SOS, check_positive_definite, check_sos, validate_certificate

from conftest import perturbed_motzkin, reference_W, motzkin

pytestmark = pytest.mark.acceptance

RECON_TOL = 1e-6
PSD_TOL = 1e-7


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, started):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({time.perf_counter() - started:.2f}s)"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def strict_check(form, cert):
    check = validate_certificate(form, cert, RECON_TOL, PSD_TOL)
    return bool(check) and min_eigenvalue(cert.gram) >= -PSD_TOL


def test_gradient_proof_reproduction(report):
    t0 = time.perf_counter()
    V = perturbed_motzkin()
    low = certify_positivity_gradient(V, 2)
    high = certify_positivity_gradient(V, 4)
    found_ok = high.status == FOUND and all(
        strict_check(f, c) for f, c in zip(high.certified_forms, (high.cert_W, high.cert_grad)))
    W = reference_W()
    printed_ok = check_sos(W).is_certificate and check_sos(grad_inner(W, V)).is_certificate
    elapsed = time.perf_counter() - t0
    ok = low.status == "infeasible" and found_ok and printed_ok and elapsed <= 10
    report(1, ok, f"W deg 2 {low.status}, W deg 4 {high.status}, printed W certified={printed_ok}", t0)


def test_motzkin_negative_control(report):
    t0 = time.perf_counter()
    margins = [check_sos(p).margin for p in (motzkin(), perturbed_motzkin())]
    statuses = [check_sos(p).status for p in (motzkin(), perturbed_motzkin())]
    ok = all(s == NOT_SOS for s in statuses) and all(m < -1e-6 for m in margins)
    ok = ok and time.perf_counter() - t0 <= 2
    report(2, ok, f"margins {margins[0]:.3e} (Motzkin), {margins[1]:.3e} (perturbed)", t0)


def test_threshold_sweep(report):
    t0 = time.perf_counter()
    six = theta_sweep(family_nonmonotone, 6, 0.001, 0.1, 1e-4)
    four = theta_sweep(family_nonmonotone, 4, 0.001, 3.0, 0.01, coarse=300)
    bracket_ok = six.bracket is not None and 0.0257 <= six.bracket[0] and six.bracket[1] <= 0.0277
    four_ok = all(p.status == FOUND for p in four.probes)
    ok = bracket_ok and four_ok and time.perf_counter() - t0 <= 300
    report(3, ok, f"degree 6 bracket {six.bracket}, degree 4 found at all "
                  f"{len(four.probes)} probes={four_ok}", t0)


def _random_instance(rng):
    n = rng.randint(3, 4)
    clauses = []
    for _ in range(rng.randint(1, 4)):
        idx = rng.sample(range(1, n + 1), 3)
        clauses.append([i if rng.random() < 0.5 else -i for i in idx])
    return reduction.CnfInstance.from_ints(n, clauses)


def test_reduction_soundness(report):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    mismatches = unsat = 0
    count = 220
    for _ in range(count):
        inst = _random_instance(rng)
        p = reduction.build_quartic(inst)
        satisfiable = reduction.exactly_one_true_satisfiable(inst) is not None
        unsat += not satisfiable
        pd = check_positive_definite(homogenize(p, 4), 1e-4).is_certificate and not reduction.zeros_on_cube(p)
        mismatches += pd == satisfiable
    ok = mismatches == 0 and time.perf_counter() - t0 <= 120
    report(4, ok, f"{count} instances ({unsat} unsatisfiable), {mismatches} mismatches", t0)


def _random_poly(rng, n, degree, homogeneous):
    terms = {}
    pool = (monomials_of_degree(n, degree) if homogeneous
            else [m for d in range(degree + 1) for m in monomials_of_degree(n, d)])
    for _ in range(rng.randint(1, 6)):
        terms[rng.choice(pool)] = Fraction(rng.randint(-20, 20), rng.randint(1, 12))
    return Polynomial(n, terms)


def _random_point(rng, n):
    return [Fraction(rng.randint(-30, 30), rng.randint(1, 9)) for _ in range(n)]


def test_identity_suite(report):
    t0 = time.perf_counter()
    rng = random.Random(7)
    cases = 120
    failures = {"euler": 0, "gradient": 0, "homogenize": 0, "closed form": 0}
    for _ in range(cases):
        n, d = rng.randint(1, 4), rng.randint(1, 6)
        p = _random_poly(rng, n, d, True)
        pt = _random_point(rng, n)
        lhs = sum((xi * g.evaluate_exact(pt) for xi, g in zip(pt, p.gradient())), Fraction(0))
        failures["euler"] += lhs != p.degree * p.evaluate_exact(pt) if not p.is_zero else 0

        V = _random_poly(rng, n, rng.randint(2, 6), True)
        f = VectorField.from_components([-g for g in V.gradient()])
        failures["gradient"] += lie_derivative(V, f) != -grad_inner(V, V)

        q = _random_poly(rng, n, d, False)
        h = homogenize(q, q.degree + rng.randint(0, 2))
        failures["homogenize"] += not (h.is_homogeneous and h.evaluate_exact(pt + [1]) == q.evaluate_exact(pt))

        theta = rng.uniform(-math.pi, math.pi)
        x, y = Polynomial.variables(2)
        got = lie_derivative(x ** 4 + y ** 4, family_nonmonotone(theta))
        want = -4 * math.sin(theta)
        coeffs = [float(got.coefficient(m)) for m in ((6, 0), (0, 6))]
        rel = max(abs(c - want) for c in coeffs) / max(abs(want), 1e-300)
        failures["closed form"] += len(got) != 2 or rel > 1e-12
    ok = not any(failures.values()) and time.perf_counter() - t0 <= 30
    report(5, ok, f"{cases} cases per identity, failures {failures}", t0)


def _drift_per_revolution(traj, V):
    vals = V(traj.states[:, 0], traj.states[:, 1])
    turns = max(abs(traj.winding) / (2 * math.pi), 1.0)
    return float(np.max(np.abs(vals / vals[0] - 1))) / turns


def test_dynamics_cross_checks(report):
    t0 = time.perf_counter()
    starts = sphere_points(2, 20, seed=11)
    lam = 1.5
    centers = [(family_nonmonotone(0.0), lambda X, Y: X ** 4 + Y ** 4),
               (family_rotated_center(0.0, lam), conserved_quantity_rotated(lam))]
    worst, periodic = 0.0, 0
    for f, V in centers:
        for x0 in starts:
            tr = integrate(f, x0)
            periodic += tr.verdict == PERIODIC
            worst = max(worst, _drift_per_revolution(tr, V))
    stable = [family_nonmonotone(0.05), family_rotated_center(0.2, lam)]
    converged = sum(integrate(f, x0).verdict == CONVERGED for f in stable for x0 in starts)
    ok = periodic == 40 and worst <= 1e-5 and converged == 40 and time.perf_counter() - t0 <= 120
    report(6, ok, f"periodic {periodic}/40 (worst drift {worst:.1e}/rev), converged {converged}/40", t0)


def _unit(n, i, j):
    E = np.zeros((n, n))
    E[i, j] = E[j, i] = 1.0 if i == j else 0.5
    return E


def test_sdp_suite(report):
    t0 = time.perf_counter()
    hand = [
        (SdpProblem.from_constraints(1, [(np.eye(1), 1.0)]), FEASIBLE, 1.0),
        (SdpProblem.from_constraints(1, [(np.eye(1), -1.0)]), INFEASIBLE, -1.0),
        (SdpProblem.from_constraints(2, [(_unit(2, 0, 0), 1), (_unit(2, 1, 1), 1), (_unit(2, 0, 1), 2)]),
         INFEASIBLE, -1.0),
    ]
    hand_ok = 0
    for prob, status, margin in hand:
        res = solve_margin(prob)
        hand_ok += res.status == status and abs(res.margin - margin) <= 1e-6
    rng = np.random.default_rng(99)
    feasible = 0
    for _ in range(100):
        n = int(rng.integers(1, 16))
        m = int(rng.integers(1, n * (n + 1) // 2 + 1))
        G = rng.standard_normal((n, n))
        X0 = G @ G.T
        cons = []
        for _ in range(m):
            B = rng.standard_normal((n, n))
            A = (B + B.T) / 2
            cons.append((A, float(np.sum(A * X0))))
        feasible += solve_margin(SdpProblem.from_constraints(n, cons)).status == FEASIBLE
    ok = hand_ok == 3 and feasible == 100 and time.perf_counter() - t0 <= 60
    report(7, ok, f"hand examples {hand_ok}/3, random feasible {feasible}/100", t0)
