import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapcert.sdp import (FEASIBLE, INFEASIBLE, InconsistentConstraintsError, SdpProblem,
                          SolverOptions, min_eigenvalue, solve_margin)


def unit(n, i, j):
    E = np.zeros((n, n))
    E[i, j] = E[j, i] = 1.0 if i == j else 0.5
    return E


def random_feasible(rng, n, m, rank=None):
    G = rng.standard_normal((n, rank or n))
    X0 = G @ G.T
    A = []
    for _ in range(m):
        B = rng.standard_normal((n, n))
        A.append((B + B.T) / 2)
    return SdpProblem.from_constraints(n, [(a, float(np.sum(a * X0))) for a in A])


def cvxopt_margin(prob, cap):
    """Optimal margin (with ``t <= cap``) from an independent solver."""
    cvxopt = pytest.importorskip("cvxopt")
    n = prob.dim
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    nv = len(idx) + 1
    Aeq = np.zeros((prob.nconstraints, nv))
    for k in range(prob.nconstraints):
        for c, (i, j) in enumerate(idx):
            Aeq[k, c] = prob.A[0][k, i, j] * (1 if i == j else 2)
    G = np.zeros((n * n, nv))
    for c, (i, j) in enumerate(idx):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        G[:, c] = -E.reshape(-1, order="F")
    G[:, -1] = np.eye(n).reshape(-1, order="F")
    cost = np.zeros(nv)
    cost[-1] = -1.0
    cvxopt.solvers.options["show_progress"] = False
    Gl = np.zeros((1, nv))
    Gl[0, -1] = 1.0
    sol = cvxopt.solvers.sdp(cvxopt.matrix(cost), Gl=cvxopt.matrix(Gl), hl=cvxopt.matrix([float(cap)]),
                             Gs=[cvxopt.matrix(G)], hs=[cvxopt.matrix(np.zeros((n, n)))],
                             A=cvxopt.matrix(Aeq), b=cvxopt.matrix(prob.b))
    assert sol["status"] == "optimal"
    return float(sol["x"][nv - 1])


class TestHandExamples:
    def test_scalar_feasible(self):
        res = solve_margin(SdpProblem.from_constraints(1, [(np.eye(1), 1.0)]))
        assert res.status == FEASIBLE
        assert res.margin == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(res.witness, [[1.0]], atol=1e-6)

    def test_scalar_infeasible(self):
        res = solve_margin(SdpProblem.from_constraints(1, [(np.eye(1), -1.0)]))
        assert res.status == INFEASIBLE
        assert res.margin == pytest.approx(-1.0, abs=1e-6)

    def test_two_by_two_indefinite(self):
        prob = SdpProblem.from_constraints(2, [(unit(2, 0, 0), 1), (unit(2, 1, 1), 1), (unit(2, 0, 1), 2)])
        res = solve_margin(prob)
        assert res.status == INFEASIBLE
        assert res.margin == pytest.approx(-1.0, abs=1e-6)


class TestMinEigenvalue:
    def test_values(self):
        assert min_eigenvalue(np.eye(3)) == pytest.approx(1.0)
        assert min_eigenvalue(np.array([[1.0, 2.0], [2.0, 1.0]])) == pytest.approx(-1.0)
        assert min_eigenvalue(np.zeros((2, 2))) == 0.0

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            min_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestValidation:
    def test_empty_constraints(self):
        with pytest.raises(ValueError):
            SdpProblem.from_constraints(2, [])

    def test_nonsymmetric_constraint(self):
        with pytest.raises(ValueError):
            SdpProblem.from_constraints(2, [(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)])

    def test_options(self):
        with pytest.raises(ValueError):
            SolverOptions(feas_tol=0)
        with pytest.raises(ValueError):
            SolverOptions(max_iter=0)

    def test_dependent_rows_dropped(self, caplog):
        prob = SdpProblem.from_constraints(2, [(unit(2, 0, 0), 1), (2 * unit(2, 0, 0), 2), (unit(2, 1, 1), 1)])
        res = solve_margin(prob)
        assert res.status == FEASIBLE
        assert "dependent" in caplog.text

    def test_inconsistent_rows(self):
        prob = SdpProblem.from_constraints(2, [(unit(2, 0, 0), 1), (2 * unit(2, 0, 0), 3)])
        with pytest.raises(InconsistentConstraintsError):
            solve_margin(prob)

    def test_debug_dump(self, tmp_path):
        path = tmp_path / "iters.json"
        solve_margin(SdpProblem.from_constraints(1, [(np.eye(1), 1.0)]), SolverOptions(debug_path=str(path)))
        trace = json.loads(path.read_text())
        assert trace and {"pobj", "dobj", "mu"} <= set(trace[0])


class TestFreeVariables:
    def test_free_shift(self):
        # x11 + u = 0, x22 = 1, x12 = 0  -> feasible with u = -x11
        A = np.array([unit(2, 0, 0), unit(2, 1, 1), unit(2, 0, 1)])
        prob = SdpProblem((2,), [A], [0.0, 1.0, 0.0], F=np.array([[1.0], [0.0], [0.0]]))
        res = solve_margin(prob)
        assert res.status == FEASIBLE
        assert np.max(np.abs(prob.residuals(res.blocks, res.free))) < 1e-7

    def test_two_blocks(self):
        A1 = np.array([[[1.0]], [[0.0]]])
        A2 = np.array([[[0.0]], [[1.0]]])
        prob = SdpProblem((1, 1), [A1, A2], [1.0, -1.0])
        assert solve_margin(prob).status == INFEASIBLE


class TestRandom:
    @pytest.mark.parametrize("seed", range(20))
    def test_feasible_by_construction(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 16))
        m = int(rng.integers(1, min(n * (n + 1) // 2, 30) + 1))
        res = solve_margin(random_feasible(rng, n, m, rank=int(rng.integers(1, n + 1))))
        assert res.status == FEASIBLE, res.message

    @pytest.mark.parametrize("seed", range(8))
    def test_margin_matches_cvxopt(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n * (n + 1) // 2))
        prob = random_feasible(rng, n, m, rank=1)
        # shift b so that some instances are infeasible
        prob.b = prob.b + rng.standard_normal(m)
        ours = solve_margin(prob, SolverOptions(margin_cap=5.0))
        assert ours.margin == pytest.approx(cvxopt_margin(prob, 5.0), abs=1e-5, rel=1e-5)

    @given(st.integers(0, 10 ** 6), st.integers(2, 6))
    @settings(max_examples=30, deadline=None)
    def test_margin_monotone_in_constraints(self, seed, n):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, n * (n + 1) // 2 + 1))
        prob = random_feasible(rng, n, m)
        prob.b = prob.b + rng.standard_normal(m)
        sub = SdpProblem((n,), [prob.A[0][:-1]], prob.b[:-1])
        opts = SolverOptions(margin_cap=100.0)
        assert solve_margin(prob, opts).margin <= solve_margin(sub, opts).margin + 1e-6

    @given(st.integers(0, 10 ** 6), st.floats(1e-3, 1e3))
    @settings(max_examples=30, deadline=None)
    def test_scale_covariance(self, seed, scale):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 6))
        prob = random_feasible(rng, n, int(rng.integers(1, n * (n + 1) // 2 + 1)))
        if rng.random() < 0.5:
            prob.b = prob.b - 3 * np.abs(rng.standard_normal(len(prob.b)))
        scaled = SdpProblem((n,), [prob.A[0] * scale], prob.b * scale)
        assert solve_margin(prob).status == solve_margin(scaled).status

    def test_unbounded_margin_is_capped(self):
        # x11 - x22 = 0 leaves t unbounded above
        res = solve_margin(SdpProblem.from_constraints(2, [(unit(2, 0, 0) - unit(2, 1, 1), 0.0)]))
        assert res.status == FEASIBLE and res.margin == pytest.approx(10.0, rel=1e-6)

    def test_deterministic(self):
        prob = random_feasible(np.random.default_rng(7), 6, 10)
        a, b = solve_margin(prob), solve_margin(prob)
        assert a.margin == b.margin and np.array_equal(a.witness, b.witness)
