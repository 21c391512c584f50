from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapcert.poly import (DimensionError, Polynomial, add, degree_info, evaluate, grad_inner,
                           gradient, homogenize, monomials_of_degree, mul)

from conftest import perturbed_motzkin, forms, motzkin, points, polynomials, rationals

x, y = Polynomial.variables(2)


class TestEvaluate:
    def test_quartic_at_ones(self):
        assert evaluate(x ** 4 + y ** 4, [1, 1]) == 2

    def test_perturbed_motzkin_at_ones(self):
        assert perturbed_motzkin().evaluate_exact([1, 1, 1]) == Fraction(27, 250)
        assert evaluate(perturbed_motzkin(), [1, 1, 1]) == pytest.approx(0.108, abs=0)

    @given(forms(degree=4))
    def test_form_vanishes_at_origin(self, p):
        assert evaluate(p, [0] * p.nvars) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            evaluate(x + y, [1.0])

    def test_nonfinite_point(self):
        with pytest.raises(ValueError):
            evaluate(x, [float("nan"), 0.0])

    def test_rounded_once(self):
        # 0.1 + 0.2 accumulated exactly then rounded
        p = Polynomial(1, {(1,): "1/10", (0,): "1/5"})
        assert evaluate(p, [1]) == 0.3

    def test_evaluate_many_matches_exact(self):
        V = perturbed_motzkin()
        pts = np.array([[0.3, -1.2, 0.5], [1.0, 2.0, -3.0]])
        got = V.evaluate_many(pts)
        for row, g in zip(pts, got):
            assert g == pytest.approx(evaluate(V, row), rel=1e-13)


class TestArithmetic:
    def test_cancellation(self):
        s = add(x, -x)
        assert s.is_zero and len(s) == 0

    def test_difference_of_squares(self):
        assert mul(x + y, x - y) == x ** 2 - y ** 2

    def test_cube_of_r2_binomial_pattern(self):
        r = (x * x + y * y) ** 3
        assert [r.coefficient((6 - 2 * k, 2 * k)) for k in range(4)] == [1, 3, 3, 1]
        assert len(r) == 4
        r3 = Polynomial.norm_squared_power(3, 3)
        assert len(r3) == 10 and r3.coefficient((2, 2, 2)) == 6

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            add(x, Polynomial.variable(3, 0))
        with pytest.raises(DimensionError):
            mul(x, Polynomial.variable(3, 0))

    def test_no_zero_terms_stored(self):
        p = Polynomial(2, {(1, 0): 0, (0, 1): 2})
        assert list(p.terms) == [(0, 1)]

    def test_grlex_order(self):
        p = y + x + x * y + 1 + x ** 2
        assert list(p.terms) == [(2, 0), (1, 1), (1, 0), (0, 1), (0, 0)]
        assert monomials_of_degree(2, 2) == [(2, 0), (1, 1), (0, 2)]

    @given(polynomials(nvars=2), polynomials(nvars=2), polynomials(nvars=2))
    @settings(max_examples=100)
    def test_ring_laws(self, p, q, r):
        assert add(p, q) == add(q, p)
        assert mul(p, q) == mul(q, p)
        assert add(add(p, q), r) == add(p, add(q, r))
        assert mul(mul(p, q), r) == mul(p, mul(q, r))
        assert mul(p, add(q, r)) == add(mul(p, q), mul(p, r))

    @given(polynomials(nvars=2), polynomials(nvars=2))
    def test_degree_of_product(self, p, q):
        if not p.is_zero and not q.is_zero:
            assert mul(p, q).degree == p.degree + q.degree

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            x ** -1


class TestCalculus:
    def test_power_rule(self):
        assert gradient(x ** 4 + y ** 4) == [4 * x ** 3, 4 * y ** 3]

    def test_constant(self):
        assert all(g.is_zero for g in gradient(Polynomial.constant(2, 7)))

    def test_perturbed_partial(self):
        d3 = gradient(perturbed_motzkin())[2]
        assert d3.evaluate_exact([1, 1, 1]) == Fraction(216, 1000)

    def test_grad_inner_r2(self):
        r2 = x * x + y * y
        assert grad_inner(r2, r2) == 4 * x * x + 4 * y * y

    @given(forms(degree=3))
    @settings(max_examples=100)
    def test_grad_inner_is_norm_squared(self, p):
        g = gradient(p)
        assert grad_inner(p, p) == sum((gi * gi for gi in g), Polynomial.zero(p.nvars))

    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(
        forms(nvars=n), points(n))))
    @settings(max_examples=150)
    def test_euler_identity(self, case):
        p, pt = case
        d = p.degree
        lhs = sum((xi * gi.evaluate_exact(pt) for xi, gi in zip(pt, gradient(p))), Fraction(0))
        assert lhs == d * p.evaluate_exact(pt)

    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(forms(nvars=n, degree=4), forms(nvars=n, degree=3))))
    def test_grad_inner_degree(self, pq):
        p, q = pq
        r = grad_inner(p, q)
        assert r.is_zero or (r.is_homogeneous and r.degree == 5)


class TestHomogenize:
    def test_reznick_example(self):
        x1, x2 = Polynomial.variables(2)
        h = homogenize(x1 ** 2 + (1 - x1 * x2) ** 2, 4)
        X1, X2, Y = Polynomial.variables(3)
        assert h == X1 ** 2 * Y ** 2 + (Y ** 2 - X1 * X2) ** 2
        assert h.evaluate_exact([1, 0, 0]) == 0 and h.evaluate_exact([0, 1, 0]) == 0

    def test_form_to_own_degree(self):
        h = homogenize(x ** 4 + y ** 4, 4)
        assert h.nvars == 3 and all(m[2] == 0 for m in h.terms)

    def test_target_too_low(self):
        with pytest.raises(ValueError):
            homogenize(x ** 3, 2)

    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(polynomials(nvars=n), points(n),
                                                            st.integers(0, 2))))
    @settings(max_examples=150)
    def test_round_trip(self, case):
        p, pt, extra = case
        h = homogenize(p, p.degree + extra)
        assert h.evaluate_exact(list(pt) + [1]) == p.evaluate_exact(pt)
        assert h.is_homogeneous

    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(forms(nvars=n), points(n), rationals)))
    @settings(max_examples=150)
    def test_scaling(self, case):
        p, pt, lam = case
        scaled = [lam * v for v in pt]
        assert p.evaluate_exact(scaled) == lam ** p.degree * p.evaluate_exact(pt)


class TestDegreeInfo:
    def test_cases(self):
        assert degree_info(x ** 4 + y ** 4) == (4, True)
        assert degree_info(perturbed_motzkin()) == (6, True)
        assert degree_info(motzkin()) == (6, True)
        assert degree_info(x ** 4 + y) == (4, False)

    def test_zero(self):
        z = Polynomial.zero(2)
        assert degree_info(z) == (0, True) and z.is_zero

    def test_to_string(self):
        assert (x ** 2 - 3 * x * y + 1).to_string() == "x1^2 - 3*x1*x2 + 1"
        assert Polynomial(1, {(1,): "1/3"}).to_string(digits=3) == "0.333*x1"
