from fractions import Fraction

import pytest
from hypothesis import strategies as st

from lyapcert.poly import Polynomial


def motzkin():
    x1, x2, x3 = Polynomial.variables(3)
    return x1 ** 4 * x2 ** 2 + x1 ** 2 * x2 ** 4 - 3 * x1 ** 2 * x2 ** 2 * x3 ** 2 + x3 ** 6


def perturbed_motzkin():
    return motzkin() + Polynomial.norm_squared_power(3, 3).scale(Fraction(1, 250))


def reference_W():
    """W as printed for Example 1, coefficients entered verbatim."""
    x1, x2, x3 = Polynomial.variables(3)
    return (9 * x2 ** 4 + 9 * x1 ** 4 - 6 * x1 ** 2 * x2 ** 2 + 6 * x1 ** 2 * x3 ** 2
            + 6 * x2 ** 2 * x3 ** 2 + 3 * x3 ** 4 - x1 ** 3 * x2 - x1 * x2 ** 3 - x1 ** 3 * x3
            - 3 * x1 ** 2 * x2 * x3 - 3 * x1 * x2 ** 2 * x3 - x2 ** 3 * x3 - 4 * x1 * x2 * x3 ** 2
            - x1 * x3 ** 3 - x2 * x3 ** 3)


@pytest.fixture
def perturbed():
    return perturbed_motzkin()


rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def polynomials(draw, nvars=None, max_degree=4, max_terms=6, homogeneous_degree=None):
    n = draw(st.integers(1, 3)) if nvars is None else nvars
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        if homogeneous_degree is None:
            exps = tuple(draw(st.lists(st.integers(0, max_degree), min_size=n, max_size=n)))
            if sum(exps) > max_degree:
                continue
        else:
            cuts = sorted(draw(st.lists(st.integers(0, homogeneous_degree), min_size=n - 1,
                                        max_size=n - 1)))
            bounds = [0] + cuts + [homogeneous_degree]
            exps = tuple(bounds[i + 1] - bounds[i] for i in range(n))
        terms[exps] = draw(rationals)
    return Polynomial(n, terms)


@st.composite
def forms(draw, nvars=None, degree=None):
    n = draw(st.integers(1, 3)) if nvars is None else nvars
    d = draw(st.integers(0, 5)) if degree is None else degree
    return draw(polynomials(nvars=n, homogeneous_degree=d))


def points(n):
    return st.lists(rationals, min_size=n, max_size=n)
