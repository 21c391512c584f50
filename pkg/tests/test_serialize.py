import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from lyapcert.dynamics import family_rotated_center
from lyapcert.poly import Polynomial
from lyapcert.serialize import (certified_form_json, coef_to_str, dumps, field_from_json,
                                field_to_json, poly_from_json, poly_to_json, verify_bundle)
from lyapcert.sos import check_sos

from conftest import polynomials

x, y = Polynomial.variables(2)


def test_coefficient_strings():
    assert coef_to_str(Fraction(-27, 250)) == "-27/250"
    assert coef_to_str(Fraction(3)) == "3"


@given(polynomials())
@settings(max_examples=100, deadline=None)
def test_polynomial_round_trip(p):
    assert poly_from_json(json.loads(dumps(poly_to_json(p)))) == p


def test_repeated_exponents_are_summed():
    data = {"nvars": 2, "terms": [{"exps": [1, 0], "coef": "1/2"}, {"exps": [1, 0], "coef": "1/2"}]}
    assert poly_from_json(data) == x


@pytest.mark.parametrize("data", [{}, {"nvars": 2}, {"nvars": 2, "terms": [{"exps": [1, 0]}]},
                                  {"nvars": 2, "terms": [{"exps": [1, 0], "coef": "1/0"}]}])
def test_malformed_polynomial(data):
    with pytest.raises(ValueError):
        poly_from_json(data)


def test_field_round_trip():
    f = family_rotated_center(0.3, 1.5)
    g = field_from_json(json.loads(dumps(field_to_json(f))))
    assert g.components == f.components and g.declared_degree == 3


def test_field_nvars_mismatch():
    data = field_to_json(family_rotated_center(0.3, 1.5))
    data["nvars"] = 3
    with pytest.raises(ValueError):
        field_from_json(data)


def test_bundle_verification_catches_tampering():
    p = (x * x + x * y) ** 2 + y ** 4
    cert = check_sos(p).certificate
    bundle = {"certificates": [certified_form_json("p", p, cert, {"recon_tol": 1e-6})]}
    assert verify_bundle(json.loads(dumps(bundle))) == [("p", True, "ok")]
    bundle["certificates"][0]["form"] = poly_to_json(p + x ** 4)
    name, ok, reason = verify_bundle(bundle)[0]
    assert not ok and reason == "reconstruction_mismatch"


def test_float_output_is_stable():
    data = {"v": float(np.float64(0.1) + 0.2)}
    assert dumps(data) == dumps(json.loads(dumps(data)))
