"""JSON formats for polynomials, vector fields, certificates and reports.

Coefficients are written as exact strings (``"3"``, ``"-27/250"``); floats
use Python's shortest round-trip ``repr`` so outputs are byte-stable.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .dynamics import VectorField
from .poly import Polynomial
from .sos import GramCertificate, validate_certificate


def coef_to_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def poly_to_json(p: Polynomial) -> dict:
    return {"nvars": p.nvars,
            "terms": [{"exps": list(m), "coef": coef_to_str(c)} for m, c in p.items()]}


def poly_from_json(data: dict) -> Polynomial:
    try:
        nvars = int(data["nvars"])
        terms = {}
        for t in data["terms"]:
            exps = tuple(int(e) for e in t["exps"])
            terms[exps] = terms.get(exps, Fraction(0)) + Fraction(str(t["coef"]))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed polynomial JSON: {exc}") from None
    return Polynomial(nvars, terms)


def field_to_json(f: VectorField) -> dict:
    return {"nvars": f.nvars, "declared_degree": f.declared_degree,
            "is_homogeneous": f.is_homogeneous,
            "components": [poly_to_json(c) for c in f.components]}


def field_from_json(data: dict) -> VectorField:
    try:
        comps = [poly_from_json(c) for c in data["components"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed vector field JSON: {exc}") from None
    f = VectorField.from_components(comps)
    if "nvars" in data and int(data["nvars"]) != f.nvars:
        raise ValueError("nvars does not match the number of components")
    return f


def certified_form_json(name: str, form: Polynomial, cert: GramCertificate, tolerances: dict) -> dict:
    return {"name": name, "form": poly_to_json(form), "certificate": cert.to_json(tolerances)}


def verify_bundle(data: dict) -> list[tuple[str, bool, str]]:
    """Re-validate every ``{"form", "certificate"}`` entry in a bundle."""
    out = []
    for entry in data.get("certificates", []):
        form = poly_from_json(entry["form"])
        cert = GramCertificate.from_json(entry["certificate"])
        tol = entry["certificate"].get("tolerances", {})
        check = validate_certificate(form, cert, tol.get("recon_tol", 1e-6), tol.get("feas_tol", 1e-7))
        out.append((entry.get("name", "?"), check.ok, check.reason))
    return out


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def write_json(path, data) -> None:
    Path(path).write_text(dumps(data))


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
