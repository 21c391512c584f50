"""Sum-of-squares certificates through Gram matrices.

A form ``p`` of degree ``2m`` is sos iff ``p = b(x)^T Q b(x)`` for some psd
``Q``, where ``b`` lists every monomial of degree ``m``. Matching
coefficients gives one affine equality per monomial of ``p``; the psd
condition is handed to :func:`lyapcert.sdp.solve_margin`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .poly import Monomial, Number, Polynomial, monomials_of_degree, to_fraction
from .sdp import (FEASIBLE, INFEASIBLE, InconsistentConstraintsError, SdpProblem, SolverOptions,
                  min_eigenvalue, solve_margin)

CERTIFICATE = "certificate"
NOT_SOS = "not_sos"
INCONCLUSIVE = "inconclusive"

DEFAULT_PD_EPS = 1e-6
DEFAULT_RECON_TOL = 1e-6


class FormError(ValueError):
    """Input is not a homogeneous form of even degree."""


def monomial_basis(nvars: int, degree: int) -> list[Monomial]:
    """Monomials of exactly ``degree`` in graded-lex order."""
    return monomials_of_degree(nvars, degree)


@dataclass
class GramCertificate:
    basis: list[Monomial]
    gram: np.ndarray
    min_eig: float

    @classmethod
    def from_gram(cls, basis: Sequence[Monomial], gram: np.ndarray) -> GramCertificate:
        gram = np.asarray(gram, dtype=float)
        gram = (gram + gram.T) / 2
        return cls(list(basis), gram, min_eigenvalue(gram))

    @property
    def nvars(self) -> int:
        return len(self.basis[0])

    def reconstruct(self) -> Polynomial:
        """Exact expansion of ``b^T Q b`` with each entry of ``Q`` read as the
        rational equal to its binary value."""
        acc: dict[Monomial, Fraction] = {}
        n = len(self.basis)
        for i in range(n):
            for j in range(n):
                q = self.gram[i, j]
                if q == 0:
                    continue
                m = tuple(a + b for a, b in zip(self.basis[i], self.basis[j]))
                acc[m] = acc.get(m, Fraction(0)) + Fraction(float(q))
        return Polynomial(self.nvars, acc)

    def to_json(self, tolerances: dict | None = None) -> dict:
        return {
            "basis": [list(m) for m in self.basis],
            "gram": [[float(v) for v in row] for row in self.gram],
            "min_eig": float(self.min_eig),
            "tolerances": dict(tolerances or {}),
        }

    @classmethod
    def from_json(cls, data: dict) -> GramCertificate:
        basis = [tuple(int(e) for e in m) for m in data["basis"]]
        return cls.from_gram(basis, np.array(data["gram"], dtype=float))


@dataclass
class Validation:
    ok: bool
    reason: str = "ok"
    max_residual: float = 0.0
    min_eig: float = float("nan")

    def __bool__(self) -> bool:
        return self.ok


def validate_certificate(form: Polynomial, cert: GramCertificate,
                         recon_tol: float = DEFAULT_RECON_TOL, feas_tol: float = 1e-7) -> Validation:
    """Independent re-check of a Gram certificate against ``form``."""
    if not cert.basis or len(cert.basis[0]) != form.nvars:
        return Validation(False, "dimension_mismatch")
    if cert.gram.shape != (len(cert.basis),) * 2:
        return Validation(False, "shape_mismatch")
    if not np.all(np.isfinite(cert.gram)):
        return Validation(False, "non_finite")
    if not form.is_zero and 2 * sum(cert.basis[0]) != form.degree:
        return Validation(False, "degree_mismatch")
    if np.max(np.abs(cert.gram - cert.gram.T)) > feas_tol:
        return Validation(False, "not_symmetric")
    diff = cert.reconstruct() - form
    resid = float(max((abs(c) for _, c in diff.items()), default=Fraction(0)))
    lam = min_eigenvalue(cert.gram)
    if resid > recon_tol:
        return Validation(False, "reconstruction_mismatch", resid, lam)
    if lam < -feas_tol:
        return Validation(False, "not_psd", resid, lam)
    return Validation(True, "ok", resid, lam)


@dataclass
class SosVerdict:
    status: str
    certificate: GramCertificate | None = None
    margin: float = float("nan")
    message: str = ""

    @property
    def is_certificate(self) -> bool:
        return self.status == CERTIFICATE


# -- affine families --------------------------------------------------


@dataclass
class AffineForm:
    """``const + sum_i u_i * parts[i]`` with unknown scalars ``u``."""

    const: Polynomial
    parts: list[Polynomial]

    @property
    def nvars(self) -> int:
        return self.const.nvars

    @property
    def unknown_count(self) -> int:
        return len(self.parts)

    def map(self, fn: Callable[[Polynomial], Polynomial], const_fn: Callable | None = None) -> AffineForm:
        """Apply a linear map termwise (``const_fn`` overrides it for the constant)."""
        return AffineForm((const_fn or fn)(self.const), [fn(p) for p in self.parts])

    def __sub__(self, other: Polynomial) -> AffineForm:
        return AffineForm(self.const - other, list(self.parts))

    def __add__(self, other: Polynomial) -> AffineForm:
        return AffineForm(self.const + other, list(self.parts))

    def __neg__(self) -> AffineForm:
        return AffineForm(-self.const, [-p for p in self.parts])

    def instantiate(self, values: Sequence[Number]) -> Polynomial:
        if len(values) != len(self.parts):
            raise ValueError("wrong number of unknown values")
        out = self.const
        for v, p in zip(values, self.parts):
            out = out + p.scale(to_fraction(v))
        return out

    def degree_profile(self) -> tuple[int, bool]:
        polys = [p for p in [self.const, *self.parts] if not p.is_zero]
        degs = {sum(m) for p in polys for m, _ in p.items()}
        if not degs:
            return 0, True
        return max(degs), len(degs) == 1


@dataclass
class ParamFamily:
    """Forms ``sum_i u_i * members[i]`` spanned by fixed member forms."""

    members: list[Polynomial]
    base: Polynomial | None = None
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ValueError("family needs at least one member")
        n = self.members[0].nvars
        if self.base is None:
            self.base = Polynomial.zero(n)
        for i, p in enumerate(self.members):
            if p.is_zero:
                raise ValueError(f"unknown {i} does not appear in any term")

    @classmethod
    def all_forms(cls, nvars: int, degree: int) -> ParamFamily:
        mons = monomial_basis(nvars, degree)
        return cls([Polynomial.monomial(m) for m in mons])

    @property
    def nvars(self) -> int:
        return self.members[0].nvars

    @property
    def unknown_count(self) -> int:
        return len(self.members)

    def generic(self) -> AffineForm:
        return AffineForm(self.base, list(self.members))

    def instantiate(self, values: Sequence[Number]) -> Polynomial:
        return self.generic().instantiate(values)


# -- Gram systems -----------------------------------------------------


def _require_even_form(degree: int, homogeneous: bool) -> None:
    if not homogeneous:
        raise FormError("form must be homogeneous")
    if degree % 2:
        raise FormError(f"form has odd degree {degree}")


def _gram_layout(nvars: int, degree: int):
    basis = monomial_basis(nvars, degree // 2)
    pairs: dict[Monomial, list[tuple[int, int]]] = {}
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            pairs.setdefault(tuple(a + c for a, c in zip(bi, bj)), []).append((i, j))
    return basis, pairs


def _assemble(constraints: Sequence[AffineForm], nfree: int, normalize_first: bool):
    """Stack one Gram block per constraint into a single SdpProblem.

    Row for monomial ``a`` of constraint ``c``:
    ``sum_{b_i+b_j=a} Q_c[i,j] - sum_u coef(part_u, a) u = coef(const, a)``.
    """
    layouts = []
    rows: list[tuple[int, Monomial]] = []
    for c, form in enumerate(constraints):
        degree, homog = form.degree_profile()
        _require_even_form(degree, homog)
        basis, pairs = _gram_layout(form.nvars, degree)
        layouts.append((basis, pairs))
        for mono in pairs:
            rows.append((c, mono))
    m = len(rows) + (1 if normalize_first else 0)
    A = [np.zeros((m, len(basis), len(basis))) for basis, _ in layouts]
    F = np.zeros((m, nfree))
    b = np.zeros(m)
    for r, (c, mono) in enumerate(rows):
        _, pairs = layouts[c]
        for i, j in pairs[mono]:
            A[c][r, i, j] += 0.5
            A[c][r, j, i] += 0.5
        form = constraints[c]
        b[r] = float(form.const.coefficient(mono))
        for u, part in enumerate(form.parts):
            F[r, u] = -float(part.coefficient(mono))
    if normalize_first:
        A[0][-1] = np.eye(len(layouts[0][0]))
        b[-1] = float(len(layouts[0][0]))
    # monomials of a constraint outside its Gram support make the system unsolvable
    for c, form in enumerate(constraints):
        support = layouts[c][1]
        for p in [form.const, *form.parts]:
            for mono, _ in p.items():
                if mono not in support:
                    raise FormError(f"monomial {mono} not representable by the Gram basis")
    return layouts, SdpProblem(tuple(len(l[0]) for l in layouts), A, b, F)


def check_sos(form: Polynomial, opts: SolverOptions | None = None,
              recon_tol: float = DEFAULT_RECON_TOL) -> SosVerdict:
    """Decide whether a homogeneous even-degree form is a sum of squares."""
    opts = opts or SolverOptions()
    _require_even_form(form.degree, form.is_homogeneous)
    layouts, prob = _assemble([AffineForm(form, [])], 0, normalize_first=False)
    try:
        res = solve_margin(prob, opts)
    except InconsistentConstraintsError as exc:
        return SosVerdict(NOT_SOS, margin=-math.inf, message=str(exc))
    if res.status == FEASIBLE:
        cert = GramCertificate.from_gram(layouts[0][0], res.blocks[0])
        check = validate_certificate(form, cert, recon_tol, opts.feas_tol)
        if check:
            return SosVerdict(CERTIFICATE, cert, res.margin)
        return SosVerdict(INCONCLUSIVE, cert, res.margin, f"certificate rejected: {check.reason}")
    if res.status == INFEASIBLE:
        return SosVerdict(NOT_SOS, margin=res.margin)
    return SosVerdict(INCONCLUSIVE, margin=res.margin, message=res.message)


def check_positive_definite(form: Polynomial, eps: float = DEFAULT_PD_EPS,
                            opts: SolverOptions | None = None,
                            recon_tol: float = DEFAULT_RECON_TOL) -> SosVerdict:
    """Sufficient test for strict positivity: is ``form - e * |x|^(2m)`` sos?

    ``e`` is ``eps`` times the largest absolute coefficient of ``form``. A
    certificate proves ``form(x) >= e |x|^(2m)``; any other verdict proves
    nothing about positivity.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    _require_even_form(form.degree, form.is_homogeneous)
    if form.is_zero:
        return SosVerdict(NOT_SOS, margin=-math.inf, message="zero form")
    shift = Polynomial.norm_squared_power(form.nvars, form.degree // 2).scale(
        to_fraction(eps) * form.max_abs_coefficient())
    return check_sos(form - shift, opts, recon_tol)


@dataclass
class FamilySearch:
    status: str  # feasible | infeasible | numerical_failure
    coefficients: list[float] | None = None
    forms: list[Polynomial] = field(default_factory=list)
    certificates: list[GramCertificate] = field(default_factory=list)
    margin: float = float("nan")
    message: str = ""

    @property
    def found(self) -> bool:
        return self.status == FEASIBLE


def find_in_family(family: ParamFamily, sos_constraints: Sequence[AffineForm],
                   pd_eps: float = DEFAULT_PD_EPS, opts: SolverOptions | None = None,
                   normalize: bool = True, recon_tol: float = DEFAULT_RECON_TOL) -> FamilySearch:
    """Search the family for unknowns making every constraint strictly sos.

    Each constraint ``c`` (affine in the unknowns) is required to satisfy
    ``c - pd_eps * |x|^deg(c)`` sos. With ``normalize`` the trace of the first
    Gram block is pinned to its size, which removes the scale invariance of
    cone-shaped families. A feasible result carries the instantiated
    constraint forms and one validated certificate per constraint.
    """
    opts = opts or SolverOptions()
    if not sos_constraints:
        raise ValueError("need at least one constraint")
    shifted = []
    for c in sos_constraints:
        if c.unknown_count != family.unknown_count:
            raise ValueError("constraint is not expressed in the family's unknowns")
        degree, homog = c.degree_profile()
        _require_even_form(degree, homog)
        if pd_eps:
            c = c - Polynomial.norm_squared_power(c.nvars, degree // 2).scale(to_fraction(pd_eps))
        shifted.append(c)
    layouts, prob = _assemble(shifted, family.unknown_count, normalize_first=normalize)
    try:
        res = solve_margin(prob, opts)
    except InconsistentConstraintsError as exc:
        return FamilySearch(INFEASIBLE, margin=-math.inf, message=str(exc))
    if res.status != FEASIBLE:
        return FamilySearch(res.status, margin=res.margin, message=res.message)
    values = [float(v) for v in res.free]
    forms = [c.instantiate(values) for c in shifted]
    certs = []
    for (basis, _), block, form in zip(layouts, res.blocks, forms):
        cert = GramCertificate.from_gram(basis, block)
        check = validate_certificate(form, cert, recon_tol, opts.feas_tol)
        if not check:
            return FamilySearch("numerical_failure", values, forms, margin=res.margin,
                                message=f"certificate rejected: {check.reason}")
        certs.append(cert)
    return FamilySearch(FEASIBLE, values, forms, certs, res.margin)
