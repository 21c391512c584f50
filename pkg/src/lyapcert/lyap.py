"""Homogeneous polynomial Lyapunov functions.

Searches, the gradient-field positivity test, numeric cross-checks on the
unit sphere and the group averaging used to shrink search families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import VectorField, sphere_points
from .poly import DimensionError, Polynomial, grad_inner, monomials_of_degree
from .sdp import FEASIBLE, INFEASIBLE, SolverOptions
from .sos import DEFAULT_PD_EPS, FamilySearch, GramCertificate, ParamFamily, find_in_family

FOUND = "found"
INFEASIBLE_AT_DEGREE = "infeasible_at_degree"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SymmetrySpec:
    """Cyclic group generated by a signed permutation matrix."""

    generator: tuple[tuple[int, ...], ...]
    order: int

    def __post_init__(self):
        g = tuple(tuple(int(v) for v in row) for row in self.generator)
        object.__setattr__(self, "generator", g)
        n = len(g)
        if any(len(row) != n for row in g):
            raise ValueError("generator must be square")
        for row in g:
            if sorted(abs(v) for v in row) != [0] * (n - 1) + [1]:
                raise ValueError("generator must be a signed permutation matrix")
        if self.order < 1:
            raise ValueError("order must be positive")
        G = np.array(g)
        if not np.array_equal(np.linalg.matrix_power(G, self.order), np.eye(n, dtype=int)):
            raise ValueError(f"generator to the power {self.order} is not the identity")

    @classmethod
    def quarter_turn(cls) -> SymmetrySpec:
        """``(x, y) -> (y, -x)``, order 4."""
        return cls(((0, 1), (-1, 0)), 4)

    @property
    def nvars(self) -> int:
        return len(self.generator)

    def elements(self) -> list[np.ndarray]:
        G = np.array(self.generator)
        return [np.linalg.matrix_power(G, k) for k in range(self.order)]


def symmetrize(V: Polynomial, sym: SymmetrySpec) -> Polynomial:
    """Group average ``(1/|G|) sum_g V(g x)``; invariant forms are fixed points."""
    if sym.nvars != V.nvars:
        raise DimensionError("generator size does not match the form")
    total = Polynomial.zero(V.nvars)
    for g in sym.elements():
        total = total + V.linear_substitute(g.tolist())
    return total.scale(Fraction(1, sym.order))


def is_equivariant(f: VectorField, sym: SymmetrySpec) -> bool:
    """``f(g x) == g f(x)`` exactly for the generator ``g``."""
    if sym.nvars != f.nvars:
        return False
    g = [list(row) for row in sym.generator]
    lhs = f.substitute(g).components
    for i in range(f.nvars):
        rhs = Polynomial.zero(f.nvars)
        for j in range(f.nvars):
            if g[i][j]:
                rhs = rhs + f.components[j].scale(g[i][j])
        if lhs[i] != rhs:
            return False
    return True


def invariant_family(nvars: int, degree: int, sym: SymmetrySpec) -> ParamFamily:
    """Basis of the forms of ``degree`` fixed by ``sym``: one averaged
    monomial per orbit."""
    members, seen = [], set()
    for m in monomials_of_degree(nvars, degree):
        p = symmetrize(Polynomial.monomial(m), sym)
        if p.is_zero:
            continue
        lead = next(iter(p.items()))[1]
        p = p.scale(1 / lead)
        if p not in seen:
            seen.add(p)
            members.append(p)
    return ParamFamily(members)


def lie_derivative(V: Polynomial, f: VectorField) -> Polynomial:
    """``<grad V, f>``."""
    if V.nvars != f.nvars:
        raise DimensionError("form and field live in different dimensions")
    total = Polynomial.zero(V.nvars)
    for dV, fi in zip(V.gradient(), f.components):
        if not dV.is_zero and not fi.is_zero:
            total = total + dV * fi
    return total


@dataclass
class LyapunovOutcome:
    status: str
    V: Polynomial | None = None
    cert_V: GramCertificate | None = None
    cert_Vdot: GramCertificate | None = None
    eps: float = DEFAULT_PD_EPS
    degree: int = 0
    margin: float = float("nan")
    message: str = ""
    certified_forms: list[Polynomial] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.status == FOUND


def _search_status(res: FamilySearch, decisive_negative: bool) -> str:
    if res.status == FEASIBLE:
        return FOUND
    if res.status == INFEASIBLE and decisive_negative:
        return INFEASIBLE_AT_DEGREE
    return INCONCLUSIVE


def find_lyapunov(f: VectorField, degree: int, eps: float = DEFAULT_PD_EPS,
                  sym: SymmetrySpec | None = None, opts: SolverOptions | None = None) -> LyapunovOutcome:
    """Search the forms of ``degree`` for ``V`` with ``V - eps|x|^d`` and
    ``-Vdot - eps|x|^(d+k-1)`` both sos.

    The scale of ``V`` is fixed by pinning the trace of its Gram matrix.
    ``infeasible_at_degree`` is only reported for planar fields, where
    nonnegative forms are exactly the sos forms; a symmetric search must also
    use a symmetry of the field for that verdict to stand.
    """
    if degree < 2 or degree % 2:
        raise ValueError("Lyapunov candidates must have even degree >= 2")
    if not f.is_homogeneous:
        raise ValueError("field must be homogeneous")
    if sym is not None:
        family = invariant_family(f.nvars, degree, sym)
    else:
        family = ParamFamily.all_forms(f.nvars, degree)
    V = family.generic()
    Vdot = V.map(lambda p: lie_derivative(p, f))
    res = find_in_family(family, [V, -Vdot], eps, opts)
    exact = f.nvars == 2 and (sym is None or is_equivariant(f, sym))
    out = LyapunovOutcome(_search_status(res, exact), eps=eps, degree=degree,
                          margin=res.margin, message=res.message)
    if res.found:
        out.V = family.instantiate(res.coefficients)
        out.cert_V, out.cert_Vdot = res.certificates
        out.certified_forms = res.forms
    elif res.status == INFEASIBLE and not exact:
        out.message = "sos search infeasible; not a proof of non-existence here"
    return out


@dataclass
class PositivityProof:
    status: str
    W: Polynomial | None = None
    cert_W: GramCertificate | None = None
    cert_grad: GramCertificate | None = None
    margin: float = float("nan")
    eps: float = DEFAULT_PD_EPS
    certified_forms: list[Polynomial] = field(default_factory=list)
    message: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND


def certify_positivity_gradient(V: Polynomial, w_degree: int, eps: float = DEFAULT_PD_EPS,
                                opts: SolverOptions | None = None) -> PositivityProof:
    """Look for a form ``W`` of ``w_degree`` with ``W`` and ``<grad W, grad V>``
    both strictly sos. Success proves ``V`` positive definite: ``W`` is then
    a Lyapunov function for ``xdot = -grad V``.

    A failure is reported as ``infeasible`` (decisive sos infeasibility at this
    degree) or ``inconclusive``; neither says anything about ``V``.
    """
    if not V.is_homogeneous or V.is_zero:
        raise ValueError("V must be a nonzero form")
    if w_degree < 2 or w_degree % 2:
        raise ValueError("W must have even degree >= 2")
    family = ParamFamily.all_forms(V.nvars, w_degree)
    W = family.generic()
    G = W.map(lambda p: grad_inner(p, V))
    res = find_in_family(family, [W, G], eps, opts)
    if not res.found:
        status = "infeasible" if res.status == INFEASIBLE else INCONCLUSIVE
        return PositivityProof(status, margin=res.margin, eps=eps, message=res.message)
    return PositivityProof(FOUND, family.instantiate(res.coefficients), res.certificates[0],
                           res.certificates[1], res.margin, eps, res.forms)


@dataclass
class NumericReport:
    samples: int
    min_V: float
    max_Vdot: float
    argmin_V: list[float]
    argmax_Vdot: list[float]

    @property
    def positive(self) -> bool:
        return self.min_V > 0

    @property
    def decreasing(self) -> bool:
        return self.max_Vdot < 0

    @property
    def ok(self) -> bool:
        return self.positive and self.decreasing

    def to_json(self) -> dict:
        return {"samples": self.samples, "min_V": self.min_V, "max_Vdot": self.max_Vdot,
                "argmin_V": self.argmin_V, "argmax_Vdot": self.argmax_Vdot, "ok": self.ok}


def verify_lyapunov_numeric(V: Polynomial, f: VectorField, samples: int = 10_000,
                            seed: int | None = 0, points: np.ndarray | None = None) -> NumericReport:
    """Sample the unit sphere and report ``min V`` and ``max Vdot``.

    Both are homogeneous, so their signs on the sphere decide them everywhere
    (up to sampling density).
    """
    if V.nvars != f.nvars:
        raise DimensionError("form and field live in different dimensions")
    pts = sphere_points(V.nvars, samples, seed) if points is None else np.asarray(points, dtype=float)
    if V.nvars == 2 and points is None:
        # planar: add an even angular grid so thin negative sectors are not missed
        ang = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
        pts = np.vstack([pts, np.column_stack([np.cos(ang), np.sin(ang)])])
    vals = V.evaluate_many(pts)
    vdot = lie_derivative(V, f).evaluate_many(pts)
    i, j = int(np.argmin(vals)), int(np.argmax(vdot))
    return NumericReport(len(pts), float(vals[i]), float(vdot[j]), pts[i].tolist(), pts[j].tolist())


@dataclass
class SweepProbe:
    theta: float
    status: str
    margin: float


@dataclass
class SweepReport:
    degree: int
    lo: float
    hi: float
    resolution: float
    probes: list[SweepProbe]
    bracket: tuple[float, float] | None
    halted: bool = False
    message: str = ""

    def to_json(self) -> dict:
        return {
            "degree": self.degree, "lo": self.lo, "hi": self.hi, "resolution": self.resolution,
            "bracket": list(self.bracket) if self.bracket else None,
            "halted": self.halted, "message": self.message,
            "probes": [{"theta": p.theta, "status": p.status, "margin": p.margin} for p in self.probes],
        }


def theta_sweep(make_field, degree: int, lo: float, hi: float, resolution: float,
                eps: float = DEFAULT_PD_EPS, sym: SymmetrySpec | None = None,
                coarse: int = 8, opts: SolverOptions | None = None, executor=None) -> SweepReport:
    """Locate where ``find_lyapunov(make_field(theta), degree)`` changes verdict.

    A coarse scan of ``coarse + 1`` evenly spaced probes (evaluated through
    ``executor.map`` when given) finds the first adjacent pair with differing
    decisive verdicts; that bracket is then bisected sequentially down to
    ``resolution``. An inconclusive probe stops the bisection.
    """
    if not lo < hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if resolution <= 0:
        raise ValueError("resolution must be positive")

    def probe(theta: float) -> SweepProbe:
        out = find_lyapunov(make_field(theta), degree, eps, sym, opts)
        return SweepProbe(float(theta), out.status, out.margin)

    grid = np.linspace(lo, hi, coarse + 1)
    mapper = executor.map if executor is not None else map
    probes = list(mapper(probe, grid))
    report = SweepReport(degree, lo, hi, resolution, list(probes), None)
    bad = [p for p in probes if p.status == INCONCLUSIVE]
    if bad:
        report.halted = True
        report.message = f"inconclusive probe at theta={bad[0].theta:g}"
        return report
    left = None
    for a, b in zip(probes, probes[1:]):
        if a.status != b.status:
            left, right = a, b
            break
    if left is None:
        report.message = f"no verdict change: {probes[0].status} at every probe"
        return report
    a, b = left, right
    while b.theta - a.theta > resolution:
        mid = probe((a.theta + b.theta) / 2)
        report.probes.append(mid)
        if mid.status == INCONCLUSIVE:
            report.halted = True
            report.message = f"inconclusive probe at theta={mid.theta:g}"
            report.bracket = (a.theta, b.theta)
            return report
        if mid.status == a.status:
            a = mid
        else:
            b = mid
    report.bracket = (a.theta, b.theta)
    report.message = f"{a.status} at {a.theta:.6g}, {b.status} at {b.theta:.6g}"
    return report
