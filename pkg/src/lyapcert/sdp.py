"""Small dense semidefinite feasibility solver.

Feasibility of ``{X psd : <A_k, X> + F_k . u = b_k}`` is decided by the
margin program

    maximize t  subject to  X - t I psd,  <A_k, X> + F_k . u = b_k,

which is always strictly feasible once the equality system is consistent.
The sign of the optimal ``t`` is the verdict. The program is solved with an
infeasible-start primal-dual interior-point method (HKM search direction,
Mehrotra predictor-corrector) on the standard form obtained by substituting
``X = Y + t I``.

Several PSD blocks are supported so that the sos layer can stack one Gram
matrix per constraint; ``u`` are unrestricted scalar unknowns.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"

_NEAR_OPTIMAL = 1e-7
_AUTO_CAP = 10.0
_RESID_STOP = 1e-9  # relative residual floor reachable in double precision


class InconsistentConstraintsError(ValueError):
    """The affine equality system has no solution at all."""


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-7
    infeas_tol: float = 1e-6
    eig_tol: float = 1e-9
    max_iter: int = 200
    gap_tol: float = 1e-10
    rank_tol: float = 1e-10
    margin_cap: float | None = None  # None derives a cap from the data
    debug_path: str | None = None

    def __post_init__(self):
        for name in ("feas_tol", "infeas_tol", "eig_tol", "gap_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SdpProblem:
    """Equality-constrained feasibility problem over PSD blocks.

    ``A[j]`` has shape ``(m, n_j, n_j)`` and holds the coefficient matrices of
    block ``j`` for all ``m`` constraints; ``F`` has shape ``(m, nfree)``.
    """

    block_dims: tuple[int, ...]
    A: list[np.ndarray]
    b: np.ndarray
    F: np.ndarray = None

    def __post_init__(self):
        self.block_dims = tuple(int(n) for n in self.block_dims)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = len(self.b)
        if m == 0:
            raise ValueError("constraint list must be nonempty")
        if any(n < 1 for n in self.block_dims):
            raise ValueError("block dimensions must be positive")
        if len(self.A) != len(self.block_dims):
            raise ValueError("one coefficient stack per block required")
        self.A = [np.asarray(a, dtype=float) for a in self.A]
        for a, n in zip(self.A, self.block_dims):
            if a.shape != (m, n, n):
                raise ValueError(f"coefficient stack has shape {a.shape}, expected {(m, n, n)}")
            if not np.allclose(a, a.transpose(0, 2, 1), atol=1e-12):
                raise ValueError("constraint matrices must be symmetric")
        if self.F is None:
            self.F = np.zeros((m, 0))
        self.F = np.asarray(self.F, dtype=float).reshape(m, -1)

    @classmethod
    def from_constraints(cls, dim: int, constraints: Sequence[tuple[np.ndarray, float]]) -> SdpProblem:
        """Single-block problem from ``(A_k, b_k)`` pairs."""
        if not constraints:
            raise ValueError("constraint list must be nonempty")
        A = np.array([np.asarray(a, dtype=float).reshape(dim, dim) for a, _ in constraints])
        b = np.array([float(bk) for _, bk in constraints])
        return cls((dim,), [A], b)

    @property
    def dim(self) -> int:
        return self.block_dims[0]

    @property
    def nconstraints(self) -> int:
        return len(self.b)

    @property
    def nfree(self) -> int:
        return self.F.shape[1]

    def residuals(self, blocks: Sequence[np.ndarray], free: np.ndarray | None = None) -> np.ndarray:
        r = self.b.copy()
        for a, X in zip(self.A, blocks):
            r -= np.einsum("kij,ij->k", a, X)
        if self.nfree:
            r -= self.F @ free
        return r


@dataclass
class SdpResult:
    status: str
    blocks: list[np.ndarray] = field(default_factory=list)
    free: np.ndarray | None = None
    margin: float = float("nan")
    iterations: int = 0
    residual: float = float("nan")
    message: str = ""

    @property
    def witness(self) -> np.ndarray | None:
        if not self.blocks:
            return None
        return self.blocks[0]

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def min_eigenvalue(M: np.ndarray, sym_tol: float = 1e-8) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh((M + M.T) / 2)[0])


# -- preprocessing ----------------------------------------------------


def _constraint_rows(prob: SdpProblem) -> np.ndarray:
    parts = [a.reshape(prob.nconstraints, -1) for a in prob.A]
    parts.append(prob.F)
    return np.hstack(parts)


def _independent_rows(prob: SdpProblem, tol: float) -> np.ndarray:
    rows = _constraint_rows(prob)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        zero = np.flatnonzero(norms == 0)
        if np.any(np.abs(prob.b[zero]) > tol):
            raise InconsistentConstraintsError(f"constraint {int(zero[0])} reads 0 = {prob.b[zero[0]]:g}")
    nz = np.flatnonzero(norms > 0)
    if len(nz) == 0:
        raise ValueError("all constraints are trivial")
    scaled = rows[nz] / norms[nz, None]
    _, R, piv = sla.qr(scaled.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(1.0, diag[0])))
    keep = np.sort(nz[piv[:rank]])
    if rank < len(nz):
        dropped = np.setdiff1d(nz, keep)
        base = rows[keep]
        coef, *_ = np.linalg.lstsq(base.T, rows[dropped].T, rcond=None)
        implied = coef.T @ prob.b[keep]
        mismatch = np.abs(implied - prob.b[dropped]) / np.maximum(1.0, norms[dropped])
        if np.any(mismatch > 1e-8):
            raise InconsistentConstraintsError(
                f"{len(dropped)} dependent constraints with inconsistent right-hand side")
        log.warning("dropped %d linearly dependent constraints", len(dropped))
    return keep


# -- interior point core ----------------------------------------------


def _sym(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    lam = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _inv_psd(S: np.ndarray) -> np.ndarray:
    c = sla.cho_factor(S, lower=True)
    return _sym(sla.cho_solve(c, np.eye(len(S))))


class _StandardForm:
    """min g.z  s.t.  sum_j <A_j, Y_j> + F z = b,  Y_j psd,  z free."""

    def __init__(self, A: list[np.ndarray], F: np.ndarray, b: np.ndarray, g: np.ndarray):
        self.A, self.F, self.b, self.g = A, F, b, g
        self.dims = [a.shape[1] for a in A]
        self.m = len(b)

    def op(self, Ys):
        out = np.zeros(self.m)
        for a, Y in zip(self.A, Ys):
            out += np.einsum("kij,ij->k", a, Y)
        return out

    def adj(self, y):
        return [np.einsum("k,kij->ij", y, a) for a in self.A]


def _solve_standard(sf: _StandardForm, opts: SolverOptions, trace: list | None):
    m, nf = sf.m, sf.F.shape[1]
    N = sum(sf.dims)
    xi = max(10.0, np.sqrt(max(sf.dims)), float(np.max((1 + np.abs(sf.b)) / (1 + np.array(
        [np.sqrt(sum(np.sum(a[k] ** 2) for a in sf.A)) for k in range(m)])))) * max(sf.dims))
    Ys = [xi * np.eye(n) for n in sf.dims]
    Ss = [xi * np.eye(n) for n in sf.dims]
    y = np.zeros(m)
    z = np.zeros(nf)
    normb = 1 + np.linalg.norm(sf.b)
    normg = 1 + np.linalg.norm(sf.g)

    status = "max_iter"
    it = 0
    accurate = None
    for it in range(1, opts.max_iter + 1):
        rp = sf.b - sf.op(Ys) - sf.F @ z
        rd = [-S - aty for S, aty in zip(Ss, sf.adj(y))]
        rf = sf.g - sf.F.T @ y
        mu = sum(np.sum(Y * S) for Y, S in zip(Ys, Ss)) / N
        pobj = float(sf.g @ z)
        dobj = float(sf.b @ y)
        pinf = np.linalg.norm(rp) / normb
        dinf = (np.sqrt(sum(np.sum(r ** 2) for r in rd)) + np.linalg.norm(rf)) / normg
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        if trace is not None:
            trace.append({"iter": it, "pobj": pobj, "dobj": dobj, "pinf": pinf, "dinf": dinf, "mu": mu})
        if pinf < _RESID_STOP:
            # last accurate iterate; the step may later lose accuracy to conditioning
            accurate = (Ys, z, pinf, dinf, gap)
        centred = gap < opts.gap_tol or mu < opts.gap_tol * 1e-2 * (1 + abs(pobj))
        if centred and pinf < _RESID_STOP and dinf < _RESID_STOP:
            status = "optimal"
            break
        if centred and pinf < _NEAR_OPTIMAL and dinf < _NEAR_OPTIMAL:
            # objective converged; residuals stuck at the precision floor
            status = "near_optimal"
            break

        try:
            Sinv = [_inv_psd(S) for S in Ss]
        except np.linalg.LinAlgError:
            status = "breakdown"
            break
        M = np.zeros((m, m))
        for a, Y, Si in zip(sf.A, Ys, Sinv):
            G = Y @ a @ Si
            M += np.einsum("lij,kij->kl", G, a)
        M = _sym(M)
        K = np.zeros((m + nf, m + nf))
        K[:m, :m] = M
        K[:m, m:] = sf.F
        K[m:, :m] = sf.F.T
        try:
            lu = sla.lu_factor(K, check_finite=True)
        except (ValueError, sla.LinAlgError):
            status = "breakdown"
            break

        def direction(Rs):
            h = rp - sf.op(Rs) + sf.op([Y @ r @ Si for Y, r, Si in zip(Ys, rd, Sinv)])
            sol = sla.lu_solve(lu, np.concatenate([h, rf]))
            dy, dz = sol[:m], sol[m:]
            dSs = [r - a for r, a in zip(rd, sf.adj(dy))]
            dYs = [R - _sym(Y @ dS @ Si) for R, Y, dS, Si in zip(Rs, Ys, dSs, Sinv)]
            return dYs, dz, dy, dSs

        def steps(dYs, dSs):
            ap = min([1.0] + [_max_step(Y, d) for Y, d in zip(Ys, dYs)])
            ad = min([1.0] + [_max_step(S, d) for S, d in zip(Ss, dSs)])
            return ap, ad

        # predictor
        dYa, dza, dya, dSa = direction([-Y for Y in Ys])
        if not all(np.all(np.isfinite(d)) for d in dYa):
            status = "breakdown"
            break
        try:
            ap, ad = steps(dYa, dSa)
        except np.linalg.LinAlgError:
            status = "breakdown"
            break
        mu_aff = sum(np.sum((Y + ap * dY) * (S + ad * dS))
                     for Y, dY, S, dS in zip(Ys, dYa, Ss, dSa)) / N
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector
        Rs = [_sym((sigma * mu * np.eye(len(Y)) - dY @ dS) @ Si) - Y
              for Y, dY, dS, Si in zip(Ys, dYa, dSa, Sinv)]
        dYs, dz, dy, dSs = direction(Rs)
        if not all(np.all(np.isfinite(d)) for d in dYs):
            status = "breakdown"
            break
        try:
            ap, ad = steps(dYs, dSs)
        except np.linalg.LinAlgError:
            status = "breakdown"
            break
        gamma = 0.9 + 0.09 * min(ap, ad)
        ap, ad = min(1.0, gamma * ap), min(1.0, gamma * ad)
        Ys = [_sym(Y + ap * d) for Y, d in zip(Ys, dYs)]
        z = z + ap * dz
        y = y + ad * dy
        Ss = [_sym(S + ad * d) for S, d in zip(Ss, dSs)]

    if status in ("breakdown", "max_iter") and accurate is not None:
        Ys, z, pinf, dinf, gap = accurate
        if max(pinf, dinf, gap) < _NEAR_OPTIMAL:
            # stalled at the limits of double precision, but the iterate is accurate
            status = "near_optimal"
    info = {"status": status, "iterations": it, "y": y}
    return Ys, z, info


def solve_margin(prob: SdpProblem, opts: SolverOptions | None = None) -> SdpResult:
    """Decide feasibility of ``prob`` through the margin program.

    ``status`` is ``feasible`` when the optimal margin is at least
    ``-feas_tol`` and the recovered witness passes an independent residual and
    eigenvalue check, ``infeasible`` when the margin is below ``-infeas_tol``,
    and ``numerical_failure`` otherwise (including the gap between the two
    tolerances and solver breakdown).
    """
    opts = opts or SolverOptions()
    keep = _independent_rows(prob, opts.rank_tol)
    if prob.nfree and np.linalg.matrix_rank(prob.F[keep]) < prob.nfree:
        raise ValueError("free variables are not independently determined by the constraints")

    # unit-norm rows; the solution set is unchanged
    rows = _constraint_rows(prob)[keep]
    scale = 1.0 / np.linalg.norm(rows, axis=1)
    A = [a[keep] * scale[:, None, None] for a in prob.A]
    Fu = prob.F[keep] * scale[:, None]
    b = prob.b[keep] * scale

    # X_j = Y_j + t I ; free vector is (t, u), the cap slack is a 1x1 block
    tau = sum(np.einsum("kii->k", a) for a in A)
    F = np.hstack([tau[:, None], Fu])
    g = np.zeros(F.shape[1])
    g[0] = -1.0
    # an upper bound on t keeps the program bounded when the affine set holds
    # arbitrarily positive definite matrices; a binding cap still proves feasibility
    cap = opts.margin_cap if opts.margin_cap is not None else _AUTO_CAP * (1.0 + float(np.max(np.abs(b))))
    m = len(b)
    A = [np.concatenate([a, np.zeros((1,) + a.shape[1:])]) for a in A]
    cap_block = np.zeros((m + 1, 1, 1))
    cap_block[m, 0, 0] = 1.0
    A.append(cap_block)
    F = np.vstack([F, np.zeros((1, F.shape[1]))])
    F[m, 0] = 1.0
    b = np.append(b, cap)

    trace = [] if opts.debug_path else None
    Ys, z, info = _solve_standard(_StandardForm(A, F, b, g), opts, trace)
    if trace is not None:
        with open(opts.debug_path, "w") as fh:
            json.dump(trace, fh, indent=1)

    nb = len(prob.block_dims)
    t = float(z[0])
    u = z[1:]
    blocks = [_sym(Y + t * np.eye(len(Y))) for Y in Ys[:nb]]
    result = SdpResult(status=NUMERICAL_FAILURE, blocks=blocks, free=u, margin=t,
                       iterations=info["iterations"])

    if info["status"] not in ("optimal", "near_optimal"):
        # a feasible witness is still accepted after the independent post-check
        result.message = f"interior point iteration ended with {info['status']}"
    if not (np.isfinite(t) and all(np.all(np.isfinite(X)) for X in blocks) and np.all(np.isfinite(u))):
        result.message = "interior point iterates are not finite"
        return result

    # residuals of the unit-norm rows, relative to the size of the right-hand side
    resid = prob.residuals(blocks, u) / np.linalg.norm(_constraint_rows(prob), axis=1).clip(min=1e-300)
    result.residual = float(np.max(np.abs(resid)))
    resid_tol = opts.feas_tol * max(1.0, float(np.max(np.abs(b[:-1]))))
    if t >= -opts.feas_tol:
        min_eig = min(min_eigenvalue(X) for X in blocks)
        if result.residual <= resid_tol and min_eig >= -opts.feas_tol:
            result.status = FEASIBLE
        else:
            result.message = (f"witness failed post-check (residual {result.residual:.2e}, "
                              f"min eigenvalue {min_eig:.2e})")
    elif t < -opts.infeas_tol and info["status"] in ("optimal", "near_optimal"):
        result.status = INFEASIBLE
    elif not result.message:
        result.message = f"margin {t:.3e} inside the undecided band"
    return result
