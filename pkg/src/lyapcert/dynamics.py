"""Homogeneous polynomial vector fields, the two rotated cubic families,
RK4 simulation and empirical stability diagnostics.

Simulation verdicts are empirical and never feed back into certificates.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .poly import DimensionError, Number, Polynomial, to_fraction

if os.environ.get("LYAPCERT_PURE_PYTHON"):
    from ._rk4_py import integrate_kernel
    BACKEND = "python"
else:
    try:
        from ._rk4 import integrate_kernel
        BACKEND = "compiled"
    except ImportError:  # extension not built
        from ._rk4_py import integrate_kernel
        BACKEND = "python"

CONVERGED = "converged"
PERIODIC = "periodic_suspected"
DIVERGED = "diverged"
BUDGET = "budget_exhausted"
VERDICTS = (CONVERGED, PERIODIC, DIVERGED, BUDGET)


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("LYAPCERT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class VectorField:
    nvars: int
    components: tuple[Polynomial, ...]
    declared_degree: int
    is_homogeneous: bool

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) != self.nvars:
            raise DimensionError(f"{len(comps)} components for {self.nvars} variables")
        for c in comps:
            if c.nvars != self.nvars:
                raise DimensionError("component lives in the wrong number of variables")
            if not c.coefficient((0,) * self.nvars) == 0:
                raise ValueError("field must vanish at the origin")
            if self.is_homogeneous and not c.is_zero:
                if not c.is_homogeneous or c.degree != self.declared_degree:
                    raise ValueError("component is not homogeneous of the declared degree")

    @classmethod
    def from_components(cls, components: Sequence[Polynomial]) -> VectorField:
        comps = tuple(components)
        if not comps:
            raise ValueError("field needs at least one component")
        degs = {sum(m) for c in comps for m, _ in c.items()}
        degree = max(degs, default=0)
        return cls(comps[0].nvars, comps, degree, len(degs) <= 1)

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return np.array([c.evaluate_many(np.asarray([x], dtype=float))[0] for c in self.components])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return np.stack([c.evaluate_many(points) for c in self.components], axis=1)

    def substitute(self, matrix) -> VectorField:
        """Components of ``f(M x)`` (not a change of coordinates)."""
        return VectorField.from_components([c.linear_substitute(matrix) for c in self.components])

    def kernel_arrays(self):
        exps, coefs, comp = [], [], []
        for k, c in enumerate(self.components):
            for m, v in c.items():
                exps.append(m)
                coefs.append(float(v))
                comp.append(k)
        if not exps:
            exps, coefs, comp = [(0,) * self.nvars], [0.0], [0]
        return (np.ascontiguousarray(exps, dtype=np.int64), np.ascontiguousarray(coefs, dtype=float),
                np.ascontiguousarray(comp, dtype=np.int64))


def _trig(theta: float) -> tuple:
    return to_fraction(math.cos(theta)), to_fraction(math.sin(theta))


def family_rotated_center(theta: float, lam: Number) -> VectorField:
    """Rotation by ``theta`` of the cubic center field with parameter ``lam``.

    ``cos(theta)`` and ``sin(theta)`` are evaluated once in double precision
    and then used as exact coefficients.
    """
    c, s = _trig(theta)
    lam = to_fraction(lam)
    x, y = Polynomial.variables(2)
    r2 = x * x + y * y
    q = 2 * x * x + y * y
    fx0 = (-2 * lam) * y * r2 - 2 * y * q
    fy0 = (4 * lam) * x * r2 + 2 * x * q
    return VectorField.from_components([fx0 * c - fy0 * s, fx0 * s + fy0 * c])


def family_nonmonotone(theta: float) -> VectorField:
    """``(xdot, ydot) = [[-sin, cos], [-cos, -sin]] (x^3, y^3)``."""
    c, s = _trig(theta)
    x, y = Polynomial.variables(2)
    x3, y3 = x ** 3, y ** 3
    return VectorField.from_components([x3 * (-s) + y3 * c, x3 * (-c) - y3 * s])


def conserved_quantity_rotated(lam: float) -> Callable:
    """``(2x^2 + y^2)^lam (x^2 + y^2)``; works on scalars or arrays."""
    if lam <= 0:
        raise ValueError("lambda must be positive")

    def V(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (2 * x * x + y * y) ** lam * (x * x + y * y)

    return V


@dataclass(frozen=True)
class IntegrationOptions:
    step: float = 1e-3
    conv_radius: float = 1e-6
    blowup_radius: float = 1e6
    tube_radius: float = 1e-4
    max_steps: int = 1_000_000
    record_every: int = 1
    scale_step: bool = True

    def __post_init__(self):
        if self.step <= 0 or self.max_steps < 1 or self.record_every < 1:
            raise ValueError("step, max_steps and record_every must be positive")
        if not 0 < self.conv_radius < self.blowup_radius:
            raise ValueError("need 0 < conv_radius < blowup_radius")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    verdict: str
    steps: int = 0
    winding: float = 0.0
    nonfinite: bool = False
    backend: str = BACKEND

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path, V: Polynomial | Callable | None = None, names: Sequence[str] | None = None):
        n = self.states.shape[1]
        names = list(names or [f"x{i + 1}" for i in range(n)])
        values = None
        if isinstance(V, Polynomial):
            values = V.evaluate_many(self.states)
        elif V is not None:
            values = np.asarray(V(*self.states.T))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *names] + (["V"] if values is not None else []))
            for k in range(len(self.times)):
                row = [repr(float(self.times[k]))] + [repr(float(v)) for v in self.states[k]]
                if values is not None:
                    row.append(repr(float(values[k])))
                w.writerow(row)


def integrate(f: VectorField, x0: Sequence[float], opts: IntegrationOptions | None = None,
              kernel: Callable | None = None) -> Trajectory:
    """Integrate ``xdot = f(x)`` from ``x0`` with fixed-step RK4.

    For a field of degree ``k`` the nominal step is divided by
    ``|x|^(k-1)`` so that the step is constant in the time scale where the
    homogeneous flow has unit speed on the sphere. Termination: converged
    (``|x| <= conv_radius``), periodic_suspected (after at least one full turn
    the trajectory crosses the ray through ``x0`` within ``tube_radius`` of
    ``x0``; planar fields only), diverged (``|x| >= blowup_radius`` or a
    non-finite state), budget_exhausted.
    """
    opts = opts or IntegrationOptions()
    x0 = np.ascontiguousarray(x0, dtype=float)
    if x0.shape != (f.nvars,):
        raise DimensionError(f"initial state must have {f.nvars} entries")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    exps, coefs, comp = f.kernel_arrays()
    speed = float(f.declared_degree - 1) if (opts.scale_step and f.declared_degree > 1) else 0.0
    cap = opts.max_steps // opts.record_every + 2
    times = np.zeros(cap)
    states = np.zeros((cap, f.nvars))
    run = kernel or integrate_kernel
    code, nonfinite, steps, _, wind, nrec, _ = run(
        exps, coefs, comp, x0, opts.step, speed, opts.conv_radius, opts.blowup_radius,
        opts.tube_radius, opts.max_steps, opts.record_every, times, states)
    backend = BACKEND if kernel is None else getattr(kernel, "__module__", "custom")
    return Trajectory(times[:nrec].copy(), states[:nrec].copy(), VERDICTS[code], int(steps),
                      float(wind), bool(nonfinite), backend)


def sphere_points(nvars: int, count: int, seed: int | None = 0) -> np.ndarray:
    """``count`` points uniformly distributed on the unit sphere."""
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((count, nvars))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass
class StabilityReport:
    histogram: dict[str, int]
    verdicts: list[str]
    initial_states: np.ndarray
    trajectories: list[Trajectory] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "empirical": True,
            "histogram": dict(self.histogram),
            "verdicts": list(self.verdicts),
            "initial_states": self.initial_states.tolist(),
        }


def empirical_stability(f: VectorField, n_initial: int, opts: IntegrationOptions | None = None,
                        seed: int | None = 0, keep_trajectories: bool = False) -> StabilityReport:
    """Integrate from ``n_initial`` sphere points and tally the verdicts."""
    if not f.is_homogeneous:
        raise ValueError("empirical stability sweep expects a homogeneous field")
    starts = sphere_points(f.nvars, n_initial, seed)
    with ThreadPoolExecutor(max_workers=max_threads()) as pool:
        trajs = list(pool.map(lambda x0: integrate(f, x0, opts), starts))
    verdicts = [t.verdict for t in trajs]
    hist = {v: verdicts.count(v) for v in VERDICTS}
    return StabilityReport(hist, verdicts, starts, trajs if keep_trajectories else [])
