"""Sparse multivariate polynomials with exact rational coefficients.

Monomials are exponent tuples, one entry per variable. Variables are
positional; names only appear when a polynomial is printed.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Mapping, Sequence, Union

import numpy as np

Monomial = tuple[int, ...]
Number = Union[int, float, Fraction, str]


class DimensionError(ValueError):
    """Operands live in different numbers of variables."""


def to_fraction(value: Number) -> Fraction:
    """Convert to an exact rational. Floats convert exactly (no rounding)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        return Fraction(value)
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, np.floating):
        return to_fraction(float(value))
    return Fraction(value)


def grlex_key(exps: Monomial) -> tuple:
    return (sum(exps), exps)


class Polynomial:
    """Immutable polynomial in ``nvars`` variables.

    ``terms`` maps exponent tuples to nonzero :class:`~fractions.Fraction`
    coefficients. Iteration order is descending graded-lex, so ``x1`` sorts
    before ``x2`` among monomials of the same degree.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], Number] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        collected: dict[Monomial, Fraction] = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise DimensionError(f"monomial {exps} does not have {nvars} exponents")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = collected.get(exps, Fraction(0)) + to_fraction(coef)
            collected[exps] = c
        ordered = sorted(((m, c) for m, c in collected.items() if c != 0),
                         key=lambda mc: grlex_key(mc[0]), reverse=True)
        self.nvars = nvars
        self._terms = dict(ordered)
        self._hash = None

    # -- construction -------------------------------------------------

    @classmethod
    def _raw(cls, nvars: int, terms: dict[Monomial, Fraction]) -> Polynomial:
        # trusted path: keys valid, zero coefficients already dropped
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._terms = dict(sorted(terms.items(), key=lambda mc: grlex_key(mc[0]), reverse=True))
        obj._hash = None
        return obj

    @classmethod
    def zero(cls, nvars: int) -> Polynomial:
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: Number) -> Polynomial:
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> Polynomial:
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1})

    @classmethod
    def monomial(cls, exps: Sequence[int], coef: Number = 1) -> Polynomial:
        return cls(len(exps), {tuple(exps): coef})

    @classmethod
    def variables(cls, nvars: int) -> list[Polynomial]:
        return [cls.variable(nvars, i) for i in range(nvars)]

    @classmethod
    def norm_squared_power(cls, nvars: int, power: int) -> Polynomial:
        """``(x1^2 + ... + xn^2) ** power``."""
        r2 = cls(nvars, {tuple(2 if j == i else 0 for j in range(nvars)): 1 for i in range(nvars)})
        return r2 ** power

    # -- inspection ---------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self._terms), default=0)

    @property
    def is_homogeneous(self) -> bool:
        degs = {sum(m) for m in self._terms}
        return len(degs) <= 1

    def max_abs_coefficient(self) -> Fraction:
        return max((abs(c) for c in self._terms.values()), default=Fraction(0))

    # -- arithmetic ---------------------------------------------------

    def _check(self, other: Polynomial) -> None:
        if self.nvars != other.nvars:
            raise DimensionError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, Fraction, np.integer, np.floating)):
            return Polynomial.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other) -> Polynomial:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial._raw(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> Polynomial:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> Polynomial:
        return (-self) + other

    def scale(self, factor: Number) -> Polynomial:
        f = to_fraction(factor)
        if f == 0:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw(self.nvars, {m: c * f for m, c in self._terms.items()})

    def __mul__(self, other) -> Polynomial:
        if isinstance(other, (int, float, Fraction, np.integer, np.floating)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Polynomial._raw(self.nvars, {m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Polynomial:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, tuple(self._terms.items())))
        return self._hash

    # -- calculus -----------------------------------------------------

    def diff(self, index: int) -> Polynomial:
        out = {}
        for m, c in self._terms.items():
            e = m[index]
            if e:
                dm = m[:index] + (e - 1,) + m[index + 1:]
                out[dm] = c * e
        return Polynomial._raw(self.nvars, out)

    def gradient(self) -> list[Polynomial]:
        return [self.diff(i) for i in range(self.nvars)]

    # -- substitution -------------------------------------------------

    def linear_substitute(self, matrix: Sequence[Sequence[Number]]) -> Polynomial:
        """Return ``q(x) = p(M x)`` for a square matrix ``M``."""
        n = self.nvars
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise DimensionError("substitution matrix must be nvars x nvars")
        images = [Polynomial(n, {tuple(1 if k == j else 0 for k in range(n)): matrix[i][j]
                                 for j in range(n)}) for i in range(n)]
        result = Polynomial.zero(n)
        for m, c in self._terms.items():
            term = Polynomial.constant(n, c)
            for i, e in enumerate(m):
                if e:
                    term = term * images[i] ** e
            result = result + term
        return result

    # -- evaluation ---------------------------------------------------

    def evaluate_exact(self, point: Sequence[Number]) -> Fraction:
        if len(point) != self.nvars:
            raise DimensionError(f"point has {len(point)} coordinates, polynomial has {self.nvars} variables")
        xs = [to_fraction(v) for v in point]
        total = Fraction(0)
        for m, c in self._terms.items():
            v = c
            for x, e in zip(xs, m):
                if e:
                    v *= x ** e
            total += v
        return total

    def __call__(self, *point: Number) -> float:
        return evaluate(self, point)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Floating-point evaluation at each row of ``points`` (for sampling)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.nvars:
            raise DimensionError(f"points must have shape (k, {self.nvars})")
        if not self._terms:
            return np.zeros(len(pts))
        exps = np.array(list(self._terms), dtype=np.int64)
        coefs = np.array([float(c) for c in self._terms.values()])
        powers = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return powers @ coefs

    # -- display ------------------------------------------------------

    def to_string(self, names: Sequence[str] | None = None, digits: int | None = None) -> str:
        """Human-readable form; ``digits`` switches coefficients to rounded floats."""
        def fmt(c):
            return str(c) if digits is None else f"{float(c):.{digits}g}"

        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if not self._terms:
            return "0"
        parts = []
        for m, c in self._terms.items():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e]
            if not factors:
                body = fmt(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = f"{fmt(abs(c))}*" + "*".join(factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self.to_string()!r})"


# -- module-level operations -----------------------------------------


def evaluate(p: Polynomial, point: Sequence[Number]) -> float:
    """Evaluate with exact rational accumulation, rounding once at the end."""
    for v in point:
        if isinstance(v, float) and not math.isfinite(v):
            raise ValueError("evaluation point must be finite")
    return float(p.evaluate_exact(point))


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    p._check(q)
    return p + q


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    p._check(q)
    return p * q


def gradient(p: Polynomial) -> list[Polynomial]:
    return p.gradient()


def grad_inner(p: Polynomial, q: Polynomial) -> Polynomial:
    """``<grad p, grad q>`` as a polynomial."""
    p._check(q)
    total = Polynomial.zero(p.nvars)
    for dp, dq in zip(p.gradient(), q.gradient()):
        if not dp.is_zero and not dq.is_zero:
            total = total + dp * dq
    return total


def homogenize(p: Polynomial, target_degree: int) -> Polynomial:
    """Append a variable ``y`` (index ``nvars``) and pad every term with
    powers of it so that all terms have ``target_degree``."""
    if target_degree < p.degree:
        raise ValueError(f"target degree {target_degree} below polynomial degree {p.degree}")
    out = {m + (target_degree - sum(m),): c for m, c in p.items()}
    return Polynomial._raw(p.nvars + 1, out)


def degree_info(p: Polynomial) -> tuple[int, bool]:
    """Return ``(degree, is_homogeneous)``. The zero polynomial reports
    degree 0 and is homogeneous; check ``p.is_zero`` to tell it apart."""
    return p.degree, p.is_homogeneous


def monomials_of_degree(nvars: int, degree: int) -> list[Monomial]:
    """All exponent tuples of the given total degree in descending grlex order."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        exps = [0] * nvars
        for i in combo:
            exps[i] += 1
        out.append(tuple(exps))
    out.sort(reverse=True)
    return out

