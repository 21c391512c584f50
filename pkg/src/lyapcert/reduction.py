"""ONE-IN-THREE 3SAT instances, the quartic gadget built from them, and the
gradient vector field of a form.

Exhaustive searches enumerate assignments as a binary counter with ``x1``
as the least significant bit, so the first witness reported for the
clause ``(x1 v x2 v x3)`` is ``(1, 0, 0)``.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .dynamics import VectorField
from .poly import Polynomial, homogenize

MAX_EXHAUSTIVE_VARS = 30
WARN_EXHAUSTIVE_VARS = 20


class CnfParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class MalformedHeader(CnfParseError):
    pass


class ClauseArityError(CnfParseError):
    pass


class RepeatedVariableError(CnfParseError):
    pass


class VariableRangeError(CnfParseError):
    pass


class SearchBoundError(ValueError):
    pass


@dataclass(frozen=True)
class Literal:
    var_index: int  # 1-based
    negated: bool = False

    @classmethod
    def from_int(cls, value: int) -> Literal:
        if value == 0:
            raise ValueError("literal 0 is the clause terminator")
        return cls(abs(value), value < 0)

    def to_int(self) -> int:
        return -self.var_index if self.negated else self.var_index

    def value(self, bits: Sequence[bool]) -> bool:
        return bool(bits[self.var_index - 1]) != self.negated


Clause = tuple[Literal, Literal, Literal]


@dataclass(frozen=True)
class CnfInstance:
    nvars: int
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError("instance needs at least one variable")
        clauses = tuple(tuple(Literal.from_int(l) if isinstance(l, int) else l for l in c)
                        for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        for c in clauses:
            if len(c) != 3:
                raise ValueError(f"clause {c} does not have exactly three literals")
            idx = [l.var_index for l in c]
            if len(set(idx)) != 3:
                raise ValueError(f"clause {c} repeats a variable")
            if any(i < 1 or i > self.nvars for i in idx):
                raise ValueError(f"clause {c} references a variable outside 1..{self.nvars}")

    @classmethod
    def from_ints(cls, nvars: int, clauses: Iterable[Iterable[int]]) -> CnfInstance:
        return cls(nvars, tuple(tuple(Literal.from_int(v) for v in c) for c in clauses))

    def to_dimacs(self) -> str:
        lines = [f"p eot3 {self.nvars} {len(self.clauses)}"]
        lines += [" ".join(str(l.to_int()) for l in c) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"

    def exactly_one_true(self, bits: Sequence[bool]) -> bool:
        return all(sum(l.value(bits) for l in c) == 1 for c in self.clauses)


_HEADER = re.compile(r"^p\s+eot3\s+(\d+)\s+(\d+)\s*$")


def parse_cnf(source) -> CnfInstance:
    """Parse the ``p eot3 <nvars> <nclauses>`` DIMACS dialect.

    ``source`` may be bytes, a string, or a binary/text stream.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    header = None
    clauses = []
    for lineno, raw in enumerate(io.StringIO(source), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise MalformedHeader("second header line", lineno)
            m = _HEADER.match(line)
            if not m:
                raise MalformedHeader(f"expected 'p eot3 <nvars> <nclauses>', got {line!r}", lineno)
            header = (int(m.group(1)), int(m.group(2)))
            if header[0] < 1:
                raise MalformedHeader("variable count must be positive", lineno)
            continue
        if header is None:
            raise MalformedHeader("clause before header", lineno)
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError:
            raise CnfParseError(f"non-integer token in {line!r}", lineno) from None
        if not values or values[-1] != 0:
            raise ClauseArityError("clause must be terminated by 0", lineno)
        lits = values[:-1]
        if len(lits) != 3 or 0 in lits:
            raise ClauseArityError(f"clause has {len([v for v in lits if v])} literals, expected 3", lineno)
        idx = [abs(v) for v in lits]
        if any(i > header[0] for i in idx):
            raise VariableRangeError(f"variable index above {header[0]}", lineno)
        if len(set(idx)) != 3:
            raise RepeatedVariableError("clause repeats a variable", lineno)
        clauses.append(tuple(Literal.from_int(v) for v in lits))
    if header is None:
        raise MalformedHeader("missing header")
    if not clauses:
        raise ClauseArityError("instance has no clauses")
    if len(clauses) != header[1]:
        raise MalformedHeader(f"header announces {header[1]} clauses, found {len(clauses)}")
    return CnfInstance(header[0], tuple(clauses))


def _check_bound(nvars: int) -> None:
    if nvars > MAX_EXHAUSTIVE_VARS:
        raise SearchBoundError(f"{nvars} variables exceed the exhaustive bound {MAX_EXHAUSTIVE_VARS}")


def _bits(mask: int, nvars: int) -> tuple[bool, ...]:
    return tuple(bool(mask >> i & 1) for i in range(nvars))


def exactly_one_true_satisfiable(inst: CnfInstance) -> tuple[bool, ...] | None:
    """First assignment (counter order) giving every clause exactly one true
    literal, or ``None``."""
    _check_bound(inst.nvars)
    # each clause as (positive mask, negated mask)
    clause_masks = []
    for c in inst.clauses:
        pos = neg = 0
        for l in c:
            if l.negated:
                neg |= 1 << (l.var_index - 1)
            else:
                pos |= 1 << (l.var_index - 1)
        clause_masks.append((pos, neg))
    for mask in range(1 << inst.nvars):
        if all(bin(mask & pos).count("1") + bin(~mask & neg).count("1") == 1
               for pos, neg in clause_masks):
            return _bits(mask, inst.nvars)
    return None


def literal_polynomial(lit: Literal, nvars: int) -> Polynomial:
    x = Polynomial.variable(nvars, lit.var_index - 1)
    return 1 - x if lit.negated else x


def quartic_squares(inst: CnfInstance) -> list[Polynomial]:
    """The polynomials whose squares sum to the gadget quartic."""
    n = inst.nvars
    xs = Polynomial.variables(n)
    out = [x * (1 - x) for x in xs]
    for c in inst.clauses:
        out.append(sum((literal_polynomial(l, n) for l in c), Polynomial.zero(n)) - 1)
    return out


def build_quartic(inst: CnfInstance) -> Polynomial:
    """``sum_i x_i^2 (1 - x_i)^2 + sum_clauses (l1 + l2 + l3 - 1)^2``.

    A negated literal contributes ``1 - x_i``. The result vanishes exactly at
    the exactly-one-true assignments.
    """
    total = Polynomial.zero(inst.nvars)
    for q in quartic_squares(inst):
        total = total + q * q
    return total


def zeros_on_cube(p: Polynomial) -> list[tuple[bool, ...]]:
    """All points of ``{0,1}^n`` where ``p`` vanishes (exact), in counter order."""
    _check_bound(p.nvars)
    # at a 0/1 point a monomial equals 1 iff its support is switched on
    support_terms: dict[int, object] = {}
    for m, c in p.items():
        s = sum(1 << i for i, e in enumerate(m) if e)
        support_terms[s] = support_terms.get(s, 0) + c
    terms = [(s, c) for s, c in support_terms.items() if c]
    zeros = []
    for mask in range(1 << p.nvars):
        if sum(c for s, c in terms if s & mask == s) == 0:
            zeros.append(_bits(mask, p.nvars))
    return zeros


def gradient_system(V: Polynomial) -> VectorField:
    """The field ``xdot = -grad V``."""
    comps = [-d for d in V.gradient()]
    return VectorField.from_components(comps)


def reduction_pipeline(inst: CnfInstance) -> tuple[Polynomial, Polynomial, VectorField]:
    """Quartic ``p``, its homogenization ``p_h`` (extra variable last), and
    the cubic field ``-grad p_h``."""
    p = build_quartic(inst)
    ph = homogenize(p, 4)
    return p, ph, gradient_system(ph)
