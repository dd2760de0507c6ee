"""Pure-odd charts: the operator algebra acting on the Fock space of 2^q monomials."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import combinations

import numpy as np
import sympy

from .algebra import Chart, monomial
from .operators import SuperDiffOp, compose

MAX_Q = 10


class CliffordChartError(ValueError):
    """Fock-space operations need a 0|q chart with q <= MAX_Q."""


def _require_odd_chart(chart: Chart) -> None:
    if chart.p != 0:
        raise CliffordChartError(f"Fock representation needs p = 0, got chart {chart}")
    if chart.q > MAX_Q:
        raise CliffordChartError(f"q = {chart.q} exceeds the cap {MAX_Q}")


def fock_basis(q: int) -> list:
    """Subsets of range(q) ordered by size, then lexicographically."""
    return [s for n in range(q + 1) for s in combinations(range(q), n)]


@dataclass(frozen=True, eq=False)
class FockMatrix:
    q: int
    matrix: np.ndarray  # object array of Fractions

    @classmethod
    def identity(cls, q: int) -> "FockMatrix":
        n = 2**q
        m = np.full((n, n), Fraction(0), dtype=object)
        for i in range(n):
            m[i, i] = Fraction(1)
        return cls(q, m)

    @property
    def size(self) -> int:
        return 2**self.q

    def __add__(self, other):
        return FockMatrix(self.q, self.matrix + other.matrix)

    def __sub__(self, other):
        return FockMatrix(self.q, self.matrix - other.matrix)

    def __matmul__(self, other):
        if other.q != self.q:
            raise ValueError("Fock dimensions differ")
        return FockMatrix(self.q, self.matrix.dot(other.matrix))

    def scale(self, c) -> "FockMatrix":
        return FockMatrix(self.q, self.matrix * Fraction(c))

    def is_zero(self) -> bool:
        return not any(self.matrix.flat)

    def tolist(self) -> list:
        return [[Fraction(v) for v in row] for row in self.matrix]

    def __eq__(self, other):
        if not isinstance(other, FockMatrix):
            return NotImplemented
        return self.q == other.q and self.tolist() == other.tolist()

    def __hash__(self):
        return hash((self.q, tuple(map(tuple, self.tolist()))))

    def __repr__(self):
        rows = ["[" + ", ".join(str(v) for v in row) + "]" for row in self.tolist()]
        return "FockMatrix([" + ", ".join(rows) + "])"


def rep(D: SuperDiffOp) -> FockMatrix:
    """Matrix of D on the monomial basis; column S holds D(xi^S)."""
    chart = D.chart
    _require_odd_chart(chart)
    basis = fock_basis(chart.q)
    index = {s: i for i, s in enumerate(basis)}
    n = len(basis)
    m = np.full((n, n), Fraction(0), dtype=object)
    for j, s in enumerate(basis):
        image = D(monomial(chart, (), s))
        for (_, beta), c in image.terms.items():
            m[index[beta], j] = c
    return FockMatrix(chart.q, m)


def normal_form_basis(chart: Chart) -> list:
    """The 4^q operators xi^b' d_xi^b."""
    _require_odd_chart(chart)
    subsets = fock_basis(chart.q)
    return [
        SuperDiffOp(chart, {((), b): monomial(chart, (), b1)}) for b1 in subsets for b in subsets
    ]


def clifford_relation_failures(chart: Chart) -> list:
    """Pairs (i, j) where rep(xi^i) rep(d_j) + rep(d_j) rep(xi^i) != delta_ij I."""
    _require_odd_chart(chart)
    ident = FockMatrix.identity(chart.q)
    zero = ident.scale(0)
    bad = []
    for i in range(chart.q):
        mi = rep(SuperDiffOp.mult(chart.coordinate(i)))
        for j in range(chart.q):
            dj = rep(SuperDiffOp.partial(chart, j))
            anti = mi @ dj + dj @ mi
            if anti != (ident if i == j else zero):
                bad.append((i, j))
    return bad


def fock_rank(q: int) -> int:
    """Rank of the represented normal-form basis, flattened into 4^q vectors."""
    chart = Chart(0, q)
    rows = [[v for row in rep(B).tolist() for v in row] for B in normal_form_basis(chart)]
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in rows]).rank()


def spans_full_endomorphisms(q: int) -> bool:
    if q < 1:
        raise ValueError("need q >= 1")
    if q > MAX_Q:
        raise CliffordChartError(f"q = {q} exceeds the cap {MAX_Q}")
    return fock_rank(q) == 4**q


def swap_automorphism(D: SuperDiffOp) -> SuperDiffOp:
    """Exchange m_{xi^i} and d_{xi^i} on each normal-form word, then renormalize."""
    chart = D.chart
    _require_odd_chart(chart)
    ident = SuperDiffOp.identity(chart)
    out = SuperDiffOp.zero(chart)
    for (_, beta), coeff in D.terms.items():
        # d^beta applies its lowest index first, so it is d_{b_k} o ... o d_{b_1}
        tail = SuperDiffOp.mult(
            reduce(lambda f, b: f * chart.coordinate(b), reversed(beta), chart.one())
        )
        for (_, b1), c in coeff.terms.items():
            head = reduce(compose, (SuperDiffOp.partial(chart, b) for b in b1), ident)
            out = out + compose(head, tail).scale(c)
    return out


__all__ = [
    "CliffordChartError",
    "FockMatrix",
    "MAX_Q",
    "clifford_relation_failures",
    "fock_basis",
    "fock_rank",
    "normal_form_basis",
    "rep",
    "spans_full_endomorphisms",
    "swap_automorphism",
]

