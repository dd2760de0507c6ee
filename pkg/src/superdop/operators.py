"""Superdifferential operators and supervector fields on a chart.

Normal form: ``D = sum D_ab * d_x^a * d_xi^b`` with the coefficient on the left
and the odd partials composed in decreasing index order
``d_xi^{q} ... d_xi^{1}`` (restricted to b).  Applying a basis word therefore
differentiates by the lowest odd index first.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

from .algebra import (
    Chart,
    ChartMismatch,
    Superfunction,
    antiderivative,
    multi_indices,
    partial,
    probe_monomial,
)


class OrderError(ValueError):
    """An operator exceeded the order an operation accepts."""


class DecompositionError(ValueError):
    """No commutator decomposition exists in this chart."""


def _check_chart(a, b):
    if a.chart != b.chart:
        raise ChartMismatch(f"chart {a.chart} vs {b.chart}")


# ---------------------------------------------------------------------------
# SuperDiffOp


class SuperDiffOp:
    __slots__ = ("chart", "_terms", "_hash")

    def __init__(self, chart: Chart, terms: Mapping | None = None):
        self.chart = chart
        clean = {}
        for (alpha, beta), f in (terms or {}).items():
            if not isinstance(f, Superfunction):
                f = Superfunction.constant(chart, f)
            if f.chart != chart:
                raise ChartMismatch(f"coefficient on chart {f.chart}, operator on {chart}")
            alpha, beta = tuple(alpha), tuple(beta)
            if len(alpha) != chart.p or list(beta) != sorted(set(beta)):
                raise ValueError(f"bad derivative multi-index {(alpha, beta)}")
            if any(not 0 <= b < chart.q for b in beta):
                raise ValueError(f"odd derivative index out of range in {beta}")
            if not f.is_zero():
                clean[(alpha, beta)] = f
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, chart, terms):
        obj = cls.__new__(cls)
        obj.chart = chart
        obj._terms = {k: f for k, f in terms.items() if not f.is_zero()}
        obj._hash = None
        return obj

    # constructors

    @classmethod
    def mult(cls, f: Superfunction) -> "SuperDiffOp":
        return cls._raw(f.chart, {(f.chart.zero_alpha(), ()): f})

    @classmethod
    def identity(cls, chart: Chart) -> "SuperDiffOp":
        return cls.mult(chart.one())

    @classmethod
    def zero(cls, chart: Chart) -> "SuperDiffOp":
        return cls._raw(chart, {})

    @classmethod
    def partial(cls, chart: Chart, k: int) -> "SuperDiffOp":
        chart.check_index(k)
        if k < chart.p:
            alpha = tuple(1 if i == k else 0 for i in range(chart.p))
            return cls._raw(chart, {(alpha, ()): chart.one()})
        return cls._raw(chart, {(chart.zero_alpha(), (k - chart.p,)): chart.one()})

    # inspection

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def sorted_terms(self):
        return sorted(
            self._terms.items(),
            key=lambda t: (sum(t[0][0]) + len(t[0][1]), len(t[0][1]), t[0][1], tuple(-a for a in t[0][0])),
        )

    def is_zero(self) -> bool:
        return not self._terms

    def order(self) -> int:
        return max((sum(a) + len(b) for (a, b) in self._terms), default=-1)

    def parity_parts(self):
        even, odd = {}, {}
        for key, f in self._terms.items():
            fe, fo = f.parity_parts()
            if len(key[1]) % 2:
                fe, fo = fo, fe
            # fe now holds the part making the whole term even
            if fe:
                even[key] = fe
            if fo:
                odd[key] = fo
        return SuperDiffOp._raw(self.chart, even), SuperDiffOp._raw(self.chart, odd)

    def parity(self):
        even, odd = self.parity_parts()
        if odd.is_zero():
            return 0
        if even.is_zero():
            return 1
        return None

    # linear structure

    def __add__(self, other):
        if not isinstance(other, SuperDiffOp):
            return NotImplemented
        _check_chart(self, other)
        out = dict(self._terms)
        for k, f in other._terms.items():
            out[k] = out[k] + f if k in out else f
        return SuperDiffOp._raw(self.chart, out)

    def __neg__(self):
        return SuperDiffOp._raw(self.chart, {k: -f for k, f in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, SuperDiffOp):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "SuperDiffOp":
        c = Fraction(c)
        return SuperDiffOp._raw(self.chart, {k: f.scale(c) for k, f in self._terms.items()})

    def left_mul(self, f: Superfunction) -> "SuperDiffOp":
        """m_f o D."""
        if f.chart != self.chart:
            raise ChartMismatch(f"chart {f.chart} vs {self.chart}")
        return SuperDiffOp._raw(self.chart, {k: f * g for k, g in self._terms.items()})

    def __matmul__(self, other):
        return compose(self, other)

    def __call__(self, f: Superfunction) -> Superfunction:
        return apply(self, f)

    def __eq__(self, other):
        if not isinstance(other, SuperDiffOp):
            return NotImplemented
        return self.chart == other.chart and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        from .printing import format_operator

        return f"SuperDiffOp({format_operator(self)})"


def apply(D: SuperDiffOp, f: Superfunction) -> Superfunction:
    """Evaluate D on f, word by word from the right."""
    if D.chart != f.chart:
        raise ChartMismatch(f"chart {D.chart} vs {f.chart}")
    chart = D.chart
    out = chart.zero()
    for (alpha, beta), c in D._terms.items():
        g = f
        for b in beta:
            g = partial(g, chart.p + b)
            if g.is_zero():
                break
        else:
            for i, e in enumerate(alpha):
                for _ in range(e):
                    g = partial(g, i)
            if g:
                out = out + c * g
    return out


def _left_partial(k: int, E: SuperDiffOp) -> SuperDiffOp:
    """Normal form of d_k o E via d_k o m_c = m_{d_k c} + (-1)^{|k||c|} m_c o d_k."""
    chart = E.chart
    odd_k = chart.is_odd(k)
    out: dict = {}

    def add(key, f):
        if key in out:
            out[key] = out[key] + f
        else:
            out[key] = f

    for (alpha, beta), c in E._terms.items():
        dc = partial(c, k)
        if dc:
            add((alpha, beta), dc)
        if odd_k:
            a = k - chart.p
            if a in beta:
                continue
            ce, co = c.parity_parts()
            shifted = ce - co
            nbig = sum(1 for b in beta if b > a)
            if nbig % 2:
                shifted = -shifted
            add((alpha, tuple(sorted(beta + (a,)))), shifted)
        else:
            a2 = alpha[:k] + (alpha[k] + 1,) + alpha[k + 1 :]
            add((a2, beta), c)
    return SuperDiffOp._raw(chart, out)


def compose(D: SuperDiffOp, E: SuperDiffOp) -> SuperDiffOp:
    """Normal form of D o E by commuting partials past multiplications."""
    _check_chart(D, E)
    chart = D.chart
    out = SuperDiffOp.zero(chart)
    for (alpha, beta), c in D._terms.items():
        T = E
        for b in beta:
            T = _left_partial(chart.p + b, T)
        for i, e in enumerate(alpha):
            for _ in range(e):
                T = _left_partial(i, T)
        out = out + T.left_mul(c)
    return out


def scommutator(D: SuperDiffOp, E: SuperDiffOp) -> SuperDiffOp:
    """[D, E] = D E - (-1)^{|D||E|} E D, extended bilinearly over parity parts."""
    _check_chart(D, E)
    out = SuperDiffOp.zero(D.chart)
    for i, Di in enumerate(D.parity_parts()):
        if Di.is_zero():
            continue
        for j, Ej in enumerate(E.parity_parts()):
            if Ej.is_zero():
                continue
            term = compose(Di, Ej)
            back = compose(Ej, Di)
            out = out + (term + back if i * j else term - back)
    return out


def order(D: SuperDiffOp) -> int:
    return D.order()


def order_by_commutators(D: SuperDiffOp, max_order: int | None = None) -> int:
    """Least k with every (k+1)-fold bracket against coordinate functions zero.

    Searches coordinate sequences with repetition level by level; distinct
    intermediate brackets are deduplicated.
    """
    chart = D.chart
    coords = [SuperDiffOp.mult(u) for u in chart.coordinates()]
    level = {D} if not D.is_zero() else set()
    k = -1
    while level:
        if max_order is not None and k >= max_order:
            raise OrderError(f"operator order exceeds {max_order}")
        nxt = set()
        for T in level:
            for U in coords:
                B = scommutator(T, U)
                if not B.is_zero():
                    nxt.add(B)
        level = nxt
        k += 1
    return k


# ---------------------------------------------------------------------------
# operator expressions and normalization


class OperatorExpr:
    """Syntax tree over multiplication and partial atoms."""

    def __add__(self, other):
        return SumExpr((self, other))

    def __matmul__(self, other):
        return ComposeExpr((self, other))

    def scale(self, c):
        return ScaleExpr(Fraction(c), self)


@dataclass(frozen=True, eq=True)
class MulExpr(OperatorExpr):
    f: Superfunction

    @property
    def chart(self):
        return self.f.chart


@dataclass(frozen=True, eq=True)
class PartialExpr(OperatorExpr):
    chart: Chart
    k: int


@dataclass(frozen=True, eq=True)
class SumExpr(OperatorExpr):
    terms: tuple

    @property
    def chart(self):
        return self.terms[0].chart


@dataclass(frozen=True, eq=True)
class ScaleExpr(OperatorExpr):
    c: Fraction
    inner: OperatorExpr

    @property
    def chart(self):
        return self.inner.chart


@dataclass(frozen=True, eq=True)
class ComposeExpr(OperatorExpr):
    factors: tuple

    @property
    def chart(self):
        return self.factors[0].chart


def expr_order_bound(E: OperatorExpr) -> int:
    if isinstance(E, MulExpr):
        return 0
    if isinstance(E, PartialExpr):
        return 1
    if isinstance(E, SumExpr):
        return max(expr_order_bound(t) for t in E.terms)
    if isinstance(E, ScaleExpr):
        return expr_order_bound(E.inner)
    if isinstance(E, ComposeExpr):
        return sum(expr_order_bound(t) for t in E.factors)
    raise TypeError(f"not an operator expression: {E!r}")


def evaluate_expr(E: OperatorExpr, f: Superfunction) -> Superfunction:
    """Act with the expression tree on f without normalizing it."""
    if isinstance(E, MulExpr):
        return E.f * f
    if isinstance(E, PartialExpr):
        return partial(f, E.k)
    if isinstance(E, SumExpr):
        out = f.chart.zero()
        for t in E.terms:
            out = out + evaluate_expr(t, f)
        return out
    if isinstance(E, ScaleExpr):
        return evaluate_expr(E.inner, f).scale(E.c)
    if isinstance(E, ComposeExpr):
        for t in reversed(E.factors):
            f = evaluate_expr(t, f)
        return f
    raise TypeError(f"not an operator expression: {E!r}")


def normal_form_rewrite(E: OperatorExpr) -> SuperDiffOp:
    if isinstance(E, MulExpr):
        return SuperDiffOp.mult(E.f)
    if isinstance(E, PartialExpr):
        return SuperDiffOp.partial(E.chart, E.k)
    if isinstance(E, SumExpr):
        out = SuperDiffOp.zero(E.chart)
        for t in E.terms:
            out = out + normal_form_rewrite(t)
        return out
    if isinstance(E, ScaleExpr):
        return normal_form_rewrite(E.inner).scale(E.c)
    if isinstance(E, ComposeExpr):
        out = normal_form_rewrite(E.factors[0])
        for t in E.factors[1:]:
            out = compose(out, normal_form_rewrite(t))
        return out
    raise TypeError(f"not an operator expression: {E!r}")


def extract_normal_form(
    chart: Chart, act: Callable[[Superfunction], Superfunction], max_order: int
) -> SuperDiffOp:
    """Recover coefficients from the action on probes (1/alpha!) x^alpha xi^beta.

    The degree-i coefficient at (alpha, beta) is act(m) minus the lower-order
    part already found, applied to the same probe.
    """
    found = SuperDiffOp.zero(chart)
    for i in range(max_order + 1):
        layer = {}
        for alpha, beta in multi_indices(chart.p, chart.q, i):
            m = probe_monomial(chart, alpha, beta)
            coeff = act(m) - apply(found, m)
            if coeff:
                layer[(alpha, beta)] = coeff
        found = found + SuperDiffOp._raw(chart, layer)
    return found


def normal_form_extract(E: OperatorExpr) -> SuperDiffOp:
    return extract_normal_form(E.chart, lambda f: evaluate_expr(E, f), expr_order_bound(E))


def normal_form(E: OperatorExpr, method: str = "rewrite") -> SuperDiffOp:
    if isinstance(E, SuperDiffOp):
        return E
    if method == "rewrite":
        return normal_form_rewrite(E)
    if method == "extract":
        return normal_form_extract(E)
    raise ValueError(f"unknown normalization method {method!r}")


# ---------------------------------------------------------------------------
# vector fields


class SuperVectorField:
    """X = sum_k f_k d_k with left coefficients f_k."""

    __slots__ = ("chart", "coeffs", "_hash")

    def __init__(self, chart: Chart, coeffs: Sequence[Superfunction] | None = None):
        self.chart = chart
        if coeffs is None:
            coeffs = [chart.zero()] * chart.dim
        coeffs = tuple(coeffs)
        if len(coeffs) != chart.dim:
            raise ValueError(f"need {chart.dim} coefficients, got {len(coeffs)}")
        for f in coeffs:
            if f.chart != chart:
                raise ChartMismatch(f"coefficient on chart {f.chart}, field on {chart}")
        self.coeffs = coeffs
        self._hash = None

    @classmethod
    def basis(cls, chart: Chart, k: int, f: Superfunction | None = None) -> "SuperVectorField":
        coeffs = [chart.zero()] * chart.dim
        coeffs[k] = chart.one() if f is None else f
        return cls(chart, coeffs)

    @classmethod
    def zero(cls, chart: Chart) -> "SuperVectorField":
        return cls(chart)

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.coeffs)

    def parity_parts(self):
        even, odd = [], []
        for k, f in enumerate(self.coeffs):
            fe, fo = f.parity_parts()
            if self.chart.is_odd(k):
                fe, fo = fo, fe
            even.append(fe)
            odd.append(fo)
        return SuperVectorField(self.chart, even), SuperVectorField(self.chart, odd)

    def parity(self):
        even, odd = self.parity_parts()
        if odd.is_zero():
            return 0
        if even.is_zero():
            return 1
        return None

    def __add__(self, other):
        if not isinstance(other, SuperVectorField):
            return NotImplemented
        _check_chart(self, other)
        return SuperVectorField(self.chart, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return SuperVectorField(self.chart, [-f for f in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, SuperVectorField):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "SuperVectorField":
        return SuperVectorField(self.chart, [f.scale(c) for f in self.coeffs])

    def left_mul(self, f: Superfunction) -> "SuperVectorField":
        """f . X  (the left module action)."""
        return SuperVectorField(self.chart, [f * g for g in self.coeffs])

    def __call__(self, f: Superfunction) -> Superfunction:
        if f.chart != self.chart:
            raise ChartMismatch(f"chart {f.chart} vs {self.chart}")
        out = self.chart.zero()
        for k, g in enumerate(self.coeffs):
            if g:
                out = out + g * partial(f, k)
        return out

    def to_op(self) -> SuperDiffOp:
        out = {}
        for k, f in enumerate(self.coeffs):
            if f.is_zero():
                continue
            out.update(SuperDiffOp.partial(self.chart, k).left_mul(f)._terms)
        return SuperDiffOp._raw(self.chart, out)

    @classmethod
    def from_op(cls, D: SuperDiffOp) -> "SuperVectorField":
        chart = D.chart
        coeffs = [chart.zero()] * chart.dim
        for (alpha, beta), f in D._terms.items():
            deg = sum(alpha) + len(beta)
            if deg != 1:
                raise OrderError("operator is not a vector field (needs pure first-order terms)")
            k = alpha.index(1) if sum(alpha) else chart.p + beta[0]
            coeffs[k] = f
        return cls(chart, coeffs)

    def right_coefficients(self) -> list:
        """g^k with X = sum_k d_k . g^k, where d_k . g = (-1)^{|u^k||g|} g d_k."""
        out = []
        for k, f in enumerate(self.coeffs):
            if self.chart.is_odd(k):
                fe, fo = f.parity_parts()
                out.append(fe - fo)
            else:
                out.append(f)
        return out

    @classmethod
    def from_right_coefficients(cls, chart: Chart, gs: Sequence[Superfunction]) -> "SuperVectorField":
        # the sign map g -> (-1)^{|u^k||g|} g is an involution
        return cls(chart, cls(chart, gs).right_coefficients())

    def __eq__(self, other):
        if not isinstance(other, SuperVectorField):
            return NotImplemented
        return self.chart == other.chart and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, self.coeffs))
        return self._hash

    def __repr__(self):
        from .printing import format_field

        return f"SuperVectorField({format_field(self)})"


def bracket(X: SuperVectorField, Y: SuperVectorField) -> SuperVectorField:
    """Supercommutator of vector fields, computed on operators."""
    return SuperVectorField.from_op(scommutator(X.to_op(), Y.to_op()))


def right_mul(X: SuperVectorField, f: Superfunction) -> SuperVectorField:
    """X . f = (-1)^{|X||f|} f X, bilinear over parity parts."""
    out = SuperVectorField.zero(X.chart)
    for i, Xi in enumerate(X.parity_parts()):
        for j, fj in enumerate(f.parity_parts()):
            if Xi.is_zero() or fj.is_zero():
                continue
            term = Xi.left_mul(fj)
            out = out + (-term if i * j else term)
    return out


@dataclass(frozen=True)
class D1Element:
    """m_f + X, the canonical splitting of a first-order operator."""

    f: Superfunction
    X: SuperVectorField

    @property
    def chart(self):
        return self.f.chart

    def to_op(self) -> SuperDiffOp:
        return SuperDiffOp.mult(self.f) + self.X.to_op()

    def __add__(self, other):
        return D1Element(self.f + other.f, self.X + other.X)

    def __sub__(self, other):
        return D1Element(self.f - other.f, self.X - other.X)

    def scale(self, c):
        return D1Element(self.f.scale(c), self.X.scale(c))

    def parity(self):
        pars = set()
        for part in (self.f, self.X):
            if part.is_zero():
                continue
            p = part.parity()
            if p is None:
                return None
            pars.add(p)
        if len(pars) > 1:
            return None
        return pars.pop() if pars else 0

    def is_zero(self):
        return self.f.is_zero() and self.X.is_zero()


def split_d1(D: SuperDiffOp) -> D1Element:
    if D.order() > 1:
        raise OrderError(f"splitting needs order <= 1, got {D.order()}")
    f = apply(D, D.chart.one())
    return D1Element(f, SuperVectorField.from_op(D - SuperDiffOp.mult(f)))


def d1_bracket(a: D1Element, b: D1Element) -> D1Element:
    return split_d1(scommutator(a.to_op(), b.to_op()))


def check_first_order_leibniz(D: SuperDiffOp, f: Superfunction, g: Superfunction) -> bool:
    """D(fg) == (Df)g + (-1)^{|D||f|} f(Dg) - (D1)fg for homogeneous D, f."""
    pD, pf = D.parity(), f.parity()
    if pD is None or pf is None:
        raise ValueError("D and f must be homogeneous")
    sign = -1 if pD * pf else 1
    lhs = apply(D, f * g)
    rhs = apply(D, f) * g + (f * apply(D, g)).scale(sign) - apply(D, D.chart.one()) * f * g
    return lhs == rhs


def check_ad_nilpotent_functions(f: Superfunction, g: Superfunction, D: SuperDiffOp) -> bool:
    """Truth of [m_f, [m_g, D]] == 0."""
    inner = scommutator(SuperDiffOp.mult(g), D)
    return scommutator(SuperDiffOp.mult(f), inner).is_zero()


# ---------------------------------------------------------------------------
# Euler grading and commutator decomposition


def euler_field(chart: Chart) -> SuperVectorField:
    if chart.q < 1:
        raise ValueError("the Euler field needs at least one odd coordinate")
    coeffs = [chart.zero()] * chart.p + [chart.coordinate(k) for k in range(chart.p, chart.dim)]
    return SuperVectorField(chart, coeffs)


def _field_terms(X: SuperVectorField):
    """(coordinate, single-term coefficient) pieces of X."""
    for k, f in enumerate(X.coeffs):
        for mono, c in f._terms.items():
            yield k, mono, c


def z_grading_decompose(X: SuperVectorField) -> list:
    """Split X into eigencomponents of ad(euler) as ``[(k, X_k), ...]``."""
    chart = X.chart
    if chart.q < 1:
        raise ValueError("the Euler grading needs at least one odd coordinate")
    parts: dict = {}
    for k, (alpha, beta), c in _field_terms(X):
        w = len(beta) - (1 if chart.is_odd(k) else 0)
        parts.setdefault(w, [dict() for _ in range(chart.dim)])[k][(alpha, beta)] = c
    return [
        (w, SuperVectorField(chart, [Superfunction(chart, t) for t in parts[w]]))
        for w in sorted(parts)
    ]


def commutator_decompose(X: SuperVectorField) -> list:
    """Pairs (X_i, Y_i) with sum [X_i, Y_i] == X.

    Nonzero Euler weights use X_k = [euler, X_k / k].  Weight zero uses an
    antiderivative in the first even coordinate, or, on purely odd charts,
    d_c(xi^c g) = g for an odd index c absent from g.
    """
    chart = X.chart
    if chart.p == 0 and chart.q < 2:
        raise DecompositionError(
            f"chart {chart}: xi d_xi is not a sum of brackets (the derived algebra is smaller)"
        )
    pairs = []
    if chart.q >= 1:
        graded = z_grading_decompose(X)
    else:
        graded = [(0, X)]
    for w, Xw in graded:
        if w != 0:
            pairs.append((euler_field(chart), Xw.scale(Fraction(1, w))))
            continue
        if chart.p >= 1:
            F = [antiderivative(f, 0) for f in Xw.coeffs]
            pairs.append((SuperVectorField.basis(chart, 0), SuperVectorField(chart, F)))
            continue
        for k, (alpha, beta), c in _field_terms(Xw):
            (b,) = beta  # weight zero on a 0|q chart: one odd factor
            cidx = next(a for a in range(chart.q) if a != b)
            xi_c = chart.coordinate(chart.p + cidx)
            g = Superfunction(chart, {(alpha, beta): c})
            partner = SuperVectorField.basis(chart, k, xi_c * g)
            pairs.append((SuperVectorField.basis(chart, chart.p + cidx), partner))
    return pairs


def resum_brackets(pairs: Iterable) -> SuperVectorField | None:
    total = None
    for A, B in pairs:
        br = bracket(A, B)
        total = br if total is None else total + br
    return total


__all__ = [
    "ComposeExpr",
    "D1Element",
    "DecompositionError",
    "MulExpr",
    "OperatorExpr",
    "OrderError",
    "PartialExpr",
    "ScaleExpr",
    "SumExpr",
    "SuperDiffOp",
    "SuperVectorField",
    "apply",
    "bracket",
    "check_ad_nilpotent_functions",
    "check_first_order_leibniz",
    "commutator_decompose",
    "compose",
    "d1_bracket",
    "euler_field",
    "evaluate_expr",
    "expr_order_bound",
    "extract_normal_form",
    "normal_form",
    "normal_form_extract",
    "normal_form_rewrite",
    "order",
    "order_by_commutators",
    "resum_brackets",
    "right_mul",
    "scommutator",
    "split_d1",
    "z_grading_decompose",
]
