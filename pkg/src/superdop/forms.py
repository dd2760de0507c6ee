"""Superdifferential 1-forms  w = sum_k du^k w_k  (coefficients on the right).

Component signs are pinned by one identity: pair(df, X) == X(f) for all X, f.
The de Rham differential has parity 0, so du^k has the parity of u^k.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .algebra import Chart, ChartMismatch, Superfunction, partial, total_degree_decompose
from .operators import SuperVectorField


class NotClosedError(ValueError):
    """The 1-form fails the closedness condition."""


class FormParityError(ValueError):
    """An even 1-form was required."""


class SuperOneForm:
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
                raise ChartMismatch(f"coefficient on chart {f.chart}, form on {chart}")
        self.coeffs = coeffs
        self._hash = None

    @classmethod
    def zero(cls, chart: Chart) -> "SuperOneForm":
        return cls(chart)

    @classmethod
    def basis(cls, chart: Chart, k: int, f: Superfunction | None = None) -> "SuperOneForm":
        coeffs = [chart.zero()] * chart.dim
        coeffs[k] = chart.one() if f is None else f
        return cls(chart, coeffs)

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
        return SuperOneForm(self.chart, even), SuperOneForm(self.chart, odd)

    def parity(self):
        even, odd = self.parity_parts()
        if odd.is_zero():
            return 0
        if even.is_zero():
            return 1
        return None

    def is_even(self) -> bool:
        return self.parity() == 0

    def __add__(self, other):
        if not isinstance(other, SuperOneForm):
            return NotImplemented
        if other.chart != self.chart:
            raise ChartMismatch(f"chart {self.chart} vs {other.chart}")
        return SuperOneForm(self.chart, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return SuperOneForm(self.chart, [-f for f in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SuperOneForm":
        return SuperOneForm(self.chart, [f.scale(c) for f in self.coeffs])

    def __eq__(self, other):
        if not isinstance(other, SuperOneForm):
            return NotImplemented
        return self.chart == other.chart and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, self.coeffs))
        return self._hash

    def __repr__(self):
        from .printing import format_form

        return f"SuperOneForm({format_form(self)})"


def de_rham(f: Superfunction) -> SuperOneForm:
    """df with (df)_k = d_k f."""
    return SuperOneForm(f.chart, [partial(f, k) for k in range(f.chart.dim)])


def pair(w: SuperOneForm, X: SuperVectorField) -> Superfunction:
    """i_w(X) = sum_k w_k g^k for X = sum_k d_k . g^k.

    For even w this is the plain contraction.  An odd part of w passes g^k
    with the Koszul sign (-1)^{|g^k|}, which keeps pair(df, X) == X(f) for
    odd f as well.
    """
    if w.chart != X.chart:
        raise ChartMismatch(f"chart {w.chart} vs {X.chart}")
    chart = w.chart
    out = chart.zero()
    for k, g in enumerate(X.right_coefficients()):
        if g.is_zero() or w.coeffs[k].is_zero():
            continue
        we, wo = w.coeffs[k].parity_parts()
        if chart.is_odd(k):
            # the component parity of du^k w_k flips with u^k
            we, wo = wo, we
        # we: part of w_k belonging to the even form
        ge, go = g.parity_parts()
        odd_form_part = wo
        out = out + we * g + odd_form_part * (ge - go)
    return out


def is_closed(w: SuperOneForm) -> bool:
    """d_i w_j - (-1)^{|u^i||u^j|} d_j w_i == 0 for all i <= j."""
    chart = w.chart
    for i in range(chart.dim):
        for j in range(i, chart.dim):
            sign = -1 if chart.is_odd(i) and chart.is_odd(j) else 1
            lhs = partial(w.coeffs[j], i) - partial(w.coeffs[i], j).scale(sign)
            if lhs:
                return False
    return True


def euler_total(chart: Chart) -> SuperVectorField:
    """sum_k u^k d_k, weighting each monomial by its total degree."""
    return SuperVectorField(chart, chart.coordinates())


def poincare_primitive(w: SuperOneForm) -> Superfunction:
    """The even f with df == w and zero constant term.

    Contract w against the total Euler field; the weight-n part of the
    result is n times the weight-n part of the primitive.
    """
    if not w.is_even():
        raise FormParityError("poincare_primitive needs an even 1-form")
    if not is_closed(w):
        raise NotClosedError("1-form is not closed")
    h = pair(w, euler_total(w.chart))
    f = w.chart.zero()
    for weight, part in total_degree_decompose(h).items():
        if weight == 0:
            raise AssertionError("contraction with the Euler field has no constant part")
        f = f + part.scale(Fraction(1, weight))
    if de_rham(f) != w:
        raise AssertionError("primitive failed the d(f) == w postcondition")
    return f


__all__ = [
    "FormParityError",
    "NotClosedError",
    "SuperOneForm",
    "de_rham",
    "euler_total",
    "is_closed",
    "pair",
    "poincare_primitive",
]
