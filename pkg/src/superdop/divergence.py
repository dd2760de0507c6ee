"""Generalized divergences: even 1-cocycles of vector fields valued in functions.

Every such cocycle on a chart is stored in classified form (a, w):

    gamma(X) = a * candiv(X) + pair(w, X)

with a rational and w a closed even 1-form.  Raw cocycles given as black
boxes enter through ``classify_cocycle``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Callable

from .algebra import Chart, ChartMismatch, Superfunction, koszul_sort, partial
from .forms import (
    FormParityError,
    NotClosedError,
    SuperOneForm,
    de_rham,
    is_closed,
    pair,
    poincare_primitive,
)
from .operators import SuperVectorField, bracket, right_mul


class NotAVolumeError(ValueError):
    """Berezinian coefficient is not even and invertible."""


class ClassificationError(ValueError):
    """Probe values are inconsistent with a cocycle of the form a*candiv + i_w."""


class MorphismTypeError(ValueError):
    """The morphism is outside the bundle-type class."""


def candiv(X: SuperVectorField) -> Superfunction:
    """Coordinate divergence: sum_k d_k g^k for X = sum_k d_k . g^k."""
    out = X.chart.zero()
    for k, g in enumerate(X.right_coefficients()):
        if g:
            out = out + partial(g, k)
    return out


@dataclass(frozen=True)
class GeneralizedDivergence:
    a: Fraction
    omega: SuperOneForm
    checked: bool = True

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        if self.checked:
            if not self.omega.is_even():
                raise FormParityError("generalized divergence needs an even 1-form")
            if not is_closed(self.omega):
                raise NotClosedError("generalized divergence needs a closed 1-form")

    @classmethod
    def unchecked(cls, a, omega: SuperOneForm) -> "GeneralizedDivergence":
        """Skip validation; used to build falsification witnesses."""
        return cls(a, omega, checked=False)

    @classmethod
    def canonical(cls, chart: Chart) -> "GeneralizedDivergence":
        return cls(1, SuperOneForm.zero(chart))

    @property
    def chart(self) -> Chart:
        return self.omega.chart

    def is_divergence(self) -> bool:
        return self.a == 1

    def __call__(self, X: SuperVectorField) -> Superfunction:
        return apply_gd(self, X)

    def __eq__(self, other):
        if not isinstance(other, GeneralizedDivergence):
            return NotImplemented
        return self.a == other.a and self.omega == other.omega

    def __hash__(self):
        return hash((self.a, self.omega))


def apply_gd(gamma: GeneralizedDivergence, X: SuperVectorField) -> Superfunction:
    if gamma.chart != X.chart:
        raise ChartMismatch(f"chart {gamma.chart} vs {X.chart}")
    out = pair(gamma.omega, X)
    if gamma.a:
        out = out + candiv(X).scale(gamma.a)
    return out


def verify_cocycle(gamma: Callable, X: SuperVectorField, Y: SuperVectorField) -> bool:
    """gamma([X,Y]) == X(gamma(Y)) - (-1)^{|X||Y|} Y(gamma(X)) for homogeneous X, Y."""
    px, py = X.parity(), Y.parity()
    if px is None or py is None:
        raise ValueError("cocycle check needs homogeneous fields")
    sign = -1 if px * py else 1
    lhs = gamma(bracket(X, Y))
    rhs = X(gamma(Y)) - Y(gamma(X)).scale(sign)
    return lhs == rhs


def verify_gdiv_law(gamma: GeneralizedDivergence, X: SuperVectorField, f: Superfunction) -> bool:
    """gamma(X . f) == gamma(X) f + a X(f)."""
    lhs = apply_gd(gamma, right_mul(X, f))
    rhs = apply_gd(gamma, X) * f + X(f).scale(gamma.a)
    return lhs == rhs


def probe_fields(chart: Chart) -> list:
    """Homogeneous probes: coordinate fields d_k and linear fields u^i d_j."""
    out = [SuperVectorField.basis(chart, k) for k in range(chart.dim)]
    for i in range(chart.dim):
        for j in range(chart.dim):
            out.append(SuperVectorField.basis(chart, j, chart.coordinate(i)))
    return out


def find_cocycle_witness(gamma: Callable, chart: Chart, rng: random.Random | None = None, trials: int = 50):
    """First pair (X, Y) violating the cocycle identity, or None.

    Probe pairs are scanned first, then random homogeneous pairs.
    """
    from .randgen import random_field, random_parity

    probes = probe_fields(chart)
    for X in probes:
        for Y in probes:
            if not verify_cocycle(gamma, X, Y):
                return X, Y
    rng = rng or random.Random(0)
    for _ in range(trials):
        X = random_field(rng, chart, random_parity(rng, chart))
        Y = random_field(rng, chart, random_parity(rng, chart))
        if not verify_cocycle(gamma, X, Y):
            return X, Y
    return None


def classify_cocycle(
    gamma_raw: Callable[[SuperVectorField], Superfunction],
    chart: Chart,
    rng: random.Random | None = None,
    trials: int = 20,
) -> GeneralizedDivergence:
    """Recover (a, w) from a black-box even cocycle.

    w_k = gamma(d_k) and a = gamma(d_k . u^k) - w_k u^k, which must be the
    same constant for every k.  The result is then checked against the black
    box on ``trials`` random fields.
    """
    from .randgen import random_field, random_parity

    probes = probe_fields(chart)
    basis = probes[: chart.dim]
    for X in probes:
        for Y in basis:
            if not verify_cocycle(gamma_raw, X, Y):
                raise ClassificationError(f"cocycle identity fails on probe pair ({X}, {Y})")
    omega = SuperOneForm(chart, [gamma_raw(d) for d in basis])
    a_values = set()
    for k, d in enumerate(basis):
        u = chart.coordinate(k)
        ak = gamma_raw(right_mul(d, u)) - omega.coeffs[k] * u
        if not ak.is_constant():
            raise ClassificationError(f"probe along {chart.names[k]} gives non-constant a = {ak}")
        a_values.add(ak.constant_term())
    if len(a_values) > 1:
        raise ClassificationError(f"probes disagree on a: {sorted(a_values)}")
    a = a_values.pop() if a_values else Fraction(0)
    try:
        gamma = GeneralizedDivergence(a, omega)
    except (NotClosedError, FormParityError) as exc:
        raise ClassificationError(str(exc)) from exc
    rng = rng or random.Random(0)
    for _ in range(trials):
        X = random_field(rng, chart, random_parity(rng, chart))
        if apply_gd(gamma, X) != gamma_raw(X):
            raise ClassificationError(f"classified cocycle disagrees with input on {X}")
    return gamma


def is_coboundary(gamma: GeneralizedDivergence):
    """The even f with gamma(X) == X(f), or None when a != 0."""
    if gamma.a != 0:
        return None
    return poincare_primitive(gamma.omega)


def coboundary(f: Superfunction) -> GeneralizedDivergence:
    return GeneralizedDivergence(0, de_rham(f))


def rescale_divergence(gamma: GeneralizedDivergence, g: Superfunction) -> GeneralizedDivergence:
    """Divergence of the volume rescaled by exp(g): adds dg to w."""
    if gamma.a != 1:
        raise ValueError("rescaling applies to divergences (a == 1)")
    if g.parity() != 0:
        raise FormParityError("rescaling exponent must be even")
    return GeneralizedDivergence(1, gamma.omega + de_rham(g))


# ---------------------------------------------------------------------------
# Berezinian sections


@dataclass(frozen=True)
class BerezinianSection:
    """s = d^{p|q}u . rho, acting on f by Berezin integration of rho f."""

    rho: Superfunction

    @property
    def chart(self) -> Chart:
        return self.rho.chart

    @classmethod
    def coordinate_volume(cls, chart: Chart) -> "BerezinianSection":
        return cls(chart.one())

    def is_volume(self) -> bool:
        return self.rho.parity() == 0 and self.rho.is_invertible()

    def scale(self, f: Superfunction) -> "BerezinianSection":
        return BerezinianSection(self.rho * f)


def berezin_integral(f: Superfunction) -> Superfunction:
    """d_{xi^q} o ... o d_{xi^1} f: the top odd coefficient, a function of x."""
    chart = f.chart
    for a in range(chart.q):
        f = partial(f, chart.p + a)
    return f


def berezin_transpose(rho: Superfunction, X: SuperVectorField) -> Superfunction:
    """sigma with  int rho X(f) = -int sigma f  up to total x-derivatives.

    Moves each partial across by parts: int h d_k f = -(-1)^{|u^k||h|} int (d_k h) f.
    """
    chart = X.chart
    out = chart.zero()
    for k, fk in enumerate(X.coeffs):
        h = rho * fk
        if h.is_zero():
            continue
        if chart.is_odd(k):
            he, ho = h.parity_parts()
            h = he - ho
        out = out + partial(h, k)
    return out


def div_from_berezinian(s: BerezinianSection, X: SuperVectorField) -> Superfunction:
    """gamma_s(X) from  L_X s = (-1)^{|X||s|} s . gamma_s(X).

    With L_X s = -(-1)^{|X||s|} s o X and s o X = -d^{p|q}u . berezin_transpose,
    the Koszul factors cancel and rho . gamma = transpose, solved by rho^{-1}.
    """
    if s.chart != X.chart:
        raise ChartMismatch(f"chart {s.chart} vs {X.chart}")
    if not s.is_volume():
        raise NotAVolumeError("Berezinian section is not a volume (needs even invertible rho)")
    return s.rho.inverse() * berezin_transpose(s.rho, X)


def _det(matrix) -> Superfunction:
    """Leibniz determinant over a commuting (even) entry ring."""
    n = len(matrix)
    chart = matrix[0][0].chart
    total = chart.zero()
    for perm in permutations(range(n)):
        sign, _ = koszul_sort(perm)
        term = chart.one()
        for i, j in enumerate(perm):
            term = term * matrix[i][j]
            if term.is_zero():
                break
        total = total + term.scale(sign)
    return total


def bundle_type_data(phi):
    """(jacobian of the even images, odd coefficient matrix a^a_b) for a bundle-type map."""
    chart = phi.source
    if phi.target != chart:
        raise MorphismTypeError("Berezinian transform needs a chart automorphism")
    p, q = chart.p, chart.q
    jac = []
    for i in range(p):
        img = phi.images[i]
        if any(beta for (_, beta) in img.terms):
            raise MorphismTypeError(f"even image of {chart.names[i]} depends on odd coordinates")
        jac.append([partial(img, j) for j in range(p)])
    amat = []
    for a in range(q):
        img = phi.images[p + a]
        row = [dict() for _ in range(q)]
        for (alpha, beta), c in img.terms.items():
            if len(beta) != 1:
                raise MorphismTypeError(f"odd image of {chart.names[p + a]} is not linear in the odd coordinates")
            row[beta[0]][(alpha, ())] = c
        amat.append([Superfunction(chart, r) for r in row])
    return jac, amat


def berezinian_transform(s: BerezinianSection, phi) -> BerezinianSection:
    """Multiply the coefficient by det(dy/dx) * det(a)^{-1} for a bundle-type phi."""
    jac, amat = bundle_type_data(phi)
    chart = s.chart
    det_j = _det(jac) if jac else chart.one()
    det_a = _det(amat) if amat else chart.one()
    if not det_a.is_constant() or det_a.is_zero():
        raise MorphismTypeError("odd frame determinant must be a nonzero constant")
    return BerezinianSection(s.rho * det_j.scale(1 / det_a.constant_term()))


__all__ = [
    "BerezinianSection",
    "ClassificationError",
    "GeneralizedDivergence",
    "MorphismTypeError",
    "NotAVolumeError",
    "apply_gd",
    "berezin_integral",
    "berezin_transpose",
    "berezinian_transform",
    "bundle_type_data",
    "candiv",
    "classify_cocycle",
    "coboundary",
    "div_from_berezinian",
    "find_cocycle_witness",
    "is_coboundary",
    "probe_fields",
    "rescale_divergence",
    "verify_cocycle",
    "verify_gdiv_law",
]


