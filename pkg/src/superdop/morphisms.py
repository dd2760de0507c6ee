"""Chart morphisms, pushforwards and automorphisms of first-order operators.

A ``ChartMorphism`` is given by the images of the source coordinates as
functions on the target chart, plus an explicit inverse.  Pulling back
substitutes images; pushing an operator forward conjugates it,
``phi_* D = (phi^*)^{-1} o D o phi^*``, and re-extracts the normal form.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .algebra import Chart, ChartMismatch, ParityError, Superfunction, substitute
from .divergence import (
    ClassificationError,
    GeneralizedDivergence,
    candiv,
    classify_cocycle,
    probe_fields,
)
from .forms import SuperOneForm, pair
from .operators import (
    D1Element,
    SuperDiffOp,
    SuperVectorField,
    d1_bracket,
    extract_normal_form,
    scommutator,
)


class NotInvertibleError(ValueError):
    """Supplied inverse does not invert the morphism."""


class ExceptionalChartError(ValueError):
    """Exceptional automorphism requested on the wrong chart."""


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check; falsy on failure, with the offending input."""

    ok: bool
    witness: object = None
    detail: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class ChartMorphism:
    source: Chart
    target: Chart
    images: tuple
    inverse_images: tuple

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "inverse_images", tuple(self.inverse_images))
        _check_images(self.source, self.target, self.images)
        _check_images(self.target, self.source, self.inverse_images)
        for k in range(self.source.dim):
            if substitute(self.images[k], self.inverse_images) != self.source.coordinate(k):
                raise NotInvertibleError(f"round trip fails on {self.source.names[k]}")
        for j in range(self.target.dim):
            if substitute(self.inverse_images[j], self.images) != self.target.coordinate(j):
                raise NotInvertibleError(f"round trip fails on {self.target.names[j]}")

    @classmethod
    def identity(cls, chart: Chart) -> "ChartMorphism":
        coords = tuple(chart.coordinates())
        return cls(chart, chart, coords, coords)

    def inverse(self) -> "ChartMorphism":
        return ChartMorphism(self.target, self.source, self.inverse_images, self.images)

    def is_identity(self) -> bool:
        return self.source == self.target and all(
            img == self.source.coordinate(k) for k, img in enumerate(self.images)
        )


def _check_images(src: Chart, tgt: Chart, images: Sequence[Superfunction]) -> None:
    if len(images) != src.dim:
        raise ValueError(f"need {src.dim} images, got {len(images)}")
    for k, img in enumerate(images):
        if img.chart != tgt:
            raise ChartMismatch(f"image of {src.names[k]} is not on chart {tgt}")
        if img.is_zero():
            continue
        if img.parity() != src.parity(k):
            raise ParityError(
                f"image of {'odd' if src.is_odd(k) else 'even'} coordinate {src.names[k]} has the wrong parity"
            )


def compose_morphisms(phi: ChartMorphism, psi: ChartMorphism) -> ChartMorphism:
    """phi o psi, whose pullback is psi^* o phi^*."""
    if phi.target != psi.source:
        raise ChartMismatch("morphisms are not composable")
    images = [substitute(img, psi.images) for img in phi.images]
    inverse = [substitute(img, phi.inverse_images) for img in psi.inverse_images]
    return ChartMorphism(phi.source, psi.target, images, inverse)


def pullback(phi: ChartMorphism, f: Superfunction) -> Superfunction:
    if f.chart != phi.source:
        raise ChartMismatch(f"function on chart {f.chart}, morphism from {phi.source}")
    return substitute(f, phi.images)


def pushforward_op(phi: ChartMorphism, D: SuperDiffOp) -> SuperDiffOp:
    """(phi^*)^{-1} o D o phi^*, re-extracted into normal form."""
    if D.chart != phi.target:
        raise ChartMismatch(f"operator on chart {D.chart}, morphism into {phi.target}")
    if phi.is_identity():
        return D
    inv = phi.inverse()

    def act(f):
        return pullback(inv, D(pullback(phi, f)))

    return extract_normal_form(phi.source, act, D.order())


def pushforward_field(phi: ChartMorphism, X: SuperVectorField) -> SuperVectorField:
    if phi.is_identity():
        return X
    return SuperVectorField.from_op(pushforward_op(phi, X.to_op()))


# ---------------------------------------------------------------------------
# automorphisms of D^1


@dataclass(frozen=True)
class D1Automorphism:
    """f + X  ->  phi_*(X) + (phi^{-1})^*(kappa f + a candiv(X) + i_w(X))."""

    phi: ChartMorphism
    kappa: Fraction
    a: Fraction
    omega: SuperOneForm
    checked: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kappa", Fraction(self.kappa))
        object.__setattr__(self, "a", Fraction(self.a))
        if self.phi.source != self.phi.target:
            raise ChartMismatch("automorphism needs phi from a chart to itself")
        if self.omega.chart != self.phi.source:
            raise ChartMismatch("1-form and morphism live on different charts")
        if self.checked:
            if self.kappa == 0:
                raise ValueError("kappa must be nonzero (kappa = 0 kills the functions)")
            # raises on odd or non-closed w
            GeneralizedDivergence(self.a, self.omega)

    @classmethod
    def unchecked(cls, phi, kappa, a, omega) -> "D1Automorphism":
        return cls(phi, kappa, a, omega, checked=False)

    @property
    def chart(self) -> Chart:
        return self.phi.source

    def cocycle(self) -> Callable[[SuperVectorField], Superfunction]:
        return lambda X: candiv(X).scale(self.a) + pair(self.omega, X)

    def __call__(self, e: D1Element) -> D1Element:
        return d1_auto_apply(self, e)

    def inverse(self, rng: random.Random | None = None) -> "D1Automorphism":
        """Explicit inverse; the transported cocycle is re-classified into (a', w')."""
        phi_inv = self.phi.inverse()
        kappa = self.kappa
        gamma = self.cocycle()

        def gamma_inv(Y):
            X = pushforward_field(phi_inv, Y)
            return pullback(phi_inv, gamma(X)).scale(-1 / kappa)

        cls_gd = classify_cocycle(gamma_inv, self.chart, rng=rng, trials=5)
        return D1Automorphism(phi_inv, 1 / kappa, cls_gd.a, cls_gd.omega)


def d1_auto_apply(Phi: D1Automorphism, e: D1Element) -> D1Element:
    if e.chart != Phi.chart:
        raise ChartMismatch(f"element on chart {e.chart}, automorphism on {Phi.chart}")
    scalar = e.f.scale(Phi.kappa) + Phi.cocycle()(e.X)
    inv = Phi.phi.inverse()
    return D1Element(pullback(inv, scalar), pushforward_field(Phi.phi, e.X))


def d1_probes(chart: Chart) -> list:
    """Homogeneous probe elements: 1, coordinates, and the probe fields."""
    zero_f = chart.zero()
    zero_X = SuperVectorField.zero(chart)
    out = [D1Element(chart.one(), zero_X)]
    out += [D1Element(u, zero_X) for u in chart.coordinates()]
    out += [D1Element(zero_f, X) for X in probe_fields(chart)]
    return out


def verify_d1_automorphism(Phi: D1Automorphism, trials: int = 100, rng: random.Random | None = None) -> Verdict:
    """Bracket preservation on probes and random pairs, then bijectivity."""
    from .randgen import random_d1

    chart = Phi.chart
    rng = rng or random.Random(0)
    probes = d1_probes(chart)
    for e in probes[: 1 + chart.dim]:
        if Phi(e).is_zero():
            return Verdict(False, e, "nonzero function mapped to zero")
    pairs = [(a, b) for a in probes for b in probes[: 1 + 2 * chart.dim]]
    pairs += [(random_d1(rng, chart), random_d1(rng, chart)) for _ in range(trials)]
    for a, b in pairs:
        if Phi(d1_bracket(a, b)) != d1_bracket(Phi(a), Phi(b)):
            return Verdict(False, (a, b), "bracket not preserved")
    try:
        inv = Phi.inverse(rng)
    except (ClassificationError, ValueError) as exc:
        return Verdict(False, None, f"no inverse: {exc}")
    for e in probes + [random_d1(rng, chart) for _ in range(5)]:
        if inv(Phi(e)) != e or Phi(inv(e)) != e:
            return Verdict(False, e, "inverse does not compose to the identity")
    return Verdict(True, inv, f"{len(pairs)} bracket pairs preserved; inverse verified")


def intertwiner_scalar(c: Callable[[Superfunction], Superfunction], chart: Chart):
    """lambda with c(f) == lambda f on the probes {1, x1, xi1, xi1 xi2}, else None."""
    probes = [chart.one()]
    if chart.p:
        probes.append(chart.coordinate(0))
    if chart.q:
        probes.append(chart.coordinate(chart.p))
    if chart.q >= 2:
        probes.append(chart.coordinate(chart.p) * chart.coordinate(chart.p + 1))
    lam = c(chart.one()).constant_term()
    for f in probes:
        if c(f) != f.scale(lam):
            return None
    return lam


def acts_as_identity_on_odd(X: SuperVectorField) -> bool:
    """X(h xi^a) == h xi^a on linear odd probes (the canonical Euler normalization)."""
    chart = X.chart
    weights = [chart.one()] + ([chart.coordinate(0)] if chart.p else [])
    for a in range(chart.p, chart.dim):
        for h in weights:
            f = h * chart.coordinate(a)
            if X(f) != f:
                return False
    return True


# ---------------------------------------------------------------------------
# exceptional maps in dimensions 0|1, 1|1, 0|2


def _require(chart: Chart, p: int, q: int):
    if (chart.p, chart.q) != (p, q):
        raise ExceptionalChartError(f"needs a {p}|{q} chart, got {chart}")


def d1_basis_0_1(chart: Chart) -> list:
    """Operators 1, xi, d_xi, xi d_xi spanning D^1 of a 0|1 chart."""
    _require(chart, 0, 1)
    xi = chart.coordinate(0)
    d = SuperDiffOp.partial(chart, 0)
    return [SuperDiffOp.identity(chart), SuperDiffOp.mult(xi), d, d.left_mul(xi)]


def exceptional_0_1(chart: Chart) -> Callable[[SuperDiffOp], SuperDiffOp]:
    """xi d_xi -> -xi d_xi, d_xi <-> xi, 1 -> 1 on D^1 of a 0|1 chart."""
    _require(chart, 0, 1)
    one, xi, d, e = d1_basis_0_1(chart)

    def coords(D: SuperDiffOp):
        if D.order() > 1:
            raise ValueError("exceptional 0|1 map acts on first-order operators")
        c = [Fraction(0)] * 4
        for (alpha, beta), f in D.terms.items():
            for (_, fb), v in f.terms.items():
                slot = {((), ()): 0, ((0,), ()): 1, ((), (0,)): 2, ((0,), (0,)): 3}[(fb, beta)]
                c[slot] += v
        return c

    def T(D: SuperDiffOp) -> SuperDiffOp:
        c0, c1, c2, c3 = coords(D)
        return one.scale(c0) + d.scale(c1) + xi.scale(c2) + e.scale(-c3)

    return T


def exceptional_1_1(chart: Chart) -> Callable[[SuperVectorField], SuperVectorField]:
    """On (t | xi):  h d_xi -> h xi d_t,  h xi d_t -> h d_xi,
    h d_t + f xi d_xi -> h d_t + (h' - f) xi d_xi."""
    _require(chart, 1, 1)
    from .algebra import partial

    xi = chart.coordinate(1)

    def split(f: Superfunction):
        body, odd = {}, {}
        for (alpha, beta), c in f.terms.items():
            (odd if beta else body)[(alpha, ())] = c
        return Superfunction(chart, body), Superfunction(chart, odd)

    def T(X: SuperVectorField) -> SuperVectorField:
        if X.chart != chart:
            raise ChartMismatch(f"field on chart {X.chart}")
        h, b = split(X.coeffs[0])  # coefficient of d_t: h + b xi
        c, f = split(X.coeffs[1])  # coefficient of d_xi: c + f xi
        return SuperVectorField(chart, [h + c * xi, b + (partial(h, 0) - f) * xi])

    return T


# odd-part normalization of the 0|2 map; the only +/-1 choices closing the table
EXCEPTIONAL_0_2_ODD = {"d_a -> xi1 xi2 d_a": 1, "xi1 xi2 d_a -> d_a": 1}


def field_basis_0_2(chart: Chart) -> list:
    """xi1 d1, xi1 d2, xi2 d1, xi2 d2, d1, d2, xi1 xi2 d1, xi1 xi2 d2."""
    _require(chart, 0, 2)
    x1, x2 = chart.coordinates()
    B = SuperVectorField.basis
    return [B(chart, 0, x1), B(chart, 1, x1), B(chart, 0, x2), B(chart, 1, x2),
            B(chart, 0), B(chart, 1), B(chart, 0, x1 * x2), B(chart, 1, x1 * x2)]


def exceptional_0_2(chart: Chart) -> Callable[[SuperVectorField], SuperVectorField]:
    """Fix sl(2), send the Euler field to its negative, swap d_a with xi1 xi2 d_a."""
    _require(chart, 0, 2)
    basis = field_basis_0_2(chart)
    s_deg_minus, s_deg_plus = EXCEPTIONAL_0_2_ODD.values()
    # xi1 d1 = (eps + h)/2 -> (-eps + h)/2 = -xi2 d2, and symmetrically
    images = [basis[3].scale(-1), basis[1], basis[2], basis[0].scale(-1),
              basis[6].scale(s_deg_minus), basis[7].scale(s_deg_minus),
              basis[4].scale(s_deg_plus), basis[5].scale(s_deg_plus)]
    keys = [(0, (0,)), (1, (0,)), (0, (1,)), (1, (1,)), (0, ()), (1, ()), (0, (0, 1)), (1, (0, 1))]

    def T(X: SuperVectorField) -> SuperVectorField:
        if X.chart != chart:
            raise ChartMismatch(f"field on chart {X.chart}")
        out = SuperVectorField.zero(chart)
        for img, (k, beta) in zip(images, keys):
            c = X.coeffs[k].terms.get(((), beta), 0)
            if c:
                out = out + img.scale(c)
        return out

    return T


def check_bracket_table(T: Callable, basis: Sequence, bracket_fn: Callable) -> Verdict:
    """T[b_i, b_j] == [T b_i, T b_j] for every basis pair."""
    for bi in basis:
        for bj in basis:
            if T(bracket_fn(bi, bj)) != bracket_fn(T(bi), T(bj)):
                return Verdict(False, (bi, bj), "bracket table does not close")
    return Verdict(True, None, f"{len(basis) ** 2} basis brackets preserved")


def extension_failure_witness(T: Callable[[SuperVectorField], SuperVectorField], chart: Chart):
    """A pair (X, f) where (f, X) -> (f, T X) breaks [X, f] = X(f), or None."""
    fields = probe_fields(chart)
    funcs = [chart.one()] + chart.coordinates()
    for X in fields:
        for f in funcs:
            lhs = X(f)  # image of [X, f] under the identity on functions
            rhs = scommutator(T(X).to_op(), SuperDiffOp.mult(f))
            if SuperDiffOp.mult(lhs) != rhs:
                return X, f
    return None


def exceptional_checks(chart: Chart, trials: int = 100, rng: random.Random | None = None) -> list:
    """Named verdicts certifying the exceptional map of a 0|1, 1|1 or 0|2 chart."""
    from .operators import bracket, euler_field
    from .printing import format_field, format_function, format_operator
    from .randgen import random_field

    rng = rng or random.Random(0)
    dims = (chart.p, chart.q)
    out = []
    if dims == (0, 1):
        T = exceptional_0_1(chart)
        basis = d1_basis_0_1(chart)
        out.append(("brackets on the basis of D^1", check_bracket_table(T, basis, scommutator)))
        image = T(SuperDiffOp.mult(chart.coordinate(0)))
        off = image.order() == 1
        out.append(("functions not preserved", Verdict(off, image, f"xi maps to {format_operator(image)}")))
        return out
    if dims == (1, 1):
        T = exceptional_1_1(chart)
        pairs = [
            (random_field(rng, chart, rng.randint(0, 1)), random_field(rng, chart, rng.randint(0, 1)))
            for _ in range(trials)
        ]
        bad = next(((X, Y) for X, Y in pairs if T(bracket(X, Y)) != bracket(T(X), T(Y))), None)
        out.append(("brackets on random pairs", Verdict(bad is None, bad, f"{trials} pairs")))
        bad = next((X for X, _ in pairs if T(T(X)) != X), None)
        out.append(("involution", Verdict(bad is None, bad, f"{trials} fields")))
        e = euler_field(chart)
        out.append(("xi d_xi -> -xi d_xi", Verdict(T(e) == -e, T(e), f"image {format_field(T(e))}")))
        w = extension_failure_witness(T, chart)
        detail = "none found" if w is None else f"[{format_field(w[0])}, {format_function(w[1])}] is not preserved"
        out.append(("no extension to D^1", Verdict(w is not None, w, detail)))
        return out
    if dims == (0, 2):
        T = exceptional_0_2(chart)
        basis = field_basis_0_2(chart)
        out.append(("8x8 bracket table", check_bracket_table(T, basis, bracket)))
        sl2 = [basis[1], basis[2], basis[0] - basis[3]]
        bad = next((X for X in sl2 if T(X) != X), None)
        out.append(("sl(2) fixed", Verdict(bad is None, bad, "xi1 d2, xi2 d1, xi1 d1 - xi2 d2")))
        e = euler_field(chart)
        out.append(("euler field negated", Verdict(T(e) == -e, T(e), f"image {format_field(T(e))}")))
        return out
    raise ExceptionalChartError(f"no exceptional automorphism on chart {chart}")


def exceptional_map(chart: Chart) -> Callable:
    dims = (chart.p, chart.q)
    table = {(0, 1): exceptional_0_1, (1, 1): exceptional_1_1, (0, 2): exceptional_0_2}
    if dims not in table:
        raise ExceptionalChartError(f"no exceptional automorphism on chart {chart}")
    return table[dims](chart)


__all__ = [
    "ChartMorphism",
    "D1Automorphism",
    "EXCEPTIONAL_0_2_ODD",
    "ExceptionalChartError",
    "NotInvertibleError",
    "Verdict",
    "acts_as_identity_on_odd",
    "check_bracket_table",
    "compose_morphisms",
    "d1_auto_apply",
    "d1_basis_0_1",
    "d1_probes",
    "exceptional_0_1",
    "exceptional_0_2",
    "exceptional_1_1",
    "exceptional_checks",
    "exceptional_map",
    "extension_failure_witness",
    "field_basis_0_2",
    "intertwiner_scalar",
    "pullback",
    "pushforward_field",
    "pushforward_op",
    "verify_d1_automorphism",
]

