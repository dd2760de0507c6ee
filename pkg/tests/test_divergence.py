import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from superdop.algebra import Chart, Superfunction, partial
from superdop.divergence import (
    BerezinianSection,
    ClassificationError,
    GeneralizedDivergence,
    MorphismTypeError,
    NotAVolumeError,
    apply_gd,
    berezin_integral,
    berezin_transpose,
    berezinian_transform,
    candiv,
    classify_cocycle,
    coboundary,
    div_from_berezinian,
    find_cocycle_witness,
    is_coboundary,
    rescale_divergence,
    verify_cocycle,
    verify_gdiv_law,
)
from superdop.forms import FormParityError, NotClosedError, SuperOneForm, de_rham
from superdop.morphisms import ChartMorphism
from superdop.operators import SuperVectorField, euler_field
from superdop.randgen import random_closed_even_form, random_field, random_function

from .conftest import CHARTS, bundle_maps, to_sympy

seeds = st.integers(0, 2**32 - 1)
B = SuperVectorField.basis


def gd(a, w):
    return GeneralizedDivergence(a, w)


class TestCandiv:
    def test_examples(self):
        c = Chart(1, 1)
        x, xi = c.coordinates()
        assert candiv(B(c, 0, x)) == 1
        assert candiv(euler_field(Chart(0, 2))) == -2
        assert candiv(B(c, 1)).is_zero()


class TestGeneralizedDivergence:
    def test_apply_examples(self, c12):
        x, xi1, xi2 = c12.coordinates()
        X = B(c12, 0, x * xi1 * xi2) + B(c12, 1, x)
        assert apply_gd(GeneralizedDivergence.canonical(c12), X) == candiv(X)
        f = x * x + xi1 * xi2
        assert apply_gd(gd(0, SuperOneForm.basis(c12, 0)), B(c12, 0, f)) == f
        xi_dxi = GeneralizedDivergence.unchecked(2, SuperOneForm.basis(c12, 1, xi1))
        assert apply_gd(xi_dxi, B(c12, 1)) == xi1

    def test_constructor_rejects(self, c12):
        x, xi1, _ = c12.coordinates()
        with pytest.raises(FormParityError):
            gd(1, SuperOneForm.basis(c12, 0, xi1))
        c2 = Chart(2, 0)
        with pytest.raises(NotClosedError):
            gd(1, SuperOneForm.basis(c2, 0, c2.coordinate(1)))
        bad = GeneralizedDivergence.unchecked(1, SuperOneForm.basis(c2, 0, c2.coordinate(1)))
        assert bad.a == 1

    def test_cocycle_examples(self):
        c = Chart(1, 0)
        x = c.coordinate(0)
        assert verify_cocycle(GeneralizedDivergence.canonical(c), B(c, 0, x), B(c, 0))

    def test_non_closed_witness(self):
        c = Chart(2, 0)
        x1, x2 = c.coordinates()
        bad = GeneralizedDivergence.unchecked(0, SuperOneForm.basis(c, 0, x2))
        w = find_cocycle_witness(bad, c)
        assert w is not None
        X, Y = w
        assert not verify_cocycle(bad, X, Y)

    def test_gdiv_law_examples(self):
        c = Chart(1, 0)
        x = c.coordinate(0)
        assert verify_gdiv_law(GeneralizedDivergence.canonical(c), B(c, 0), x)
        assert verify_gdiv_law(GeneralizedDivergence.canonical(c), B(c, 0, x), c.one())

    @pytest.mark.parametrize("chart", CHARTS, ids=str)
    @given(seed=seeds)
    def test_cocycle_and_gdiv_laws(self, chart, seed):
        rng = random.Random(seed)
        g = gd(Fraction(rng.randint(-3, 3), rng.randint(1, 3)), random_closed_even_form(rng, chart))
        X = random_field(rng, chart, rng.randint(0, 1))
        Y = random_field(rng, chart, rng.randint(0, 1))
        f = random_function(rng, chart, rng.randint(0, 1))
        assert verify_cocycle(g, X, Y)
        assert verify_gdiv_law(g, X, f)

    def test_cocycle_needs_homogeneous(self, c12):
        X = B(c12, 0) + B(c12, 1)
        with pytest.raises(ValueError):
            verify_cocycle(GeneralizedDivergence.canonical(c12), X, X)


class TestClassification:
    def test_examples(self, c12):
        x, xi1, xi2 = c12.coordinates()
        assert classify_cocycle(candiv, c12) == GeneralizedDivergence.canonical(c12)
        g = gd(3, de_rham(x * xi1 * xi2) + SuperOneForm.basis(c12, 0, x))
        assert classify_cocycle(g, c12) == g
        f0 = x * x * xi1 * xi2 + x
        got = classify_cocycle(lambda X: X(f0), c12)
        assert got == gd(0, de_rham(f0))
        assert is_coboundary(got) == f0 - f0.constant_term()

    def test_rejects_non_cocycle(self, c12):
        x, xi1, _ = c12.coordinates()
        # xi1 dxi1 is not closed, so contraction with it is not a cocycle
        xi_dxi = GeneralizedDivergence.unchecked(3, SuperOneForm.basis(c12, 1, xi1))
        assert find_cocycle_witness(xi_dxi, c12) is not None
        with pytest.raises(ClassificationError):
            classify_cocycle(xi_dxi, c12)
        with pytest.raises(ClassificationError):
            classify_cocycle(lambda X: X.coeffs[0] * X.coeffs[0] * x, c12)

    @pytest.mark.parametrize("chart", CHARTS, ids=str)
    @given(seed=seeds)
    def test_round_trip(self, chart, seed):
        rng = random.Random(seed)
        g = gd(Fraction(rng.randint(-3, 3), rng.randint(1, 3)), random_closed_even_form(rng, chart))
        assert classify_cocycle(g, chart, rng, 5) == g

    def test_coboundary_examples(self, c12):
        x, xi1, xi2 = c12.coordinates()
        assert is_coboundary(gd(0, de_rham(x * xi1 * xi2))) == x * xi1 * xi2
        assert is_coboundary(GeneralizedDivergence.canonical(c12)) is None
        assert is_coboundary(gd(0, SuperOneForm.zero(c12))).is_zero()
        assert coboundary(x * x) == gd(0, de_rham(x * x))


class TestRescaling:
    def test_examples(self, c12):
        x = c12.coordinate(0)
        g0 = GeneralizedDivergence.canonical(c12)
        assert rescale_divergence(g0, c12.zero()) == g0
        assert rescale_divergence(g0, x) == gd(1, SuperOneForm.basis(c12, 0))
        assert rescale_divergence(rescale_divergence(g0, x * x), -(x * x)) == g0

    def test_rejects(self, c12):
        with pytest.raises(ValueError):
            rescale_divergence(gd(2, SuperOneForm.zero(c12)), c12.zero())
        with pytest.raises(FormParityError):
            rescale_divergence(GeneralizedDivergence.canonical(c12), c12.coordinate(1))


def _exp_nilpotent(g):
    out, term, n = g.chart.one(), g.chart.one(), 0
    while True:
        n += 1
        term = (term * g).scale(Fraction(1, n))
        if term.is_zero():
            return out
        out = out + term


class TestBerezinian:
    def test_examples(self, c12):
        x = c12.coordinate(0)
        X = B(c12, 0, x * x) + B(c12, 2, x * c12.coordinate(1))
        assert div_from_berezinian(BerezinianSection.coordinate_volume(c12), X) == candiv(X)
        assert div_from_berezinian(BerezinianSection(c12.one().scale(2)), X) == candiv(X)
        c = Chart(1, 0)
        assert div_from_berezinian(BerezinianSection(c.one()), B(c, 0, c.coordinate(0))) == 1

    def test_not_a_volume(self, c12):
        x, xi1, xi2 = c12.coordinates()
        X = B(c12, 0)
        for rho in (x, xi1, c12.zero(), c12.one() + xi1):
            assert not BerezinianSection(rho).is_volume()
            with pytest.raises(NotAVolumeError):
                div_from_berezinian(BerezinianSection(rho), X)

    @pytest.mark.parametrize("chart", CHARTS, ids=str)
    @given(seed=seeds)
    def test_coordinate_volume_is_candiv(self, chart, seed):
        X = random_field(random.Random(seed), chart)
        assert div_from_berezinian(BerezinianSection.coordinate_volume(chart), X) == candiv(X)

    @pytest.mark.parametrize("chart", CHARTS, ids=str)
    @given(seed=seeds)
    def test_integration_by_parts(self, chart, seed):
        # int rho X(f) = -int sigma f + total x-derivatives, exactly
        rng = random.Random(seed)
        rho = random_function(rng, chart, None, 3)
        X = random_field(rng, chart)
        f = random_function(rng, chart)
        lhs = berezin_integral(rho * X(f))
        rhs = -berezin_integral(berezin_transpose(rho, X) * f)
        for k in range(chart.p):
            rhs = rhs + partial(berezin_integral(rho * X.coeffs[k] * f), k)
        assert lhs == rhs

    @pytest.mark.parametrize("chart", CHARTS, ids=str)
    @given(seed=seeds)
    def test_sign_insensitive_and_rescaling(self, chart, seed):
        rng = random.Random(seed)
        body = chart.one().scale(rng.choice([1, 2, -3]))
        nil = random_function(rng, chart, 0, 2, 1, allow_zero=True, exclude_odd=())
        nil = nil - nil.body()
        rho = body + nil
        s = BerezinianSection(rho)
        X = random_field(rng, chart)
        gamma = div_from_berezinian(s, X)
        assert div_from_berezinian(BerezinianSection(-rho), X) == gamma
        g = random_function(rng, chart, 0, 3, 2, allow_zero=True)
        g = g - g.body()
        if g.is_zero():
            return
        shifted = div_from_berezinian(s.scale(_exp_nilpotent(g)), X)
        assert shifted == gamma + X(g)
        cls = classify_cocycle(lambda Y: div_from_berezinian(s, Y), chart, rng, 3)
        assert rescale_divergence(cls, g)(X) == shifted


@pytest.mark.parametrize("case", range(10))
def test_transformation_multiplier(case):
    chart, images, inverse = bundle_maps()[case]
    phi = ChartMorphism(chart, chart, images, inverse)
    xs = sympy.symbols(f"x0:{chart.p}")
    jac = sympy.Matrix(chart.p, chart.p, lambda i, j: sympy.diff(to_sympy(images[i], xs), xs[j]))
    amat = sympy.Matrix(chart.q, chart.q, lambda a, b: 0)
    for a in range(chart.q):
        for (alpha, beta), c in images[chart.p + a].terms.items():
            amat[a, beta[0]] += to_sympy(Superfunction(chart, {(alpha, ()): c}), xs)
    expected = sympy.expand(jac.det() / amat.det())
    got = berezinian_transform(BerezinianSection(chart.one().scale(3)), phi).rho.scale(Fraction(1, 3))
    assert sympy.expand(to_sympy(got, xs) - expected) == 0


def test_transformation_examples():
    c = Chart(1, 1)
    x, xi = c.coordinates()
    s = BerezinianSection(c.one() + x)
    assert berezinian_transform(s, ChartMorphism.identity(c)) == s
    phi = ChartMorphism(c, c, [x.scale(2), xi], [x.scale(Fraction(1, 2)), xi])
    assert berezinian_transform(s, phi).rho == (c.one() + x).scale(2)
    phi = ChartMorphism(c, c, [x, xi.scale(3)], [x, xi.scale(Fraction(1, 3))])
    assert berezinian_transform(s, phi).rho == (c.one() + x).scale(Fraction(1, 3))


def test_transformation_rejects_non_bundle(c12):
    x, xi1, xi2 = c12.coordinates()
    s = BerezinianSection(c12.one())
    phi = ChartMorphism(c12, c12, [x + xi1 * xi2, xi1, xi2], [x - xi1 * xi2, xi1, xi2])
    with pytest.raises(MorphismTypeError):
        berezinian_transform(s, phi)

