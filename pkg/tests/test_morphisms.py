import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superdop.algebra import Chart, ChartMismatch, ParityError
from superdop.divergence import GeneralizedDivergence, candiv, classify_cocycle
from superdop.forms import FormParityError, NotClosedError, SuperOneForm
from superdop.morphisms import (
    ChartMorphism,
    D1Automorphism,
    ExceptionalChartError,
    NotInvertibleError,
    acts_as_identity_on_odd,
    check_bracket_table,
    compose_morphisms,
    d1_basis_0_1,
    exceptional_0_1,
    exceptional_0_2,
    exceptional_1_1,
    exceptional_checks,
    exceptional_map,
    extension_failure_witness,
    field_basis_0_2,
    intertwiner_scalar,
    pullback,
    pushforward_field,
    pushforward_op,
    verify_d1_automorphism,
)
from superdop.operators import (
    D1Element,
    SuperDiffOp,
    SuperVectorField,
    bracket,
    d1_bracket,
    euler_field,
    scommutator,
)
from superdop.randgen import (
    random_closed_even_form,
    random_d1,
    random_field,
    random_function,
    random_morphism,
    random_operator,
)

seeds = st.integers(0, 2**32 - 1)
B = SuperVectorField.basis
MORPHISM_CHARTS = [Chart(1, 1), Chart(1, 2), Chart(2, 2), Chart(0, 3)]


class TestChartMorphism:
    def test_rejects_bad_inverse(self, c12):
        x, xi1, xi2 = c12.coordinates()
        with pytest.raises(NotInvertibleError):
            ChartMorphism(c12, c12, [x.scale(2), xi1, xi2], [x, xi1, xi2])

    def test_rejects_parity(self, c12):
        x, xi1, xi2 = c12.coordinates()
        with pytest.raises(ParityError):
            ChartMorphism(c12, c12, [xi1, x, xi2], [xi2, x, xi1])

    def test_rejects_wrong_length(self, c12):
        x, xi1, _ = c12.coordinates()
        with pytest.raises(ValueError):
            ChartMorphism(c12, c12, [x, xi1], [x, xi1])

    def test_identity_and_inverse(self, c12):
        ident = ChartMorphism.identity(c12)
        assert ident.is_identity()
        phi = random_morphism(random.Random(3), c12)
        assert compose_morphisms(phi, phi.inverse()).is_identity()
        assert compose_morphisms(phi.inverse(), phi).is_identity()


class TestPullback:
    def test_examples(self):
        c = Chart(1, 0)
        x = c.coordinate(0)
        phi = ChartMorphism(c, c, [x + c.one()], [x - c.one()])
        assert pullback(phi, x * x) == x * x + x.scale(2) + c.one()
        assert pullback(ChartMorphism.identity(c), x * x) == x * x

    def test_odd_swap(self, c02):
        e1, e2 = c02.coordinates()
        swap = ChartMorphism(c02, c02, [e2, e1], [e2, e1])
        assert pullback(swap, e1 * e2) == -(e1 * e2)

    def test_chart_mismatch(self, c12, c02):
        with pytest.raises(ChartMismatch):
            pullback(ChartMorphism.identity(c12), c02.one())

    @pytest.mark.parametrize("chart", MORPHISM_CHARTS, ids=str)
    @given(seed=seeds)
    def test_homomorphism(self, chart, seed):
        rng = random.Random(seed)
        phi = random_morphism(rng, chart)
        f, g = random_function(rng, chart), random_function(rng, chart)
        assert pullback(phi, f * g) == pullback(phi, f) * pullback(phi, g)
        assert pullback(phi, f + g) == pullback(phi, f) + pullback(phi, g)


class TestPushforward:
    def test_identity(self, c12):
        D = random_operator(random.Random(0), c12)
        assert pushforward_op(ChartMorphism.identity(c12), D) == D

    def test_dilation_chain_rule(self):
        # (phi^*)^{-1} o d_x o phi^* for x -> 2x: f(2x) differentiates to 2 f'(2x)
        c = Chart(1, 0)
        x = c.coordinate(0)
        phi = ChartMorphism(c, c, [x.scale(2)], [x.scale(Fraction(1, 2))])
        assert pushforward_op(phi, SuperDiffOp.partial(c, 0)) == SuperDiffOp.partial(c, 0).scale(2)
        f = x * x * x
        D = SuperDiffOp.partial(c, 0)
        assert pushforward_op(phi, D)(f) == pullback(phi.inverse(), D(pullback(phi, f)))

    def test_odd_shear_example(self, c12):
        x, xi1, xi2 = c12.coordinates()
        phi = ChartMorphism(c12, c12, [x, xi1 + x * xi2, xi2], [x, xi1 - x * xi2, xi2])
        d1, d2 = SuperDiffOp.partial(c12, 1), SuperDiffOp.partial(c12, 2)
        lhs = pushforward_op(phi, scommutator(d1, d2))
        assert lhs == scommutator(pushforward_op(phi, d1), pushforward_op(phi, d2))
        assert pushforward_op(phi, d1) == d1

    @pytest.mark.parametrize("chart", MORPHISM_CHARTS, ids=str)
    @given(seed=seeds)
    @settings(max_examples=15)
    def test_functorial_and_bracket_preserving(self, chart, seed):
        rng = random.Random(seed)
        phi, psi = random_morphism(rng, chart, 2), random_morphism(rng, chart, 2)
        D = random_operator(rng, chart, 2)
        E = random_operator(rng, chart, 1)
        comp = compose_morphisms(phi, psi)
        assert pushforward_op(comp, D) == pushforward_op(phi, pushforward_op(psi, D))
        lhs = pushforward_op(phi, scommutator(D, E))
        assert lhs == scommutator(pushforward_op(phi, D), pushforward_op(phi, E))
        assert pushforward_op(phi, D).order() == D.order()

    @pytest.mark.parametrize("chart", MORPHISM_CHARTS, ids=str)
    @given(seed=seeds)
    @settings(max_examples=15)
    def test_field_bracket(self, chart, seed):
        rng = random.Random(seed)
        phi = random_morphism(rng, chart)
        X = random_field(rng, chart, rng.randint(0, 1))
        Y = random_field(rng, chart, rng.randint(0, 1))
        lhs = pushforward_field(phi, bracket(X, Y))
        assert lhs == bracket(pushforward_field(phi, X), pushforward_field(phi, Y))

    @pytest.mark.parametrize("chart", [Chart(1, 1), Chart(0, 2), Chart(1, 2), Chart(2, 2)], ids=str)
    def test_euler_field_survives_pushforward(self, chart):
        rng = random.Random(7)
        e = euler_field(chart)
        for _ in range(10):
            assert acts_as_identity_on_odd(pushforward_field(random_morphism(rng, chart), e))


def _d1(f, X):
    return D1Element(f, X)


class TestD1Automorphism:
    def test_identity(self, c12):
        Phi = D1Automorphism(ChartMorphism.identity(c12), 1, 0, SuperOneForm.zero(c12))
        rng = random.Random(0)
        for _ in range(10):
            e = random_d1(rng, c12)
            assert Phi(e) == e

    def test_scaling_examples(self):
        c = Chart(1, 0)
        x = c.coordinate(0)
        ident = ChartMorphism.identity(c)
        zero = SuperOneForm.zero(c)
        X = B(c, 0, x)
        Phi = D1Automorphism(ident, 3, 0, zero)
        assert Phi(_d1(x, X)) == _d1(x.scale(3), X)
        assert verify_d1_automorphism(Phi, trials=20)
        Phi = D1Automorphism(ident, 1, 1, zero)
        assert Phi(_d1(c.zero(), X)) == _d1(c.one(), X)

    def test_construction_rejects(self, c12):
        xi1 = c12.coordinate(1)
        ident = ChartMorphism.identity(c12)
        with pytest.raises(ValueError):
            D1Automorphism(ident, 0, 1, SuperOneForm.zero(c12))
        with pytest.raises(NotClosedError):
            D1Automorphism(ident, 1, 0, SuperOneForm.basis(c12, 0, xi1 * c12.coordinate(2)))
        with pytest.raises(FormParityError):
            D1Automorphism(ident, 1, 0, SuperOneForm.basis(c12, 0, xi1))

    @pytest.mark.parametrize("chart", [Chart(1, 1), Chart(2, 2), Chart(0, 2)], ids=str)
    def test_well_formed_verify(self, chart):
        rng = random.Random(11)
        for _ in range(2):
            Phi = D1Automorphism(
                random_morphism(rng, chart, 2),
                rng.choice([1, -2, Fraction(1, 3)]),
                rng.choice([0, 1, Fraction(-3, 2)]),
                random_closed_even_form(rng, chart),
            )
            v = verify_d1_automorphism(Phi, trials=25, rng=rng)
            assert v, v.detail

    def test_kappa_zero_surrogate_fails(self, c12):
        Phi = D1Automorphism.unchecked(ChartMorphism.identity(c12), 0, 1, SuperOneForm.zero(c12))
        v = verify_d1_automorphism(Phi, trials=5)
        assert not v and v.witness is not None

    def test_non_closed_omega_fails(self):
        c = Chart(2, 0)
        x1, x2 = c.coordinates()
        Phi = D1Automorphism.unchecked(ChartMorphism.identity(c), 1, 0, SuperOneForm.basis(c, 0, x2))
        v = verify_d1_automorphism(Phi, trials=5)
        assert not v
        a, b = v.witness
        assert Phi(d1_bracket(a, b)) != d1_bracket(Phi(a), Phi(b))

    def test_odd_omega_fails(self, c12):
        xi1 = c12.coordinate(1)
        Phi = D1Automorphism.unchecked(ChartMorphism.identity(c12), 1, 0, SuperOneForm.basis(c12, 0, xi1))
        v = verify_d1_automorphism(Phi, trials=5)
        assert not v and v.witness is not None

    def test_inverse_example(self):
        c = Chart(1, 1)
        Phi = D1Automorphism(ChartMorphism.identity(c), 2, Fraction(3, 2), SuperOneForm.zero(c))
        inv = Phi.inverse()
        assert (inv.kappa, inv.a) == (Fraction(1, 2), Fraction(-3, 4))
        assert inv.omega.is_zero()

    @pytest.mark.parametrize("chart", [Chart(1, 1), Chart(1, 2)], ids=str)
    @given(seed=seeds)
    @settings(max_examples=10)
    def test_inverse_composes(self, chart, seed):
        rng = random.Random(seed)
        Phi = D1Automorphism(random_morphism(rng, chart, 2), rng.choice([1, 2, -1]), rng.randint(-2, 2),
                             random_closed_even_form(rng, chart))
        inv = Phi.inverse(rng)
        for _ in range(5):
            e = random_d1(rng, chart)
            assert inv(Phi(e)) == e
            assert Phi(inv(e)) == e

    @pytest.mark.parametrize("chart", [Chart(1, 1), Chart(1, 2), Chart(0, 3)], ids=str)
    @given(seed=seeds)
    @settings(max_examples=10)
    def test_identity_chart_shape(self, chart, seed):
        # with phi = id the scalar part is kappa f + gamma(X) for a classifiable cocycle gamma
        rng = random.Random(seed)
        kappa, a = rng.choice([1, 3, Fraction(-1, 2)]), rng.randint(-2, 2)
        w = random_closed_even_form(rng, chart)
        Phi = D1Automorphism(ChartMorphism.identity(chart), kappa, a, w)
        zero_f, zero_X = chart.zero(), SuperVectorField.zero(chart)
        gamma = classify_cocycle(lambda X: Phi(_d1(zero_f, X)).f, chart, rng, 3)
        assert gamma == GeneralizedDivergence(a, w)
        f = random_function(rng, chart)
        assert Phi(_d1(f, zero_X)) == _d1(f.scale(kappa), zero_X)
        assert intertwiner_scalar(lambda g: Phi(_d1(g, zero_X)).f, chart) == Fraction(kappa)

    def test_intertwiner_rejects_non_scalar(self, c12):
        x = c12.coordinate(0)
        assert intertwiner_scalar(lambda g: g * x, c12) is None
        assert intertwiner_scalar(lambda g: g.scale(5), c12) == 5

    def test_pushforward_commutes_with_candiv_shift(self, c12):
        rng = random.Random(5)
        phi = random_morphism(rng, c12)
        Phi = D1Automorphism(phi, 1, 0, SuperOneForm.zero(c12))
        X = random_field(rng, c12)
        assert Phi(_d1(c12.zero(), X)) == _d1(c12.zero(), pushforward_field(phi, X))


class TestExceptional:
    def test_0_1_examples(self):
        c = Chart(0, 1)
        T = exceptional_0_1(c)
        xi = SuperDiffOp.mult(c.coordinate(0))
        d = SuperDiffOp.partial(c, 0)
        one = SuperDiffOp.identity(c)
        assert T(d) == xi and T(xi) == d and T(one) == one
        e = euler_field(c).to_op()
        assert T(e) == e.scale(-1)
        assert T(scommutator(d, xi)) == scommutator(xi, d) == one
        assert check_bracket_table(T, d1_basis_0_1(c), scommutator)
        assert T(xi).order() == 1

    def test_1_1_examples(self):
        c = Chart(1, 1)
        t, xi = c.coordinates()
        T = exceptional_1_1(c)
        e = euler_field(c)
        assert T(e) == -e
        assert T(B(c, 0, t)) == B(c, 0, t) + e
        h = t * t + c.one()
        assert T(B(c, 1, h)) == B(c, 0, h * xi)
        assert T(B(c, 0, h * xi)) == B(c, 1, h)

    @given(seed=seeds)
    def test_1_1_properties(self, seed):
        c = Chart(1, 1)
        rng = random.Random(seed)
        T = exceptional_1_1(c)
        X, Y = random_field(rng, c, rng.randint(0, 1)), random_field(rng, c, rng.randint(0, 1))
        assert T(bracket(X, Y)) == bracket(T(X), T(Y))
        assert T(T(X)) == X

    def test_0_2_examples(self, c02):
        T = exceptional_0_2(c02)
        e1, e2 = c02.coordinates()
        e = euler_field(c02)
        assert T(e) == -e
        for X in (B(c02, 1, e1), B(c02, 0, e2), B(c02, 0, e1) - B(c02, 1, e2)):
            assert T(X) == X
        assert check_bracket_table(T, field_basis_0_2(c02), bracket)
        assert T(B(c02, 0)) == B(c02, 0, e1 * e2)
        assert T(B(c02, 0, e1 * e2)) == B(c02, 0)

    @pytest.mark.parametrize("chart", [Chart(1, 1), Chart(0, 2)], ids=str)
    def test_not_from_a_pullback(self, chart):
        e = euler_field(chart)
        image = exceptional_map(chart)(e)
        assert not acts_as_identity_on_odd(image)
        xi = chart.coordinate(chart.p)
        assert image(xi) == -xi

    def test_1_1_no_extension(self):
        c = Chart(1, 1)
        T = exceptional_1_1(c)
        w = extension_failure_witness(T, c)
        assert w is not None
        X, f = w
        assert SuperDiffOp.mult(X(f)) != scommutator(T(X).to_op(), SuperDiffOp.mult(f))
        assert extension_failure_witness(lambda X: X, c) is None

    @pytest.mark.parametrize("dims", [(0, 1), (1, 1), (0, 2)])
    def test_checks_pass(self, dims):
        for name, verdict in exceptional_checks(Chart(*dims), trials=20):
            assert verdict, name

    @pytest.mark.parametrize("dims", [(1, 0), (0, 3), (2, 1)])
    def test_wrong_chart(self, dims):
        with pytest.raises(ExceptionalChartError):
            exceptional_map(Chart(*dims))
        with pytest.raises(ExceptionalChartError):
            exceptional_checks(Chart(*dims))


def test_transported_divergence_stays_a_divergence(c12):
    rng = random.Random(9)
    phi = random_morphism(rng, c12)
    inv = phi.inverse()
    transported = classify_cocycle(
        lambda X: pullback(inv, candiv(pushforward_field(inv, X))), c12, rng, 3
    )
    assert transported.a == 1
