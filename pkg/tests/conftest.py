import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import HealthCheck, settings

from superdop.algebra import Chart

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

CHARTS = [Chart(1, 1), Chart(2, 2), Chart(0, 3)]


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def c12():
    return Chart(1, 2, ("x", "xi1", "xi2"))


@pytest.fixture
def c02():
    return Chart(0, 2)


def to_sympy(f, xs):
    assert all(not beta for (_, beta) in f.terms)
    out = sympy.Integer(0)
    for (alpha, _), c in f.terms.items():
        out += sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[x**e for x, e in zip(xs, alpha)])
    return out


def bundle_maps():
    """Ten bundle-type automorphisms with hand-computed inverses."""
    h = Fraction(1, 2)
    out = []
    c = Chart(1, 1)
    x, xi = c.coordinates()
    out += [
        (c, [x.scale(2), xi], [x.scale(h), xi]),
        (c, [x, xi.scale(3)], [x, xi.scale(Fraction(1, 3))]),
        (c, [x + c.one(), -xi], [x - c.one(), -xi]),
        (c, [x.scale(5) + c.one().scale(2), xi], [(x - c.one().scale(2)).scale(Fraction(1, 5)), xi]),
    ]
    c = Chart(2, 2)
    x1, x2, e1, e2 = c.coordinates()
    out += [
        (c, [x1.scale(2), x1 + x2, e1 + e2, e2], [x1.scale(h), x2 - x1.scale(h), e1 - e2, e2]),
        (c, [x1 + x2 * x2, x2, e2, e1], [x1 - x2 * x2, x2, e2, e1]),
        (c, [-x1, x2.scale(3), e1.scale(2), e1.scale(h) + e2],
         [-x1, x2.scale(Fraction(1, 3)), e1.scale(h), e2 - e1.scale(Fraction(1, 4))]),
        (c, [x1, x2 + x1 * x1 * x1, e1 + e2, e1 - e2], [x1, x2 - x1 * x1 * x1, (e1 + e2).scale(h), (e1 - e2).scale(h)]),
    ]
    c = Chart(1, 2)
    x, e1, e2 = c.coordinates()
    out += [(c, [x.scale(3), e1 + x * e2, e2], [x.scale(Fraction(1, 3)), e1 - x.scale(Fraction(1, 3)) * e2, e2])]
    c = Chart(2, 1)
    x1, x2, e = c.coordinates()
    out += [(c, [x1 + x2, x2, e.scale(4)], [x1 - x2, x2, e.scale(Fraction(1, 4))])]
    return out
