"""Random instances for property checks.

Coefficients are drawn from a small integer box and degrees stay low so that
symbolic sizes remain bounded.  Every generator takes an explicit
``random.Random`` so runs are reproducible from a seed.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .algebra import Chart, Superfunction, _compositions
from .operators import (
    ComposeExpr,
    D1Element,
    MulExpr,
    PartialExpr,
    ScaleExpr,
    SumExpr,
    SuperDiffOp,
    SuperVectorField,
)

COEFF_BOX = 3


def _coeff(rng: random.Random, box: int = COEFF_BOX) -> Fraction:
    c = 0
    while c == 0:
        c = rng.randint(-box, box)
    return Fraction(c)


def _monomials(chart: Chart, max_even_degree: int, parity=None, exclude_odd=()):
    out = []
    odd_pool = [a for a in range(chart.q) if a not in exclude_odd]
    for d in range(max_even_degree + 1):
        for alpha in _compositions(d, chart.p):
            for nb in range(len(odd_pool) + 1):
                if parity is not None and nb % 2 != parity:
                    continue
                for beta in combinations(odd_pool, nb):
                    out.append((alpha, beta))
    return out


def random_function(
    rng: random.Random,
    chart: Chart,
    parity=None,
    max_terms: int = 3,
    max_even_degree: int = 2,
    allow_zero: bool = False,
    exclude_odd=(),
) -> Superfunction:
    """Random superfunction; ``parity`` 0/1 makes it homogeneous."""
    pool = _monomials(chart, max_even_degree, parity, exclude_odd)
    if not pool:
        return chart.zero()
    while True:
        n = rng.randint(1, max_terms)
        terms = {}
        for _ in range(n):
            m = rng.choice(pool)
            terms[m] = terms.get(m, 0) + _coeff(rng)
        f = Superfunction(chart, terms)
        if f or allow_zero:
            return f


def random_parity(rng: random.Random, chart: Chart) -> int:
    return rng.randint(0, 1) if chart.q else 0


def random_field(
    rng: random.Random,
    chart: Chart,
    parity=None,
    max_terms: int = 2,
    max_even_degree: int = 2,
    density: float = 0.6,
) -> SuperVectorField:
    """Random vector field; nonzero unless the chart forbids the parity."""
    if parity == 1 and chart.q == 0:
        return SuperVectorField.zero(chart)
    while True:
        coeffs = []
        for k in range(chart.dim):
            if rng.random() > density:
                coeffs.append(chart.zero())
                continue
            cp = None if parity is None else (parity + chart.parity(k)) % 2
            coeffs.append(random_function(rng, chart, cp, max_terms, max_even_degree, allow_zero=True))
        X = SuperVectorField(chart, coeffs)
        if not X.is_zero():
            return X


def random_operator(
    rng: random.Random,
    chart: Chart,
    max_order: int = 2,
    parity=None,
    max_terms: int = 4,
    max_even_degree: int = 1,
) -> SuperDiffOp:
    """Random normal-form operator of order <= max_order."""
    keys = []
    for o in range(max_order + 1):
        for d in range(o + 1):
            nb = o - d
            if nb > chart.q:
                continue
            for alpha in _compositions(d, chart.p):
                for beta in combinations(range(chart.q), nb):
                    keys.append((alpha, beta))
    while True:
        terms = {}
        for _ in range(rng.randint(1, max_terms)):
            alpha, beta = rng.choice(keys)
            cp = None if parity is None else (parity + len(beta)) % 2
            f = random_function(rng, chart, cp, 2, max_even_degree, allow_zero=True)
            if (alpha, beta) in terms:
                f = f + terms[(alpha, beta)]
            terms[(alpha, beta)] = f
        D = SuperDiffOp(chart, terms)
        if not D.is_zero():
            return D


def random_operator_of_order(rng: random.Random, chart: Chart, k: int, parity=None) -> SuperDiffOp:
    """Operator whose order is exactly k (k = -1 gives zero)."""
    if k < 0:
        return SuperDiffOp.zero(chart)
    while True:
        D = random_operator(rng, chart, k, parity)
        if D.order() == k:
            return D


def random_d1(rng: random.Random, chart: Chart, parity=None) -> D1Element:
    if parity is None:
        parity = random_parity(rng, chart)
    f = random_function(rng, chart, parity, allow_zero=True)
    X = random_field(rng, chart, parity)
    return D1Element(f, X)


def random_expr(rng: random.Random, chart: Chart, depth: int = 4):
    """Random operator expression tree of depth <= ``depth``."""
    if depth <= 1 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return MulExpr(random_function(rng, chart, None, 2, 1))
        return PartialExpr(chart, rng.randrange(chart.dim))
    kind = rng.choice(["sum", "compose", "compose", "scale"])
    if kind == "scale":
        return ScaleExpr(_coeff(rng), random_expr(rng, chart, depth - 1))
    n = rng.randint(2, 3) if kind == "sum" else 2
    parts = tuple(random_expr(rng, chart, depth - 1) for _ in range(n))
    return SumExpr(parts) if kind == "sum" else ComposeExpr(parts)


def random_closed_even_form(rng: random.Random, chart: Chart):
    """Closed even 1-form: a rational combination of exact forms."""
    from .forms import de_rham

    w = de_rham(random_function(rng, chart, 0, 3, 2))
    for _ in range(rng.randint(0, 2)):
        w = w + de_rham(random_function(rng, chart, 0, 2, 2)).scale(_coeff(rng))
    return w


def _poly_in(rng: random.Random, chart: Chart, k: int | None, degree: int = 2) -> Superfunction:
    """Random polynomial in the single even coordinate k (a constant when k is None)."""
    out = chart.zero()
    for d in range(degree + 1 if k is not None else 1):
        if rng.random() < 0.6:
            term = chart.one().scale(_coeff(rng))
            for _ in range(d):
                term = term * chart.coordinate(k)
            out = out + term
    return out


def random_elementary_morphism(rng: random.Random, chart: Chart):
    """An automorphism of the chart with an evident polynomial inverse."""
    from .morphisms import ChartMorphism

    p, q = chart.p, chart.q
    coords = list(chart.coordinates())
    images, inverse = list(coords), list(coords)
    kinds = []
    if p:
        kinds += ["affine", "shift"]
    if q:
        kinds += ["odd_scale"]
    if q >= 2:
        kinds += ["odd_shear", "nil_shift"] if p else ["odd_shear"]
    if p >= 2:
        kinds += ["shear"]
    kind = rng.choice(kinds)
    if kind == "affine":
        i = rng.randrange(p)
        a = rng.choice([Fraction(2), Fraction(-1), Fraction(1, 3), Fraction(3)])
        b = Fraction(rng.randint(-2, 2))
        images[i] = coords[i].scale(a) + chart.one().scale(b)
        inverse[i] = (coords[i] - chart.one().scale(b)).scale(1 / a)
    elif kind == "shift":
        i = rng.randrange(p)
        b = chart.one().scale(_coeff(rng))
        images[i], inverse[i] = coords[i] + b, coords[i] - b
    elif kind == "shear":
        i, j = rng.sample(range(p), 2)
        h = _poly_in(rng, chart, j)
        images[i], inverse[i] = coords[i] + h, coords[i] - h
    elif kind == "odd_scale":
        a = rng.randrange(q)
        c = rng.choice([Fraction(2), Fraction(-1), Fraction(-1, 2), Fraction(3)])
        images[p + a] = coords[p + a].scale(c)
        inverse[p + a] = coords[p + a].scale(1 / c)
    elif kind == "odd_shear":
        a, b = rng.sample(range(q), 2)
        h = _poly_in(rng, chart, rng.randrange(p) if p else None) * coords[p + b]
        images[p + a], inverse[p + a] = coords[p + a] + h, coords[p + a] - h
    else:
        # even nilpotent shift, independent of the shifted coordinate
        i = rng.randrange(p)
        a, b = rng.sample(range(q), 2)
        others = [j for j in range(p) if j != i]
        h = _poly_in(rng, chart, rng.choice(others) if others else None)
        n = h * coords[p + a] * coords[p + b]
        images[i], inverse[i] = coords[i] + n, coords[i] - n
    return ChartMorphism(chart, chart, images, inverse)


def random_morphism(rng: random.Random, chart: Chart, steps: int = 3):
    """Composite of ``steps`` elementary automorphisms."""
    from .morphisms import ChartMorphism, compose_morphisms

    phi = ChartMorphism.identity(chart)
    for _ in range(steps):
        phi = compose_morphisms(phi, random_elementary_morphism(rng, chart))
    return phi
