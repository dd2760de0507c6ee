"""Polynomial superfunctions on a single coordinate chart.

A chart of dimension p|q has even coordinates x^1..x^p and odd coordinates
xi^1..xi^q.  Functions live in Q[x] (x) Lambda(xi) and are stored sparsely as

    {(alpha, beta): Fraction}

where ``alpha`` is the exponent tuple of the even coordinates and ``beta`` is a
strictly increasing tuple of odd indices (0-based).  A key denotes the
monomial ``x^alpha * xi^beta`` with the odd factors written in increasing
order.  The zero function is the empty map.

Coordinates are addressed by a single index k in ``range(p + q)``; k < p is
even, k >= p is odd (odd index ``k - p``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Tuple, Union

Alpha = Tuple[int, ...]
Beta = Tuple[int, ...]
Monomial = Tuple[Alpha, Beta]
Scalar = Union[int, Fraction]


class Parity(IntEnum):
    EVEN = 0
    ODD = 1

    def __add__(self, other):
        return Parity((int(self) + int(other)) % 2)

    __radd__ = __add__


class ChartMismatch(ValueError):
    """Objects from different charts were combined."""


class ParityError(ValueError):
    """A homogeneous element of a definite parity was required."""


def koszul_sort(seq: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sort a word of odd generators, returning ``(sign, sorted_word)``.

    The sign is (-1)^(number of adjacent transpositions).  A repeated
    generator makes the product vanish and yields ``(0, ())``.  Every Koszul
    sign in the package is produced here.
    """
    word = list(seq)
    if len(set(word)) != len(word):
        return 0, ()
    sign = 1
    n = len(word)
    for i in range(n):
        for j in range(n - 1 - i):
            if word[j] > word[j + 1]:
                word[j], word[j + 1] = word[j + 1], word[j]
                sign = -sign
    return sign, tuple(word)


@dataclass(frozen=True)
class Chart:
    p: int
    q: int
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError("chart dimensions must be non-negative")
        if not self.names:
            names = tuple(f"x{i + 1}" for i in range(self.p)) + tuple(
                f"xi{a + 1}" for a in range(self.q)
            )
            object.__setattr__(self, "names", names)
        else:
            object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != self.p + self.q:
            raise ValueError(
                f"chart {self.p}|{self.q} needs {self.p + self.q} names, got {len(self.names)}"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"coordinate names must be distinct: {self.names}")

    @property
    def dim(self) -> int:
        return self.p + self.q

    def __str__(self) -> str:
        return f"{self.p}|{self.q}"

    def is_odd(self, k: int) -> bool:
        self.check_index(k)
        return k >= self.p

    def parity(self, k: int) -> int:
        return 1 if self.is_odd(k) else 0

    def check_index(self, k: int) -> None:
        if not 0 <= k < self.p + self.q:
            raise IndexError(f"coordinate index {k} out of range for chart {self}")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown coordinate {name!r}") from None

    def odd_index(self, k: int) -> int:
        """Position of odd coordinate k among the odd generators."""
        if not self.is_odd(k):
            raise ValueError(f"coordinate {self.names[k]} is even")
        return k - self.p

    def zero_alpha(self) -> Alpha:
        return (0,) * self.p

    def coordinate(self, k: int) -> "Superfunction":
        self.check_index(k)
        if k < self.p:
            alpha = tuple(1 if i == k else 0 for i in range(self.p))
            return Superfunction(self, {(alpha, ()): 1})
        return Superfunction(self, {(self.zero_alpha(), (k - self.p,)): 1})

    def coordinates(self) -> list:
        return [self.coordinate(k) for k in range(self.dim)]

    def one(self) -> "Superfunction":
        return Superfunction.constant(self, 1)

    def zero(self) -> "Superfunction":
        return Superfunction(self, {})


def monomial_parity(mono: Monomial) -> int:
    return len(mono[1]) % 2


def _mul_monomials(m1: Monomial, m2: Monomial) -> Tuple[int, Monomial]:
    sign, beta = koszul_sort(m1[1] + m2[1])
    if sign == 0:
        return 0, m1
    alpha = tuple(a + b for a, b in zip(m1[0], m2[0]))
    return sign, (alpha, beta)


class Superfunction:
    """Immutable element of Q[x1..xp] (x) Lambda(xi1..xiq)."""

    __slots__ = ("chart", "_terms", "_hash")

    def __init__(self, chart: Chart, terms: Mapping[Monomial, Scalar] | None = None):
        self.chart = chart
        clean = {}
        for (alpha, beta), c in (terms or {}).items():
            c = Fraction(c)
            if c == 0:
                continue
            alpha = tuple(alpha)
            beta = tuple(beta)
            if len(alpha) != chart.p:
                raise ValueError(f"exponent {alpha} does not match chart {chart}")
            if list(beta) != sorted(set(beta)) or any(not 0 <= b < chart.q for b in beta):
                raise ValueError(f"odd index set {beta} must be strictly increasing in range")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            clean[(alpha, beta)] = c
        self._terms = clean
        self._hash = None

    # constructors

    @classmethod
    def constant(cls, chart: Chart, c: Scalar) -> "Superfunction":
        return cls(chart, {(chart.zero_alpha(), ()): c})

    @classmethod
    def _raw(cls, chart: Chart, terms: dict) -> "Superfunction":
        # terms already normalized except for zero coefficients
        obj = cls.__new__(cls)
        obj.chart = chart
        obj._terms = {m: c for m, c in terms.items() if c != 0}
        obj._hash = None
        return obj

    # inspection

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def sorted_terms(self) -> list:
        """Terms in canonical order: by total degree, then odd set, then exponent."""
        return sorted(
            self._terms.items(),
            key=lambda t: (sum(t[0][0]) + len(t[0][1]), len(t[0][1]), t[0][1], tuple(-a for a in t[0][0])),
        )

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def parity(self):
        """0 or 1 for homogeneous nonzero functions, 0 for zero, None otherwise."""
        pars = {len(b) % 2 for (_, b) in self._terms}
        if not pars:
            return 0
        if len(pars) == 1:
            return pars.pop()
        return None

    def is_homogeneous(self) -> bool:
        return self.parity() is not None

    def parity_parts(self) -> Tuple["Superfunction", "Superfunction"]:
        even = {m: c for m, c in self._terms.items() if len(m[1]) % 2 == 0}
        odd = {m: c for m, c in self._terms.items() if len(m[1]) % 2 == 1}
        return Superfunction._raw(self.chart, even), Superfunction._raw(self.chart, odd)

    def constant_term(self) -> Fraction:
        return self._terms.get((self.chart.zero_alpha(), ()), Fraction(0))

    def body(self) -> "Superfunction":
        """The xi-free part."""
        return Superfunction._raw(self.chart, {m: c for m, c in self._terms.items() if not m[1]})

    def is_constant(self) -> bool:
        return all(not any(a) and not b for (a, b) in self._terms)

    def odd_degree(self) -> int:
        return max((len(b) for (_, b) in self._terms), default=0)

    # arithmetic

    def _coerce(self, other) -> "Superfunction":
        if isinstance(other, Superfunction):
            if other.chart != self.chart:
                raise ChartMismatch(f"chart {self.chart} vs {other.chart}")
            return other
        if isinstance(other, (int, Fraction)):
            return Superfunction.constant(self.chart, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Superfunction._raw(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return Superfunction._raw(self.chart, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: Scalar) -> "Superfunction":
        c = Fraction(c)
        return Superfunction._raw(self.chart, {m: c * v for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = self.chart.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Superfunction.constant(self.chart, other)
        if not isinstance(other, Superfunction):
            return NotImplemented
        return self.chart == other.chart and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        from .printing import format_function

        return f"Superfunction({format_function(self)})"

    def inverse(self) -> "Superfunction":
        """Inverse in the chart algebra.

        Exists iff the xi-free part is a nonzero constant; the remainder is
        nilpotent and the geometric series terminates after q steps.
        """
        body = self.body()
        if not body.is_constant() or body.is_zero():
            raise ZeroDivisionError("function is not invertible in the polynomial chart algebra")
        c = body.constant_term()
        n = (self - body).scale(1 / c)
        out = self.chart.one()
        power = self.chart.one()
        for _ in range(self.chart.q):
            power = power * (-n)
            if power.is_zero():
                break
            out = out + power
        return out.scale(1 / c)

    def is_invertible(self) -> bool:
        body = self.body()
        return body.is_constant() and not body.is_zero()


def mul(f: Superfunction, g: Superfunction) -> Superfunction:
    """Supercommutative product with Koszul signs from ``koszul_sort``."""
    if f.chart != g.chart:
        raise ChartMismatch(f"chart {f.chart} vs {g.chart}")
    out: dict = {}
    for m1, c1 in f._terms.items():
        for m2, c2 in g._terms.items():
            sign, m = _mul_monomials(m1, m2)
            if sign:
                out[m] = out.get(m, 0) + sign * c1 * c2
    return Superfunction._raw(f.chart, out)


def partial(f: Superfunction, k: int) -> Superfunction:
    """Left partial derivative along coordinate k."""
    chart = f.chart
    chart.check_index(k)
    out: dict = {}
    if k < chart.p:
        for (alpha, beta), c in f._terms.items():
            e = alpha[k]
            if e == 0:
                continue
            a2 = alpha[:k] + (e - 1,) + alpha[k + 1 :]
            out[(a2, beta)] = out.get((a2, beta), 0) + e * c
    else:
        a = k - chart.p
        for (alpha, beta), c in f._terms.items():
            if a not in beta:
                continue
            pos = beta.index(a)
            sign = -1 if pos % 2 else 1
            b2 = beta[:pos] + beta[pos + 1 :]
            out[(alpha, b2)] = out.get((alpha, b2), 0) + sign * c
    return Superfunction._raw(chart, out)


def antiderivative(f: Superfunction, k: int) -> Superfunction:
    """Polynomial antiderivative in the even coordinate k, zero constant of integration."""
    chart = f.chart
    if chart.is_odd(k):
        raise ValueError("antiderivatives are taken in even coordinates only")
    out: dict = {}
    for (alpha, beta), c in f._terms.items():
        e = alpha[k]
        a2 = alpha[:k] + (e + 1,) + alpha[k + 1 :]
        out[(a2, beta)] = c / (e + 1)
    return Superfunction._raw(chart, out)


def substitute(f: Superfunction, images: Sequence[Superfunction]) -> Superfunction:
    """Algebra homomorphism sending coordinate k of ``f.chart`` to ``images[k]``."""
    chart = f.chart
    if len(images) != chart.dim:
        raise ValueError(f"need {chart.dim} images, got {len(images)}")
    targets = {img.chart for img in images}
    if len(targets) > 1:
        raise ChartMismatch("images live on different charts")
    target = images[0].chart if images else chart
    for k, img in enumerate(images):
        par = img.parity()
        if img.is_zero():
            continue
        if par is None or par != chart.parity(k):
            raise ParityError(
                f"image of {chart.names[k]} must be {'odd' if chart.is_odd(k) else 'even'}"
            )
    even_imgs = images[: chart.p]
    odd_imgs = images[chart.p :]
    power_cache: dict = {}

    def power(i: int, e: int) -> Superfunction:
        key = (i, e)
        if key not in power_cache:
            power_cache[key] = even_imgs[i] ** e
        return power_cache[key]

    out = target.zero()
    for (alpha, beta), c in f._terms.items():
        term = Superfunction.constant(target, c)
        for i, e in enumerate(alpha):
            if e:
                term = term * power(i, e)
        for b in beta:
            term = term * odd_imgs[b]
        out = out + term
    return out


def n_degree_decompose(f: Superfunction) -> list:
    """Split f by the number of odd factors: ``[(k, f_k), ...]`` with nonzero parts."""
    parts: dict = {}
    for (alpha, beta), c in f._terms.items():
        parts.setdefault(len(beta), {})[(alpha, beta)] = c
    return [(k, Superfunction._raw(f.chart, parts[k])) for k in sorted(parts)]


def total_degree_decompose(f: Superfunction) -> dict:
    """Split f by total degree |alpha| + |beta|."""
    parts: dict = {}
    for (alpha, beta), c in f._terms.items():
        parts.setdefault(sum(alpha) + len(beta), {})[(alpha, beta)] = c
    return {w: Superfunction._raw(f.chart, t) for w, t in parts.items()}


def monomial(chart: Chart, alpha: Iterable[int], beta: Iterable[int], c: Scalar = 1) -> Superfunction:
    """c * x^alpha * xi^beta with beta given in any order (reordered with sign)."""
    sign, b = koszul_sort(tuple(beta))
    return Superfunction(chart, {(tuple(alpha), b): sign * Fraction(c)})


def probe_monomial(chart: Chart, alpha: Alpha, beta: Beta) -> Superfunction:
    """(1/alpha!) x^alpha xi^beta, the probes of the coefficient extraction."""
    fact = math.prod(math.factorial(a) for a in alpha)
    return Superfunction(chart, {(alpha, beta): Fraction(1, fact)})


def multi_indices(p: int, q: int, order: int):
    """All (alpha, beta) with |alpha| + |beta| == order, beta strictly increasing."""
    from itertools import combinations

    for nb in range(min(q, order) + 1):
        rest = order - nb
        for beta in combinations(range(q), nb):
            for alpha in _compositions(rest, p):
                yield alpha, beta


def _compositions(n: int, parts: int):
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def basis_monomials(chart: Chart, max_even_degree: int):
    """All monomials x^alpha xi^beta with |alpha| <= max_even_degree."""
    from itertools import combinations

    for d in range(max_even_degree + 1):
        for alpha in _compositions(d, chart.p):
            for nb in range(chart.q + 1):
                for beta in combinations(range(chart.q), nb):
                    yield Superfunction(chart, {(alpha, beta): 1})


__all__ = [
    "Chart",
    "ChartMismatch",
    "Parity",
    "ParityError",
    "Superfunction",
    "antiderivative",
    "basis_monomials",
    "koszul_sort",
    "monomial",
    "mul",
    "multi_indices",
    "n_degree_decompose",
    "partial",
    "substitute",
    "probe_monomial",
    "total_degree_decompose",
]
