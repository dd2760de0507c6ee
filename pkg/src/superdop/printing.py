"""Canonical text rendering.

One printed form per object, so textual equality is semantic equality and
the CLI parser can read every string produced here.
"""

from __future__ import annotations

from fractions import Fraction


def _format_monomial(chart, alpha, beta) -> str:
    factors = []
    for i, e in enumerate(alpha):
        if e == 1:
            factors.append(chart.names[i])
        elif e > 1:
            factors.append(f"{chart.names[i]}^{e}")
    for b in beta:
        factors.append(chart.names[chart.p + b])
    return "*".join(factors)


def _format_abs(c: Fraction) -> str:
    c = abs(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _join_signed(pieces) -> str:
    """pieces: iterable of (negative, text) with text already sign-free."""
    out = []
    for i, (neg, text) in enumerate(pieces):
        if i == 0:
            out.append(("-" if neg else "") + text)
        else:
            out.append((" - " if neg else " + ") + text)
    return "".join(out) if out else "0"


def _term_text(chart, alpha, beta, c: Fraction, suffix: str = "") -> str:
    mono = _format_monomial(chart, alpha, beta)
    parts = []
    if abs(c) != 1 or (not mono and not suffix):
        parts.append(_format_abs(c))
    if mono:
        parts.append(mono)
    if suffix:
        parts.append(suffix)
    return "*".join(parts)


def format_function(f) -> str:
    return _join_signed(
        (c < 0, _term_text(f.chart, alpha, beta, c)) for (alpha, beta), c in f.sorted_terms()
    )


def _coefficient_pieces(f, suffix: str):
    """Render ``f * suffix``; multi-term coefficients are parenthesised."""
    terms = f.sorted_terms()
    if len(terms) == 1:
        (alpha, beta), c = terms[0]
        return [(c < 0, _term_text(f.chart, alpha, beta, c, suffix))]
    return [(False, f"({format_function(f)})*{suffix}")]


def format_field(X) -> str:
    pieces = []
    for k, f in enumerate(X.coeffs):
        if f.is_zero():
            continue
        pieces.extend(_coefficient_pieces(f, f"d_{X.chart.names[k]}"))
    return _join_signed(pieces)


def derivative_word(chart, alpha, beta) -> str:
    """d_x^alpha then odd partials in decreasing index order."""
    factors = []
    for i, e in enumerate(alpha):
        factors.extend([f"d_{chart.names[i]}"] * e)
    for b in sorted(beta, reverse=True):
        factors.append(f"d_{chart.names[chart.p + b]}")
    return "*".join(factors)


def format_operator(D) -> str:
    pieces = []
    for (alpha, beta), f in D.sorted_terms():
        word = derivative_word(D.chart, alpha, beta)
        if not word:
            fp = f.sorted_terms()
            if len(fp) == 1:
                (a, b), c = fp[0]
                pieces.append((c < 0, _term_text(D.chart, a, b, c)))
            else:
                pieces.append((False, f"({format_function(f)})"))
        else:
            pieces.extend(_coefficient_pieces(f, word))
    return _join_signed(pieces)


def format_form(w) -> str:
    pieces = []
    for k, f in enumerate(w.coeffs):
        if f.is_zero():
            continue
        base = f"du_{w.chart.names[k]}"
        terms = f.sorted_terms()
        if len(terms) == 1:
            (alpha, beta), c = terms[0]
            mono = _format_monomial(w.chart, alpha, beta)
            tail = []
            if abs(c) != 1 or not mono:
                tail.append(_format_abs(c))
            if mono:
                tail.append(mono)
            text = base if tail == ["1"] else base + "*" + "*".join(tail)
            pieces.append((c < 0, text))
        else:
            pieces.append((False, f"{base}*({format_function(f)})"))
    return _join_signed(pieces)


def format_chart(chart, name: str = "M") -> str:
    even = ", ".join(chart.names[: chart.p])
    odd = ", ".join(chart.names[chart.p :])
    return f"chart {name} = ({even} | {odd})"


def format_scalar(c) -> str:
    c = Fraction(c)
    sign = "-" if c < 0 else ""
    return sign + _format_abs(c)


def format_gdiv(gamma) -> str:
    return f"gdiv({format_scalar(gamma.a)}, {format_form(gamma.omega)})"


def format_berezinian(s) -> str:
    return f"ber({format_function(s.rho)})"


def format_morphism(phi) -> str:
    fwd = ", ".join(f"{n}: {format_function(f)}" for n, f in zip(phi.source.names, phi.images))
    back = ", ".join(f"{n}: {format_function(f)}" for n, f in zip(phi.target.names, phi.inverse_images))
    return f"map({fwd}; {back})"


def format_automorphism(Phi) -> str:
    return (
        f"auto({format_morphism(Phi.phi)}, {format_scalar(Phi.kappa)}, "
        f"{format_scalar(Phi.a)}, {format_form(Phi.omega)})"
    )


def format_d1(e) -> str:
    return f"f = {format_function(e.f)}; X = {format_field(e.X)}"


def format_fock(M) -> str:
    return "\n".join(" ".join(format_scalar(v) for v in row) for row in M.tolist())
