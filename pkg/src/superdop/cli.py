"""``superdop`` command-line front-end.

Exit codes:
    0  success, every verdict passed
    1  a verdict failed (a witness is printed)
    2  usage error
    3  lexical or syntax error
    4  unknown identifier or a value of the wrong kind
    5  chart or parity mismatch
    6  domain error (order too high, not a volume, not invertible, ...)
"""

from __future__ import annotations

import argparse
import contextlib
import json
import random
import sys
from fractions import Fraction

from .algebra import ChartMismatch, ParityError, Superfunction
from .clifford import fock_rank, rep, swap_automorphism
from .divergence import (
    BerezinianSection,
    ClassificationError,
    GeneralizedDivergence,
    apply_gd,
    berezinian_transform,
    candiv,
    classify_cocycle,
    coboundary,
    div_from_berezinian,
    find_cocycle_witness,
    is_coboundary,
    verify_gdiv_law,
)
from .morphisms import (
    exceptional_checks,
    exceptional_map,
    pullback,
    pushforward_field,
    pushforward_op,
    verify_d1_automorphism,
)
from .operators import (
    D1Element,
    SuperVectorField,
    bracket,
    commutator_decompose,
    normal_form,
    order_by_commutators,
    resum_brackets,
    scommutator,
    split_d1,
    z_grading_decompose,
)
from .parser import BindingError, ParseError, Session, format_value, kind_of, parse_chart_spec
from .printing import format_d1, format_fock, format_scalar

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_PARSE, EXIT_BINDING, EXIT_CHART, EXIT_DOMAIN = range(7)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# machine-readable records


def _frac(c) -> dict:
    c = Fraction(c)
    return {"num": c.numerator, "den": c.denominator}


def _fn_terms(f: Superfunction, **extra) -> list:
    return [
        {"alpha": list(alpha), "beta": list(beta), **_frac(c), **extra}
        for (alpha, beta), c in f.sorted_terms()
    ]


def _deriv(chart, k) -> dict:
    alpha = [1 if i == k else 0 for i in range(chart.p)]
    beta = [k - chart.p] if chart.is_odd(k) else []
    return {"d_alpha": alpha, "d_beta": beta}


def records(v, chart, role: str | None = None) -> list:
    """Flat JSON records for a result value."""
    base = {"chart": str(chart) if chart else None}
    if role:
        base["role"] = role
    if isinstance(v, bool):
        return [{**base, "kind": "boolean", "value": v, "terms": []}]
    if isinstance(v, int):
        return [{**base, "kind": "integer", "value": v, "terms": []}]
    if isinstance(v, str):
        return [{**base, "kind": "text", "value": v, "terms": []}]
    if isinstance(v, D1Element):
        return records(v.f, chart, f"{role or 'd1'}-f") + records(v.X, chart, f"{role or 'd1'}-X")
    k = kind_of(v)
    if k == "scalar":
        return [{**base, "kind": "scalar", **_frac(v), "terms": []}]
    if k == "fn":
        return [{**base, "kind": "function", "terms": _fn_terms(v)}]
    if k == "field":
        terms = [t for j, f in enumerate(v.coeffs) for t in _fn_terms(f, **_deriv(v.chart, j))]
        return [{**base, "kind": "field", "terms": terms}]
    if k == "op":
        D = normal_form(v)
        terms = [
            t
            for (alpha, beta), f in D.sorted_terms()
            for t in _fn_terms(f, d_alpha=list(alpha), d_beta=list(beta))
        ]
        return [{**base, "kind": "operator", "terms": terms}]
    if k == "form":
        terms = [t for j, f in enumerate(v.coeffs) for t in _fn_terms(f, du=j)]
        return [{**base, "kind": "form", "terms": terms}]
    if k == "gdiv":
        rec = records(v.omega, chart)[0]
        return [{**rec, **base, "kind": "gdiv", "a": _frac(v.a)}]
    if k == "ber":
        return [{**base, "kind": "berezinian", "terms": _fn_terms(v.rho)}]
    if k == "map":
        terms = [
            t
            for direction, imgs in (("forward", v.images), ("inverse", v.inverse_images))
            for j, f in enumerate(imgs)
            for t in _fn_terms(f, image=j, direction=direction)
        ]
        return [{**base, "kind": "morphism", "terms": terms}]
    if k == "auto":
        rec = records(v.omega, chart)[0]
        return [
            {**base, "kind": "automorphism", "kappa": _frac(v.kappa), "a": _frac(v.a), "terms": rec["terms"]},
            *records(v.phi, chart, "phi"),
        ]
    raise TypeError(f"no record format for {v!r}")


def _text(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, str)):
        return str(v)
    if isinstance(v, D1Element):
        return format_d1(v)
    return format_value(v)


class Report:
    def __init__(self, chart):
        self.chart = chart
        self.lines: list = []
        self.records: list = []
        self.failed = False

    def value(self, v, label: str | None = None, role: str | None = None):
        text = _text(v)
        self.lines.append(f"{label}{text}" if label else text)
        self.records.extend(records(v, self.chart, role))

    def text(self, line: str):
        self.lines.append(line)

    def verdict(self, name: str, ok: bool, detail: str = "", witness=()):
        self.failed |= not ok
        status = "pass" if ok else "FAIL"
        self.lines.append(f"{name}: {status}" + (f" ({detail})" if detail else ""))
        self.records.append(
            {"chart": str(self.chart) if self.chart else None, "kind": "verdict", "name": name,
             "ok": ok, "detail": detail, "terms": []}
        )
        for i, w in enumerate(witness):
            self.lines.append(f"  witness: {_text(w)}")
            self.records.extend(records(w, self.chart, f"witness{i}"))


# ---------------------------------------------------------------------------
# commands


def _need(operands, n, usage):
    if len(operands) < n[0] or len(operands) > n[1]:
        raise UsageError(f"usage: {usage}")


def _op(S, text):
    return normal_form(S.parse(text, "op"))


def cmd_nf(S, ops, R, args):
    _need(ops, (1, 1), "nf OPERATOR")
    R.value(_op(S, ops[0]))


def cmd_order(S, ops, R, args):
    _need(ops, (1, 1), "order OPERATOR")
    D = _op(S, ops[0])
    k = D.order()
    if k <= 3:
        k2 = order_by_commutators(D)
        if k2 != k:
            R.verdict("order agreement", False, f"normal form {k}, commutators {k2}")
            return
    R.value(k)


def cmd_bracket(S, ops, R, args):
    _need(ops, (2, 2), "bracket A B")
    a, b = S.parse(ops[0]), S.parse(ops[1])
    if kind_of(a) == "field" and kind_of(b) == "field":
        R.value(bracket(a, b))
        return
    R.value(scommutator(_op(S, ops[0]), _op(S, ops[1])))


def cmd_split(S, ops, R, args):
    _need(ops, (1, 1), "split OPERATOR")
    e = split_d1(_op(S, ops[0]))
    R.value(e.f, "f = ", "function")
    R.value(e.X, "X = ", "field")


def cmd_grade(S, ops, R, args):
    _need(ops, (1, 1), "grade FIELD")
    for w, Xw in z_grading_decompose(S.parse(ops[0], "field")):
        R.value(Xw, f"{w}: ", f"weight{w}")


def cmd_decompose(S, ops, R, args):
    _need(ops, (1, 1), "decompose FIELD")
    X = S.parse(ops[0], "field")
    pairs = commutator_decompose(X)
    for i, (A, B) in enumerate(pairs):
        R.text(f"[{format_value(A)}, {format_value(B)}]")
        R.records.extend(records(A, R.chart, f"pair{i}-left") + records(B, R.chart, f"pair{i}-right"))
    total = resum_brackets(pairs) or SuperVectorField.zero(X.chart)
    R.verdict("resummation", total == X, f"{len(pairs)} bracket(s)", () if total == X else (total,))


def cmd_div(S, ops, R, args):
    _need(ops, (1, 2), "div FIELD [GDIV]")
    X = S.parse(ops[0], "field")
    if len(ops) == 2:
        R.value(apply_gd(S.parse(ops[1], "gdiv"), X))
    else:
        R.value(candiv(X))


def _gamma(G):
    return lambda X: apply_gd(G, X)


def cmd_cocycle_check(S, ops, R, args):
    _need(ops, (1, 1), "cocycle-check GDIV")
    G = S.parse(ops[0], "gdiv")
    rng = random.Random(args.seed)
    w = find_cocycle_witness(_gamma(G), S.chart, rng, args.trials)
    R.verdict("cocycle identity", w is None, "" if w is None else "fails on the pair below", w or ())
    if w is not None:
        return
    from .randgen import random_field, random_function

    for _ in range(args.trials):
        X, f = random_field(rng, S.chart), random_function(rng, S.chart)
        if not verify_gdiv_law(G, X, f):
            R.verdict("gdiv law", False, "fails on the field and function below", (X, f))
            return
    R.verdict("gdiv law", True, f"{args.trials} random pairs")


def cmd_cocycle_classify(S, ops, R, args):
    _need(ops, (1, 1), "cocycle-classify GDIV")
    G = S.parse(ops[0], "gdiv")
    try:
        got = classify_cocycle(_gamma(G), S.chart, random.Random(args.seed), args.trials)
    except ClassificationError as exc:
        R.verdict("classification", False, str(exc))
        return
    R.text(f"(a={format_scalar(got.a)}, omega={format_value(got.omega)})")
    R.records.extend(records(got, R.chart))


def cmd_coboundary(S, ops, R, args):
    _need(ops, (1, 1), "coboundary FUNCTION|GDIV")
    v = S.parse(ops[0])
    if kind_of(v) == "gdiv":
        f = is_coboundary(GeneralizedDivergence(v.a, v.omega))
        if f is None:
            R.value("absent (a != 0)")
        else:
            R.value(f, "f = ")
        return
    g = coboundary(S.parse(ops[0], "fn"))
    R.text(f"(a={format_scalar(g.a)}, omega={format_value(g.omega)})")
    R.records.extend(records(g, R.chart))


def cmd_berezinian_div(S, ops, R, args):
    _need(ops, (2, 2), "berezinian-div BER FIELD")
    s = S.parse(ops[0])
    if kind_of(s) != "ber":
        s = BerezinianSection(S.parse(ops[0], "fn"))
    R.value(div_from_berezinian(s, S.parse(ops[1], "field")))


def cmd_transform(S, ops, R, args):
    _need(ops, (2, 2), "transform MAP OBJECT")
    phi = S.parse(ops[0], "map")
    v = S.parse(ops[1])
    k = kind_of(v)
    if k == "scalar":
        v, k = S.parse(ops[1], "fn"), "fn"
    if k == "fn":
        R.value(pullback(phi, v))
    elif k == "field":
        R.value(pushforward_field(phi, v))
    elif k == "op":
        R.value(pushforward_op(phi, normal_form(v)))
    elif k == "ber":
        R.value(berezinian_transform(v, phi))
    else:
        raise BindingError(f"transform acts on functions, fields, operators and Berezinians, not a {k}")


def cmd_auto_check(S, ops, R, args):
    _need(ops, (1, 1), "auto-check AUTO")
    A = S.parse(ops[0], "auto")
    v = verify_d1_automorphism(A, args.trials, random.Random(args.seed))
    if v:
        R.verdict("automorphism", True, v.detail)
        R.value(v.witness, "inverse = ", "inverse")
    else:
        w = v.witness
        wit = () if w is None else (w if isinstance(w, tuple) else (w,))
        R.verdict("automorphism", False, v.detail, wit)


def cmd_exceptional(S, ops, R, args):
    _need(ops, (0, 1), "exceptional [OBJECT]")
    chart = S.require_chart()
    T = exceptional_map(chart)
    if ops:
        kind = "op" if (chart.p, chart.q) == (0, 1) else "field"
        v = S.parse(ops[0], kind)
        R.value(T(normal_form(v) if kind == "op" else v))
        return
    for name, v in exceptional_checks(chart, args.trials, random.Random(args.seed)):
        R.verdict(name, bool(v), v.detail)


def cmd_clifford_rep(S, ops, R, args):
    _need(ops, (1, 1), "clifford-rep OPERATOR")
    M = rep(_op(S, ops[0]))
    R.text(format_fock(M))
    R.records.append(
        {"chart": str(R.chart), "kind": "matrix", "terms": [
            {"row": i, "col": j, **_frac(c)} for i, row in enumerate(M.tolist()) for j, c in enumerate(row) if c
        ]}
    )


def cmd_clifford_span(S, ops, R, args):
    _need(ops, (1, 1), "clifford-span Q")
    try:
        q = int(ops[0])
    except ValueError:
        raise UsageError("clifford-span takes an integer q") from None
    if q < 1:
        raise UsageError("clifford-span needs q >= 1")
    from .clifford import MAX_Q, CliffordChartError

    if q > MAX_Q:
        raise CliffordChartError(f"q = {q} exceeds the cap {MAX_Q}")
    r = fock_rank(q)
    ok = r == 4**q
    R.lines.append(f"{'true' if ok else 'false'} (rank {r} / {4 ** q})")
    R.records.append({"chart": f"0|{q}", "kind": "verdict", "name": "span", "ok": ok,
                      "detail": f"rank {r} / {4 ** q}", "terms": []})
    R.failed |= not ok


def cmd_swap(S, ops, R, args):
    _need(ops, (1, 1), "swap OPERATOR")
    R.value(swap_automorphism(_op(S, ops[0])))


COMMANDS = {
    "nf": cmd_nf,
    "order": cmd_order,
    "bracket": cmd_bracket,
    "split": cmd_split,
    "grade": cmd_grade,
    "decompose": cmd_decompose,
    "div": cmd_div,
    "cocycle-check": cmd_cocycle_check,
    "cocycle-classify": cmd_cocycle_classify,
    "coboundary": cmd_coboundary,
    "berezinian-div": cmd_berezinian_div,
    "transform": cmd_transform,
    "auto-check": cmd_auto_check,
    "exceptional": cmd_exceptional,
    "clifford-rep": cmd_clifford_rep,
    "clifford-span": cmd_clifford_span,
    "swap": cmd_swap,
}

NO_CHART = {"clifford-span"}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superdop", description="Exact superdifferential operator toolkit.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("args", nargs="*", help="operands, then bindings of the form 'name = expr'")
    p.add_argument("--session", metavar="FILE", help="file of declarations")
    p.add_argument("--json", action="store_true", help="print machine-readable records")
    p.add_argument("--trials", type=int, default=100, help="random trials for checks")
    p.add_argument("--seed", type=int, default=0, help="seed for random trials")
    p.add_argument("--chart", metavar="SPEC", help="chart such as '1|2' or '(x | xi1, xi2)'")
    return p


def _session(args) -> Session:
    S = Session()
    if args.chart:
        S.chart = parse_chart_spec(args.chart)
    if args.session:
        try:
            with open(args.session, encoding="utf-8") as fh:
                S.load(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read session file: {exc}") from None
    bindings = [a for a in args.args if "=" in a]
    if bindings:
        S.load("\n".join(bindings))
    return S


def run(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    operands = [a for a in args.args if "=" not in a]
    try:
        S = _session(args)
        if args.command not in NO_CHART:
            S.require_chart()
        R = Report(S.chart)
        COMMANDS[args.command](S, operands, R, args)
    except UsageError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_PARSE
    except BindingError as exc:
        print(f"binding error: {exc}", file=err)
        return EXIT_BINDING
    except (ChartMismatch, ParityError) as exc:
        print(f"chart error: {exc}", file=err)
        return EXIT_CHART
    except (ValueError, ZeroDivisionError) as exc:
        print(f"domain error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_DOMAIN
    if args.json:
        print(json.dumps(R.records, sort_keys=True, indent=1), file=out)
    else:
        print("\n".join(R.lines), file=out)
    return EXIT_VERDICT if R.failed else EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
