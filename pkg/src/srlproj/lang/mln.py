"""Markov logic network dialect: quantifier-free weighted formulas.

::

    edge(X,Y) ^ red(X) ^ red(Y)  :: 1.2;
    edge(X,Y) ^ red(X) ^ !red(Y) :: -0.2;
    a(X) ^ e(X,Y) :: w;            // a bare name (or $w) is a free weight

Connectives are ``!`` (not), ``^`` (and) and ``v`` (or), with parentheses.
"""

from __future__ import annotations

from ..core import Signature
from ..errors import ArityError
from .syntax import (
    And,
    Atom,
    Formula,
    MlnFormula,
    MlnSpec,
    Not,
    Or,
    Param,
    Pos,
    TokenStream,
    Value,
    format_value,
    formula_atoms,
)


def parse_mln(text: str) -> MlnSpec:
    ts = TokenStream(text)
    formulas = []
    arities: dict[str, int] = {}
    while not ts.at("eof"):
        start = ts.peek()
        formula = _disjunction(ts)
        ts.expect("::")
        weight = _weight(ts)
        ts.expect(";")
        for atom in formula_atoms(formula):
            known = arities.setdefault(atom.rel, len(atom.args))
            if known != len(atom.args):
                raise ArityError(
                    f"{atom.rel} used with {len(atom.args)} arguments, earlier with {known}",
                    atom.pos.line,
                    atom.pos.col,
                )
        formulas.append(MlnFormula(formula, weight, Pos(start.line, start.col)))
    return MlnSpec(tuple(formulas), Signature(tuple(arities.items())))


def _weight(ts: TokenStream) -> Value:
    tok = ts.peek()
    if tok.kind == "num":
        return ts.number()
    if tok.kind == "param":
        ts.next()
        return Param(tok.text[1:])
    if tok.kind == "ident":
        ts.next()
        return Param(tok.text)
    raise ts.error(f"expected a weight, found {tok.text or tok.kind!r}")


def _disjunction(ts: TokenStream) -> Formula:
    args = [_conjunction(ts)]
    while ts.at("ident", "v"):
        ts.next()
        args.append(_conjunction(ts))
    return args[0] if len(args) == 1 else Or(tuple(args))


def _conjunction(ts: TokenStream) -> Formula:
    args = [_unary(ts)]
    while ts.accept("^"):
        args.append(_unary(ts))
    return args[0] if len(args) == 1 else And(tuple(args))


def _unary(ts: TokenStream) -> Formula:
    if ts.accept("!") or ts.accept("~"):
        return Not(_unary(ts))
    if ts.accept("("):
        inner = _disjunction(ts)
        ts.expect(")")
        return inner
    return ts.atom()


def format_mln(spec: MlnSpec) -> str:
    return "".join(f"{format_formula(f.formula)} :: {format_value(f.weight)};\n" for f in spec.formulas)


def format_formula(formula: Formula) -> str:
    if isinstance(formula, Atom):
        return str(formula)
    if isinstance(formula, Not):
        return f"!{_wrap(formula.arg)}"
    joiner = " ^ " if isinstance(formula, And) else " v "
    return joiner.join(_wrap(arg) for arg in formula.args)


def _wrap(formula: Formula) -> str:
    text = format_formula(formula)
    return text if isinstance(formula, (Atom, Not)) else f"({text})"
