"""Relational Bayesian network dialect.

::

    red(X)    <- 0.3;
    black(X)  <- if red(X): 0 else: 0.5;
    edge(X,Y) <- if red(X) & red(Y): 0.7
                 else if black(X) & black(Y): 0.4
                 else: 0.05;
    t(X)      <- noisy-or{ if edge(X,Y) & red(Y): 0.2 | Y };

A formula may only mention relations defined above it.  Inside ``noisy-or`` an
``if`` without ``else`` contributes probability 0 when its condition fails.
"""

from __future__ import annotations

from ..core import Signature
from ..errors import ArityError, ModelSyntaxError, StratificationError
from .syntax import (
    Atom,
    Const,
    IfThenElse,
    Literal,
    NoisyOr,
    Param,
    Pos,
    ProbFormula,
    RbnFormula,
    RbnSpec,
    TokenStream,
    format_number,
)


def parse_rbn(text: str) -> RbnSpec:
    ts = TokenStream(text)
    formulas: list[RbnFormula] = []
    arities: dict[str, int] = {}
    while not ts.at("eof"):
        head = ts.atom()
        if head.rel in arities:
            raise ModelSyntaxError(f"relation {head.rel} is defined twice", head.pos.line, head.pos.col)
        if len(set(head.args)) != len(head.args):
            raise ModelSyntaxError(f"head {head} repeats a variable", head.pos.line, head.pos.col)
        ts.expect("<-")
        body = _Body(ts, arities, head).formula(set(head.args), inside_noisy_or=False)
        ts.expect(";")
        arities[head.rel] = len(head.args)
        formulas.append(RbnFormula(head, body))
    signature = Signature(tuple(arities.items()))
    return RbnSpec(tuple(formulas), signature)


class _Body:
    def __init__(self, ts: TokenStream, defined: dict[str, int], head: Atom):
        self.ts = ts
        self.defined = defined
        self.head = head

    def formula(self, scope: set[str], inside_noisy_or: bool) -> ProbFormula:
        ts = self.ts
        tok = ts.peek()
        if tok.kind == "num":
            value = ts.number()
            if not 0.0 <= value <= 1.0:
                raise ts.error(f"probability {value} outside [0, 1]", tok)
            return Const(value)
        if tok.kind == "param":
            ts.next()
            return Param(tok.text[1:])
        if ts.accept("("):
            inner = self.formula(scope, inside_noisy_or=False)
            ts.expect(")")
            return inner
        if tok.kind == "ident" and tok.text == "if":
            ts.next()
            condition = self.conjunction(scope)
            ts.expect(":")
            then = self.formula(scope, inside_noisy_or=False)
            if ts.at("ident", "else"):
                ts.next()
                ts.accept(":")
                otherwise = self.formula(scope, inside_noisy_or=False)
            elif inside_noisy_or:
                otherwise = Const(0.0)
            else:
                raise ts.error("'if' needs an 'else' branch outside noisy-or")
            return IfThenElse(condition, then, otherwise)
        if tok.kind == "noisyor":
            ts.next()
            ts.expect("{")
            bar = ts.i
            # the bound variable follows '|', so find it before parsing the guard
            depth = 0
            while True:
                t = ts.tokens[bar]
                if t.kind == "eof":
                    raise ts.error("unterminated noisy-or")
                if t.kind in ("(", "{"):
                    depth += 1
                elif t.kind in (")", "}"):
                    depth -= 1
                elif t.kind == "|" and depth == 0:
                    break
                bar += 1
            var_tok = ts.tokens[bar + 1]
            if var_tok.kind != "var":
                raise ts.error("noisy-or must bind a variable after '|'", var_tok)
            var = var_tok.text
            if var in scope:
                raise ts.error(f"noisy-or variable {var} shadows an enclosing variable", var_tok)
            inner = self.formula(scope | {var}, inside_noisy_or=True)
            ts.expect("|")
            ts.expect("var")
            ts.expect("}")
            return NoisyOr(inner, var, Pos(tok.line, tok.col))
        raise ts.error(f"expected a probability formula, found {tok.text or tok.kind!r}")

    def conjunction(self, scope: set[str]) -> tuple[Literal, ...]:
        lits = [self.literal(scope)]
        while self.ts.accept("&"):
            lits.append(self.literal(scope))
        return tuple(lits)

    def literal(self, scope: set[str]) -> Literal:
        positive = not (self.ts.accept("!") or self.ts.accept("~"))
        atom = self.ts.atom()
        line, col = atom.pos.line, atom.pos.col
        if atom.rel == self.head.rel:
            raise StratificationError(f"{atom.rel} refers to itself", line, col)
        if atom.rel not in self.defined:
            raise StratificationError(
                f"{atom.rel} is used before it is defined (formulas may only use earlier relations)",
                line,
                col,
            )
        if len(atom.args) != self.defined[atom.rel]:
            raise ArityError(
                f"{atom.rel} has arity {self.defined[atom.rel]}, used with {len(atom.args)} arguments",
                line,
                col,
            )
        for v in atom.args:
            if v not in scope:
                raise ModelSyntaxError(f"variable {v} is not bound in this formula", line, col)
        return Literal(atom, positive)


def format_rbn(spec: RbnSpec) -> str:
    return "".join(f"{f.head} <- {_format_pf(f.body)};\n" for f in spec.formulas)


def _format_pf(pf: ProbFormula) -> str:
    if isinstance(pf, Const):
        return format_number(pf.value)
    if isinstance(pf, Param):
        return str(pf)
    if isinstance(pf, IfThenElse):
        cond = " & ".join(map(str, pf.condition))
        return f"if {cond}: {_format_pf(pf.then)} else: {_format_pf(pf.otherwise)}"
    if isinstance(pf, NoisyOr):
        return f"noisy-or{{ {_format_pf(pf.inner)} | {pf.var} }}"
    raise TypeError(pf)


def iter_nodes(pf: ProbFormula):
    yield pf
    if isinstance(pf, IfThenElse):
        yield from iter_nodes(pf.then)
        yield from iter_nodes(pf.otherwise)
    elif isinstance(pf, NoisyOr):
        yield from iter_nodes(pf.inner)
