"""ProbLog dialect without domain constants.

::

    0.8 :: red(X).
    edge(X,Y) :- red(X), red(Y).
    observable red/1, edge/2.

Without ``observable`` declarations every relation is observable.
"""

from __future__ import annotations

from graphlib import CycleError, TopologicalSorter

from ..core import Signature
from ..errors import ArityError, ModelSyntaxError, StratificationError
from .syntax import (
    Atom,
    Clause,
    LabeledFact,
    Param,
    Pos,
    ProblogSpec,
    TokenStream,
    Value,
    format_value,
)


def parse_problog(text: str) -> ProblogSpec:
    ts = TokenStream(text)
    facts: list[LabeledFact] = []
    clauses: list[Clause] = []
    observable: list[tuple[str, int, Pos]] = []
    arities: dict[str, int] = {}

    def note(atom: Atom):
        known = arities.setdefault(atom.rel, len(atom.args))
        if known != len(atom.args):
            raise ArityError(
                f"{atom.rel} used with {len(atom.args)} arguments, earlier with {known}",
                atom.pos.line,
                atom.pos.col,
            )

    while not ts.at("eof"):
        tok = ts.peek()
        if tok.kind == "ident" and tok.text == "observable" and ts.peek(1).kind == "ident":
            ts.next()
            while True:
                name = ts.expect("ident")
                ts.expect("/")
                arity = ts.expect("num")
                observable.append((name.text, int(float(arity.text)), Pos(name.line, name.col)))
                if not ts.accept(","):
                    break
            ts.expect(".")
            continue
        if tok.kind in ("num", "param") or (tok.kind == "ident" and ts.peek(1).kind == "::"):
            label = _label(ts)
            ts.expect("::")
            atom = ts.atom()
            ts.expect(".")
            note(atom)
            facts.append(LabeledFact(label, atom))
            continue
        head = ts.atom()
        body = []
        if ts.accept(":-"):
            body.append(ts.atom())
            while ts.accept(","):
                body.append(ts.atom())
        ts.expect(".")
        for atom in (head, *body):
            note(atom)
        clauses.append(Clause(head, tuple(body), Pos(tok.line, tok.col)))

    fact_rels = {f.atom.rel for f in facts}
    clause_rels = {c.head.rel for c in clauses}
    for c in clauses:
        if c.head.rel in fact_rels:
            raise ModelSyntaxError(
                f"{c.head.rel} is both a labeled fact and a clause head", c.pos.line, c.pos.col
            )
        for atom in c.body:
            if atom.rel not in fact_rels and atom.rel not in clause_rels:
                raise ModelSyntaxError(f"relation {atom.rel} is never defined", atom.pos.line, atom.pos.col)

    graph = {rel: set() for rel in clause_rels}
    for c in clauses:
        graph[c.head.rel].update(a.rel for a in c.body if a.rel in clause_rels)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        cycle = " -> ".join(exc.args[1])
        raise StratificationError(f"clauses are recursive: {cycle}") from None

    for name, arity, pos in observable:
        if name not in arities:
            raise ModelSyntaxError(f"observable relation {name} does not occur in the model", pos.line, pos.col)
        if arities[name] != arity:
            raise ArityError(f"{name} has arity {arities[name]}, declared observable as {name}/{arity}", pos.line, pos.col)
    signature = Signature(tuple(arities.items()))
    declared = {name for name, _, _ in observable}
    obs = tuple(n for n in signature.names if n in declared) if observable else signature.names
    return ProblogSpec(tuple(facts), tuple(clauses), obs, signature)


def _label(ts: TokenStream) -> Value:
    tok = ts.next()
    if tok.kind == "num":
        value = float(tok.text)
        if not 0.0 <= value <= 1.0:
            raise ts.error(f"label {value} outside [0, 1]", tok)
        return value
    return Param(tok.text[1:] if tok.kind == "param" else tok.text)


def clause_order(spec: ProblogSpec) -> tuple[str, ...]:
    """Clause-head relations, each after every clause-head relation it depends on."""
    heads = {c.head.rel for c in spec.clauses}
    graph = {rel: set() for rel in heads}
    for c in spec.clauses:
        graph[c.head.rel].update(a.rel for a in c.body if a.rel in heads)
    return tuple(TopologicalSorter(graph).static_order())


def format_problog(spec: ProblogSpec) -> str:
    lines = [f"{format_value(f.label)} :: {f.atom}." for f in spec.facts]
    for c in spec.clauses:
        lines.append(f"{c.head} :- {', '.join(map(str, c.body))}." if c.body else f"{c.head}.")
    if spec.observable != spec.signature.names:
        decls = ", ".join(f"{n}/{spec.signature.arity(n)}" for n in spec.observable)
        lines.append(f"observable {decls}.")
    return "\n".join(lines) + "\n"
