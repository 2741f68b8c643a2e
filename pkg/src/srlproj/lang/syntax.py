"""AST node types for the three model dialects and a shared tokenizer."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ..core import Signature
from ..errors import ModelSyntaxError


@dataclass(frozen=True)
class Pos:
    line: int
    col: int


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[str, ...] = ()
    pos: Pos | None = field(default=None, compare=False, repr=False)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self.args)

    def __str__(self):
        return f"{self.rel}({','.join(self.args)})" if self.args else self.rel


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"!{self.atom}"


@dataclass(frozen=True)
class Param:
    name: str

    def __str__(self):
        return f"${self.name}"


Value = Union[float, Param]

# --- RBN -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class IfThenElse:
    condition: tuple[Literal, ...]
    then: "ProbFormula"
    otherwise: "ProbFormula"


@dataclass(frozen=True)
class NoisyOr:
    inner: "ProbFormula"
    var: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


ProbFormula = Union[Const, Param, IfThenElse, NoisyOr]


@dataclass(frozen=True)
class RbnFormula:
    head: Atom
    body: ProbFormula


@dataclass(frozen=True)
class RbnSpec:
    formulas: tuple[RbnFormula, ...]
    signature: Signature

    dialect = "rbn"

    def formula_for(self, rel: str) -> RbnFormula:
        for f in self.formulas:
            if f.head.rel == rel:
                return f
        raise KeyError(rel)


# --- MLN -------------------------------------------------------------------


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


Formula = Union[Atom, Not, And, Or]


def formula_atoms(formula: Formula) -> list[Atom]:
    if isinstance(formula, Atom):
        return [formula]
    if isinstance(formula, Not):
        return formula_atoms(formula.arg)
    return [a for arg in formula.args for a in formula_atoms(arg)]


def formula_variables(formula: Formula) -> tuple[str, ...]:
    """Variables in order of first occurrence."""
    seen: dict[str, None] = {}
    for atom in formula_atoms(formula):
        for v in atom.args:
            seen.setdefault(v)
    return tuple(seen)


@dataclass(frozen=True)
class MlnFormula:
    formula: Formula
    weight: Value
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MlnSpec:
    formulas: tuple[MlnFormula, ...]
    signature: Signature

    dialect = "mln"


# --- ProbLog ---------------------------------------------------------------


@dataclass(frozen=True)
class LabeledFact:
    label: Value
    atom: Atom


@dataclass(frozen=True)
class Clause:
    head: Atom
    body: tuple[Atom, ...]
    pos: Pos | None = field(default=None, compare=False, repr=False)

    @property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for atom in (self.head, *self.body):
            for v in atom.args:
                seen.setdefault(v)
        return tuple(seen)


@dataclass(frozen=True)
class ProblogSpec:
    facts: tuple[LabeledFact, ...]
    clauses: tuple[Clause, ...]
    observable: tuple[str, ...]
    signature: Signature

    dialect = "problog"

    @property
    def fact_relations(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(f.atom.rel for f in self.facts))

    @property
    def observable_signature(self) -> Signature:
        return self.signature.restrict(self.observable)


ModelSpec = Union[RbnSpec, MlnSpec, ProblogSpec]


# --- tokenizer -------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<noisyor>noisy-or\b)
  | (?P<op><-|:-|::|[:;,.(){}|&^!~/])
  | (?P<num>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<param>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            value = match.group()
            tokens.append(Token(value if kind == "op" else kind, value, line, col))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            wanted = text or kind
            found = tok.text or tok.kind
            raise ModelSyntaxError(f"expected {wanted!r}, found {found!r}", tok.line, tok.col)
        return self.next()

    def error(self, message: str, tok: Token | None = None) -> ModelSyntaxError:
        tok = tok or self.peek()
        return ModelSyntaxError(message, tok.line, tok.col)

    def atom(self) -> Atom:
        """``rel`` or ``rel(A, B, ...)`` with variable arguments."""
        name = self.expect("ident")
        args = []
        if self.accept("("):
            if not self.at(")"):
                while True:
                    tok = self.next()
                    if tok.kind != "var":
                        raise self.error(
                            f"argument {tok.text!r} of {name.text} is not a variable "
                            "(domain constants are not supported)",
                            tok,
                        )
                    args.append(tok.text)
                    if not self.accept(","):
                        break
            self.expect(")")
        return Atom(name.text, tuple(args), Pos(name.line, name.col))

    def number(self) -> float:
        tok = self.expect("num")
        return float(tok.text)


def format_number(x: float) -> str:
    return repr(float(x))


def format_value(value: Value) -> str:
    return str(value) if isinstance(value, Param) else format_number(value)
