"""Parsers, printers and fragment checkers for the RBN, MLN and ProbLog dialects."""

from __future__ import annotations

from pathlib import Path

from .fragments import (
    FragmentReport,
    Violation,
    check_mln_projective,
    check_problog_projective,
    check_projective_fragment,
    check_rbn_projective,
)
from .mln import format_mln, parse_mln
from .problog import format_problog, parse_problog
from .rbn import format_rbn, iter_nodes, parse_rbn
from .syntax import (
    And,
    Atom,
    Clause,
    Const,
    IfThenElse,
    LabeledFact,
    Literal,
    MlnFormula,
    MlnSpec,
    ModelSpec,
    NoisyOr,
    Not,
    Or,
    Param,
    ProblogSpec,
    RbnFormula,
    RbnSpec,
    formula_atoms,
    formula_variables,
)

DIALECTS = ("rbn", "mln", "problog")
EXTENSIONS = {".rbn": "rbn", ".mln": "mln", ".plp": "problog"}

_PARSERS = {"rbn": parse_rbn, "mln": parse_mln, "problog": parse_problog}
_PRINTERS = {RbnSpec: format_rbn, MlnSpec: format_mln, ProblogSpec: format_problog}


def parse_model(text: str, dialect: str) -> ModelSpec:
    try:
        parser = _PARSERS[dialect]
    except KeyError:
        raise ValueError(f"unknown dialect {dialect!r}; expected one of {DIALECTS}") from None
    return parser(text)


def format_model(spec: ModelSpec) -> str:
    return _PRINTERS[type(spec)](spec)


def dialect_for_path(path: str | Path) -> str:
    suffix = Path(path).suffix
    if suffix not in EXTENSIONS:
        raise ValueError(f"cannot infer dialect from {suffix!r}; pass it explicitly")
    return EXTENSIONS[suffix]


def load_model(path: str | Path, dialect: str | None = None) -> ModelSpec:
    return parse_model(Path(path).read_text(), dialect or dialect_for_path(path))


def free_parameters(spec: ModelSpec) -> tuple[str, ...]:
    """Names of all free parameters, in order of first occurrence."""
    names: dict[str, None] = {}
    if isinstance(spec, RbnSpec):
        for f in spec.formulas:
            for node in iter_nodes(f.body):
                if isinstance(node, Param):
                    names.setdefault(node.name)
    elif isinstance(spec, MlnSpec):
        for f in spec.formulas:
            if isinstance(f.weight, Param):
                names.setdefault(f.weight.name)
    elif isinstance(spec, ProblogSpec):
        for fact in spec.facts:
            if isinstance(fact.label, Param):
                names.setdefault(fact.label.name)
    else:
        raise TypeError(f"not a model spec: {type(spec).__name__}")
    return tuple(names)


__all__ = [
    "And", "Atom", "Clause", "Const", "DIALECTS", "FragmentReport", "IfThenElse", "LabeledFact",
    "Literal", "MlnFormula", "MlnSpec", "ModelSpec", "NoisyOr", "Not", "Or", "Param", "ProblogSpec",
    "RbnFormula", "RbnSpec", "Violation", "check_mln_projective", "check_problog_projective",
    "check_projective_fragment", "check_rbn_projective", "dialect_for_path", "format_model",
    "formula_atoms", "formula_variables", "free_parameters", "load_model", "parse_model",
]
