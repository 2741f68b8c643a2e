"""Static checks for the syntactic fragments that guarantee projectivity.

* RBN: no combination function (``noisy-or``) anywhere.
* MLN: inside each formula, all atoms carry exactly the same set of variables.
* ProbLog: no clause body mentions a variable that is absent from its head.

The checks look at syntax only and never at parameter values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .rbn import iter_nodes
from .syntax import MlnSpec, NoisyOr, Pos, ProblogSpec, RbnSpec, formula_atoms


@dataclass(frozen=True)
class Violation:
    message: str
    pos: Pos | None = None

    def to_dict(self) -> dict:
        out = {"message": self.message}
        if self.pos is not None:
            out.update(line=self.pos.line, col=self.pos.col)
        return out


@dataclass(frozen=True)
class FragmentReport:
    dialect: str
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "dialect": self.dialect,
            "projective_fragment": self.passed,
            "violations": [v.to_dict() for v in self.violations],
        }


def check_rbn_projective(spec: RbnSpec) -> FragmentReport:
    violations = []
    for f in spec.formulas:
        for node in iter_nodes(f.body):
            if isinstance(node, NoisyOr):
                violations.append(
                    Violation(f"combination function noisy-or over {node.var} in formula for {f.head}", node.pos)
                )
    return FragmentReport("rbn", tuple(violations))


def check_mln_projective(spec: MlnSpec) -> FragmentReport:
    violations = []
    for i, f in enumerate(spec.formulas):
        atoms = formula_atoms(f.formula)
        full = frozenset().union(*(a.variables for a in atoms))
        for atom in atoms:
            missing = full - atom.variables
            if missing:
                names = ", ".join(sorted(missing))
                violations.append(
                    Violation(f"formula {i + 1}: atom {atom} lacks variable(s) {names}", atom.pos or f.pos)
                )
    return FragmentReport("mln", tuple(violations))


def check_problog_projective(spec: ProblogSpec) -> FragmentReport:
    violations = []
    for c in spec.clauses:
        head_vars = c.head.variables
        fresh = [v for v in dict.fromkeys(v for a in c.body for v in a.args) if v not in head_vars]
        if fresh:
            violations.append(
                Violation(f"clause for {c.head}: body variable(s) {', '.join(fresh)} not in the head", c.pos)
            )
    return FragmentReport("problog", tuple(violations))


def check_projective_fragment(spec) -> FragmentReport:
    if isinstance(spec, RbnSpec):
        return check_rbn_projective(spec)
    if isinstance(spec, MlnSpec):
        return check_mln_projective(spec)
    if isinstance(spec, ProblogSpec):
        return check_problog_projective(spec)
    raise TypeError(f"not a model spec: {type(spec).__name__}")
