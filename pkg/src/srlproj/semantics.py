"""Exact distributions Q^(n)_theta for the three dialects, by full grounding.

Every engine evaluates all worlds at once: a world is an integer encoding and
the truth value of ground atom ``i`` across all worlds is the boolean vector
``(encodings >> i) & 1``.  Summations run in ascending encoding order.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Mapping, Sequence

import numpy as np

from .core import Distribution, Signature, World, check_cap, parse_ground_atom
from .errors import CapExceeded, InvalidParameter, MissingParameter, ParseError, ZeroEvidence
from .lang import (
    And,
    Atom,
    Const,
    IfThenElse,
    MlnSpec,
    NoisyOr,
    Not,
    Param,
    ProblogSpec,
    RbnSpec,
    formula_variables,
    free_parameters,
)
from .lang.problog import clause_order

ParamVector = Mapping[str, float]


@lru_cache(maxsize=4)
def _bit_matrix(num_atoms: int) -> np.ndarray:
    """Row ``i`` holds the truth value of atom ``i`` in every world, ascending encodings."""
    enc = np.arange(1 << num_atoms, dtype=np.int64)
    rows = np.empty((num_atoms, enc.size), dtype=bool)
    for i in range(num_atoms):
        rows[i] = (enc >> i) & 1
    rows.flags.writeable = False
    return rows


class _Bits:
    """Lazy per-atom truth vectors for a batch of worlds (all worlds when ``encodings`` is None)."""

    def __init__(self, num_atoms: int, encodings: np.ndarray | None = None):
        self.encodings = encodings
        self.size = (1 << num_atoms) if encodings is None else len(encodings)
        self._matrix = _bit_matrix(num_atoms) if encodings is None else None
        self._cache: dict[int, np.ndarray] = {}

    def __call__(self, atom: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix[atom]
        if atom not in self._cache:
            self._cache[atom] = ((self.encodings >> atom) & 1).astype(bool)
        return self._cache[atom]


def _ground_index(signature: Signature, n: int, atom: Atom, env: Mapping[str, int]) -> int:
    return signature.atom_index(atom.rel, tuple(env[v] for v in atom.args), n)


# --- models ----------------------------------------------------------------


class Model(ABC):
    """A parametric family of distributions, one per domain size."""

    name: str
    signature: Signature
    params: tuple[str, ...]
    #: "prob" parameters live in (0, 1); "weight" parameters are unrestricted reals.
    param_kind: str = "prob"

    _cache_size = 4

    def resolve(self, theta: ParamVector | None) -> dict[str, float]:
        theta = dict(theta or {})
        out = {}
        for name in self.params:
            if name not in theta:
                raise MissingParameter(f"no value for parameter {name!r} of {self.name}")
            value = float(theta[name])
            if self.param_kind == "prob" and not 0.0 < value < 1.0:
                raise InvalidParameter(f"parameter {name}={value} must lie in (0, 1)")
            if not math.isfinite(value):
                raise InvalidParameter(f"parameter {name}={value} is not finite")
            out[name] = value
        return out

    def distribution(self, n: int, theta: ParamVector | None = None) -> Distribution:
        values = self.resolve(theta)
        key = (n, tuple(sorted(values.items())))
        cache = self.__dict__.setdefault("_dist_cache", OrderedDict())
        if key in cache:
            cache.move_to_end(key)
            return cache[key]
        check_cap(self.signature.num_atoms(n))
        dist = Distribution(self.signature, n, self._probs(n, values))
        cache[key] = dist
        if len(cache) > self._cache_size:
            cache.popitem(last=False)
        return dist

    def log_probs(self, n: int, theta: ParamVector | None, encodings: Sequence[int]) -> np.ndarray:
        """log Q^(n)_theta for a batch of world encodings."""
        probs = self.distribution(n, theta).probs[np.asarray(encodings, dtype=np.int64)]
        with np.errstate(divide="ignore"):
            return np.log(probs)

    def log_prob(self, world: World, theta: ParamVector | None = None) -> float:
        if world.signature != self.signature:
            raise ValueError(f"world signature {world.signature} does not match model {self.signature}")
        return float(self.log_probs(world.n, theta, [world.bits])[0])

    @abstractmethod
    def _probs(self, n: int, theta: dict[str, float]) -> np.ndarray: ...

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class RbnModel(Model):
    def __init__(self, spec: RbnSpec, name: str = "rbn"):
        self.spec = spec
        self.name = name
        self.signature = spec.signature
        self.params = free_parameters(spec)

    def ground(self, n: int) -> list[tuple[int, tuple]]:
        """``(atom index, compiled body)`` for every ground atom, canonical order; cached per n."""
        cache = self.__dict__.setdefault("_ground_cache", {})
        if n not in cache:
            sig = self.signature
            out = []
            for formula in self.spec.formulas:
                head = formula.head
                for args in itertools.product(range(n), repeat=len(head.args)):
                    env = dict(zip(head.args, args))
                    out.append((sig.atom_index(head.rel, args, n), self._compile(formula.body, env, n)))
            cache[n] = out
        return cache[n]

    def _compile(self, pf, env, n) -> tuple:
        if isinstance(pf, Const):
            return ("const", pf.value)
        if isinstance(pf, Param):
            return ("param", pf.name)
        if isinstance(pf, IfThenElse):
            cond = tuple((_ground_index(self.signature, n, lit.atom, env), lit.positive) for lit in pf.condition)
            return ("if", cond, self._compile(pf.then, env, n), self._compile(pf.otherwise, env, n))
        if isinstance(pf, NoisyOr):
            # the bound variable ranges over the whole domain, head arguments included
            return ("noisy-or", tuple(self._compile(pf.inner, {**env, pf.var: y}, n) for y in range(n)))
        raise TypeError(pf)

    def atom_probabilities(self, n: int, theta: dict[str, float], bits):
        """Yield ``(atom index, P(atom true | parents))`` in canonical atom order."""
        for atom, body in self.ground(n):
            yield atom, self._eval(body, theta, bits)

    def _eval(self, node, theta, bits):
        tag = node[0]
        if tag == "const":
            return node[1]
        if tag == "param":
            return theta[node[1]]
        if tag == "if":
            cond = None
            for atom, positive in node[1]:
                b = bits(atom) if positive else ~bits(atom)
                cond = b if cond is None else cond & b
            return np.where(cond, self._eval(node[2], theta, bits), self._eval(node[3], theta, bits))
        none = 1.0
        for inner in node[1]:
            none = none * (1.0 - self._eval(inner, theta, bits))
        return 1.0 - none

    def _probs(self, n, theta):
        bits = _Bits(self.signature.num_atoms(n))
        probs = np.ones(bits.size)
        for atom, p in self.atom_probabilities(n, theta, bits):
            probs *= np.where(bits(atom), p, 1.0 - p)
        return probs

    def log_probs(self, n, theta, encodings):
        values = self.resolve(theta)
        num = self.signature.num_atoms(n)
        enc = np.asarray(encodings, dtype=np.int64)
        if enc.size and (enc.min() < 0 or enc.max() >= (1 << num)):
            raise ValueError("world encoding out of range")
        bits = _Bits(num, enc)
        out = np.zeros(enc.size)
        with np.errstate(divide="ignore"):
            for atom, p in self.atom_probabilities(n, values, bits):
                out += np.log(np.where(bits(atom), p, 1.0 - p))
        return out

    def log_probs_grid(self, n: int, columns: Mapping[str, np.ndarray], encodings: Sequence[int]) -> np.ndarray:
        """log Q^(n) at many parameter vectors at once, shape (points, worlds).

        ``columns`` maps each parameter to a 1-d array of values, one per point;
        values are not range-checked.
        """
        missing = [p for p in self.params if p not in columns]
        if missing:
            raise MissingParameter(f"no value for parameter {missing[0]!r} of {self.name}")
        theta = {p: np.asarray(columns[p], dtype=float)[:, None] for p in self.params}
        points = len(next(iter(theta.values()))) if theta else 1
        enc = np.asarray(encodings, dtype=np.int64)
        bits = _Bits(self.signature.num_atoms(n), enc)
        out = np.zeros((points, enc.size))
        with np.errstate(divide="ignore"):
            for atom, p in self.atom_probabilities(n, theta, bits):
                out += np.log(np.where(bits(atom), p, 1.0 - p))
        return out


@lru_cache(maxsize=8)
def _mln_counts(spec: MlnSpec, n: int) -> np.ndarray:
    """Number of satisfying groundings of each formula in every world, shape (formulas, worlds)."""
    sig = spec.signature
    num = sig.num_atoms(n)
    check_cap(num)
    bits = _Bits(num)

    def truth(f, env):
        if isinstance(f, Atom):
            return bits(_ground_index(sig, n, f, env))
        if isinstance(f, Not):
            return ~truth(f.arg, env)
        parts = [truth(a, env) for a in f.args]
        return reduce(np.logical_and if isinstance(f, And) else np.logical_or, parts)

    counts = np.zeros((len(spec.formulas), bits.size), dtype=np.int32)
    for i, wf in enumerate(spec.formulas):
        variables = formula_variables(wf.formula)
        for values in itertools.product(range(n), repeat=len(variables)):
            counts[i] += truth(wf.formula, dict(zip(variables, values)))
    counts.flags.writeable = False
    return counts


def _logsumexp(x: np.ndarray) -> float:
    top = float(np.max(x))
    return top + math.log(float(np.sum(np.exp(x - top))))


class MlnModel(Model):
    param_kind = "weight"

    def __init__(self, spec: MlnSpec, name: str = "mln"):
        self.spec = spec
        self.name = name
        self.signature = spec.signature
        self.params = free_parameters(spec)

    def weights(self, theta: dict[str, float]) -> np.ndarray:
        return np.array(
            [theta[f.weight.name] if isinstance(f.weight, Param) else f.weight for f in self.spec.formulas]
        )

    def log_weights(self, n: int, theta: dict[str, float]) -> np.ndarray:
        counts = _mln_counts(self.spec, n)
        w = self.weights(theta)
        out = np.zeros(counts.shape[1])
        for i in range(len(w)):
            out += w[i] * counts[i]
        return out

    def _probs(self, n, theta):
        lw = self.log_weights(n, theta)
        return np.exp(lw - _logsumexp(lw))

    def log_probs(self, n, theta, encodings):
        values = self.resolve(theta)
        lw = self.log_weights(n, values)
        return lw[np.asarray(encodings, dtype=np.int64)] - _logsumexp(lw)


class ProblogModel(Model):
    """Distribution over minimal models; latent relations are summed out when projecting."""

    def __init__(self, spec: ProblogSpec, project_to_observable: bool = True, name: str = "problog"):
        self.spec = spec
        self.name = name
        self.project = project_to_observable
        self.signature = spec.observable_signature if project_to_observable else spec.signature
        self.params = free_parameters(spec)

    def ground_facts(self, n: int, theta: dict[str, float]) -> list[tuple[float, int]]:
        """``(label, atom index in the full signature)`` for every ground labeled fact."""
        sig = self.spec.signature
        out = []
        for fact in self.spec.facts:
            label = theta[fact.label.name] if isinstance(fact.label, Param) else fact.label
            variables = tuple(dict.fromkeys(fact.atom.args))
            for values in itertools.product(range(n), repeat=len(variables)):
                out.append((label, _ground_index(sig, n, fact.atom, dict(zip(variables, values)))))
        return out

    def ground_clauses(self, n: int) -> list[tuple[int, tuple[int, ...]]]:
        """``(head, body atoms)`` index tuples, grouped so dependencies come first."""
        sig = self.spec.signature
        out = []
        for rel in clause_order(self.spec):
            for clause in self.spec.clauses:
                if clause.head.rel != rel:
                    continue
                variables = clause.variables
                for values in itertools.product(range(n), repeat=len(variables)):
                    env = dict(zip(variables, values))
                    body = tuple(_ground_index(sig, n, a, env) for a in clause.body)
                    out.append((_ground_index(sig, n, clause.head, env), body))
        return out

    def least_models(self, n: int, fact_bits: list[tuple[int, np.ndarray]], size: int) -> dict[int, np.ndarray]:
        """Bottom-up fixpoint of the ground clauses, for a batch of fact assignments."""
        false = np.zeros(size, dtype=bool)
        atoms: dict[int, np.ndarray] = {}
        for atom, b in fact_bits:
            atoms[atom] = atoms.get(atom, false) | b
        clauses = self.ground_clauses(n)
        changed = True
        while changed:
            changed = False
            for head, body in clauses:
                derived = reduce(np.logical_and, (atoms.get(a, false) for a in body), np.ones(size, dtype=bool))
                old = atoms.get(head, false)
                new = old | derived
                if not np.array_equal(new, old):
                    atoms[head] = new
                    changed = True
        return atoms

    def _probs(self, n, theta):
        facts = self.ground_facts(n, theta)
        check_cap(len(facts), what="ground labeled facts")
        assign = np.arange(1 << len(facts), dtype=np.int64)
        weight = np.ones(assign.size)
        fact_bits = []
        for j, (label, atom) in enumerate(facts):
            b = ((assign >> j) & 1).astype(bool)
            weight *= np.where(b, label, 1.0 - label)
            fact_bits.append((atom, b))
        atoms = self.least_models(n, fact_bits, assign.size)
        full, out = self.spec.signature, self.signature
        enc = np.zeros(assign.size, dtype=np.int64)
        for i, ga in enumerate(out.atoms(n)):
            name, arity = out.relations[ga.relation]
            src = full.atom_index(name, ga.args, n)
            if src in atoms:
                enc |= atoms[src].astype(np.int64) << i
        return np.bincount(enc, weights=weight, minlength=1 << out.num_atoms(n))

    def least_model(self, world: World) -> World:
        """Least model generated by the labeled-fact atoms that are true in ``world``."""
        if world.signature != self.spec.signature:
            raise ValueError("least_model needs a world over the full signature")
        fact_rels = set(self.spec.fact_relations)
        sig = world.signature
        fact_bits = [
            (sig.atom_index(ga.relation, ga.args, world.n), np.ones(1, dtype=bool))
            for ga in world.true_atoms()
            if sig.relations[ga.relation][0] in fact_rels
        ]
        atoms = self.least_models(world.n, fact_bits, 1)
        bits = sum(1 << i for i, b in atoms.items() if b[0])
        return World(sig, world.n, bits)


class FunctionModel(Model):
    """A family given directly by a function ``(n, theta) -> probabilities``."""

    def __init__(self, name, signature, params, fn, param_kind="prob"):
        self.name = name
        self.signature = signature
        self.params = tuple(params)
        self.param_kind = param_kind
        self._fn = fn

    def _probs(self, n, theta):
        return self._fn(n, theta)

    def resolve(self, theta):
        values = dict(theta or {})
        missing = [p for p in self.params if p not in values]
        if missing:
            raise MissingParameter(f"no value for parameter {missing[0]!r} of {self.name}")
        return {p: float(values[p]) for p in self.params}


def model_from_spec(spec, project_to_observable: bool = True, name: str | None = None) -> Model:
    if isinstance(spec, RbnSpec):
        return RbnModel(spec, name or "rbn")
    if isinstance(spec, MlnSpec):
        return MlnModel(spec, name or "mln")
    if isinstance(spec, ProblogSpec):
        return ProblogModel(spec, project_to_observable, name or "problog")
    raise TypeError(f"not a model spec: {type(spec).__name__}")


# --- module-level entry points ---------------------------------------------


def rbn_distribution(spec: RbnSpec, n: int, theta: ParamVector | None = None) -> Distribution:
    return RbnModel(spec).distribution(n, theta)


def mln_distribution(spec: MlnSpec, n: int, theta: ParamVector | None = None) -> Distribution:
    return MlnModel(spec).distribution(n, theta)


def problog_distribution(
    spec: ProblogSpec, n: int, theta: ParamVector | None = None, project_to_observable: bool = True
) -> Distribution:
    return ProblogModel(spec, project_to_observable).distribution(n, theta)


# --- built-in families -------------------------------------------------------

_GRAPH = Signature((("e", 2),))


def _iid_edges(n: int, p: float) -> np.ndarray:
    num = n * n
    check_cap(num)
    edges = np.zeros(1 << num, dtype=np.int64)
    bits = _bit_matrix(num)
    for i in range(num):
        edges += bits[i]
    return p**edges * (1.0 - p) ** (num - edges)


def erdos_renyi() -> Model:
    """Each directed edge (self-loops included) independently present with probability ``p``."""
    from .lang import parse_rbn

    return RbnModel(parse_rbn("e(X,Y) <- $p;"), "erdos-renyi")


def clique_empty() -> Model:
    """Half the mass on the complete graph, half on the empty graph, at every size."""

    def fn(n, theta):
        probs = np.zeros(1 << (n * n))
        probs[0] += 0.5
        probs[-1] += 0.5
        return probs

    return FunctionModel("clique-empty", _GRAPH, (), fn)


def sparse_graph() -> Model:
    """Independent edges with probability ``theta / n`` at domain size ``n``."""

    def fn(n, theta):
        p = theta["theta"] / n
        if not 0.0 <= p <= 1.0:
            raise InvalidParameter(f"edge probability theta/n = {p} outside [0, 1]")
        return _iid_edges(n, p)

    return FunctionModel("sparse-graph", _GRAPH, ("theta",), fn, param_kind="positive")


# --- queries -----------------------------------------------------------------


@dataclass(frozen=True)
class GroundLiteral:
    rel: str
    args: tuple[int, ...]
    positive: bool = True

    def __str__(self):
        atom = f"{self.rel}({','.join(map(str, self.args))})" if self.args else self.rel
        return atom if self.positive else f"!{atom}"


@dataclass(frozen=True)
class Query:
    target: GroundLiteral
    evidence: tuple[GroundLiteral, ...] = ()

    @property
    def elements(self) -> set[int]:
        return {a for lit in (self.target, *self.evidence) for a in lit.args}


def parse_literal(text: str) -> GroundLiteral:
    text = text.strip()
    positive = True
    while text[:1] in ("!", "~"):
        positive = not positive
        text = text[1:].strip()
    rel, args = parse_ground_atom(text)
    return GroundLiteral(rel, args, positive)


def split_literals(text: str) -> list[str]:
    """Split on commas outside parentheses."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return [p for p in (s.strip() for s in parts) if p]


def parse_query(target: str, evidence: str = "") -> Query:
    try:
        return Query(parse_literal(target), tuple(parse_literal(e) for e in split_literals(evidence)))
    except (ParseError, ValueError) as exc:
        raise ParseError(f"malformed query: {exc}") from None


def _literal_mask(dist: Distribution, lit: GroundLiteral) -> np.ndarray:
    num = dist.signature.num_atoms(dist.n)
    try:
        atom = dist.signature.atom_index(lit.rel, lit.args, dist.n)
    except (KeyError, ValueError) as exc:
        raise ParseError(f"literal {lit} is not an atom over this signature and domain: {exc}") from None
    row = _bit_matrix(num)[atom]
    return row if lit.positive else ~row


def query(dist: Distribution, q: Query | GroundLiteral, evidence: Sequence[GroundLiteral] = ()) -> float:
    """P(target | evidence) under ``dist``."""
    if isinstance(q, GroundLiteral):
        q = Query(q, tuple(evidence))
    mask = np.ones(len(dist), dtype=bool)
    for lit in q.evidence:
        mask &= _literal_mask(dist, lit)
    p_evidence = float(np.sum(dist.probs[mask]))
    if p_evidence <= 0.0:
        raise ZeroEvidence(f"evidence {', '.join(map(str, q.evidence))} has probability 0")
    joint = float(np.sum(dist.probs[mask & _literal_mask(dist, q.target)]))
    return joint / p_evidence


__all__ = [
    "CapExceeded", "FunctionModel", "GroundLiteral", "MlnModel", "Model", "ProblogModel", "Query",
    "RbnModel", "clique_empty", "erdos_renyi", "mln_distribution", "model_from_spec", "parse_literal",
    "parse_query", "problog_distribution", "query", "rbn_distribution", "sparse_graph",
]
