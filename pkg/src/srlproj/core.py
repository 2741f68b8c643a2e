"""Signatures, ground atoms, possible worlds and exact distributions over them.

A world over domain ``[n] = {0, ..., n-1}`` is stored as an integer bit pattern.
Bit ``i`` holds the truth value of the ``i``-th ground atom in canonical order:
relations in signature order, then argument tuples in lexicographic order.
Binary (and higher) relations are directed and include tuples with repeated
elements, so ``e/2`` over ``[n]`` has ``n**2`` atoms.
"""

from __future__ import annotations

import itertools
import json
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapExceeded, DimensionError, DuplicateIndex, ParseError

DEFAULT_CAP = 30
DEFAULT_TOL = 1e-9


def atom_cap() -> int:
    """Current atom-count cap; ``SRLPROJ_CAP`` overrides the default of 30."""
    value = os.environ.get("SRLPROJ_CAP")
    return int(value) if value else DEFAULT_CAP


@dataclass(frozen=True)
class Signature:
    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        rels = tuple((str(name), int(arity)) for name, arity in self.relations)
        object.__setattr__(self, "relations", rels)
        names = [name for name, _ in rels]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate relation names in signature: {names}")
        for name, arity in rels:
            if arity < 0:
                raise ValueError(f"negative arity for relation {name}")

    @classmethod
    def of(cls, *relations: tuple[str, int]) -> "Signature":
        return cls(tuple(relations))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown relation {name!r}") from None

    def arity(self, name: str) -> int:
        return self.relations[self.index(name)][1]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def restrict(self, names: Iterable[str]) -> "Signature":
        """Sub-signature keeping ``names`` in this signature's order."""
        keep = set(names)
        return Signature(tuple(r for r in self.relations if r[0] in keep))

    def offsets(self, n: int) -> tuple[int, ...]:
        out, total = [], 0
        for _, arity in self.relations:
            out.append(total)
            total += n**arity
        return tuple(out)

    def num_atoms(self, n: int) -> int:
        return sum(n**arity for _, arity in self.relations)

    def atom_index(self, rel: str | int, args: Sequence[int], n: int) -> int:
        r = rel if isinstance(rel, int) else self.index(rel)
        name, arity = self.relations[r]
        if len(args) != arity:
            raise ValueError(f"{name} expects {arity} arguments, got {len(args)}")
        pos = 0
        for a in args:
            if not 0 <= a < n:
                raise ValueError(f"argument {a} outside domain [0, {n})")
            pos = pos * n + a
        return self.offsets(n)[r] + pos

    def atoms(self, n: int) -> list["GroundAtom"]:
        """All ground atoms over ``[n]`` in canonical order."""
        return list(_atoms(self, n))

    def __str__(self):
        return ", ".join(f"{name}/{arity}" for name, arity in self.relations)


@dataclass(frozen=True, order=True)
class GroundAtom:
    relation: int
    args: tuple[int, ...]

    def render(self, signature: Signature) -> str:
        name = signature.relations[self.relation][0]
        if not self.args:
            return name
        return f"{name}({','.join(map(str, self.args))})"


@lru_cache(maxsize=64)
def _atoms(signature: Signature, n: int) -> tuple[GroundAtom, ...]:
    out = []
    for r, (_, arity) in enumerate(signature.relations):
        for args in itertools.product(range(n), repeat=arity):
            out.append(GroundAtom(r, args))
    return tuple(out)


def check_cap(num_atoms: int, cap: int | None = None, what: str = "ground atoms") -> None:
    limit = atom_cap() if cap is None else cap
    if num_atoms > limit:
        raise CapExceeded(f"{num_atoms} {what} exceed the cap of {limit}")


@dataclass(frozen=True)
class World:
    signature: Signature
    n: int
    bits: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise DimensionError("domain size must be non-negative")
        if not 0 <= self.bits < (1 << self.signature.num_atoms(self.n)):
            raise ValueError("world encoding out of range")

    @property
    def encoding(self) -> int:
        return self.bits

    @classmethod
    def from_atoms(cls, signature: Signature, n: int, atoms: Iterable) -> "World":
        """Build a world from ``(relation, args)`` pairs; everything else is false."""
        bits = 0
        for rel, args in atoms:
            bits |= 1 << signature.atom_index(rel, tuple(args), n)
        return cls(signature, n, bits)

    def holds(self, rel: str | int, args: Sequence[int]) -> bool:
        return bool((self.bits >> self.signature.atom_index(rel, tuple(args), self.n)) & 1)

    def true_atoms(self) -> list[GroundAtom]:
        return [a for i, a in enumerate(_atoms(self.signature, self.n)) if (self.bits >> i) & 1]

    def count(self, rel: str) -> int:
        r = self.signature.index(rel)
        return sum(1 for a in self.true_atoms() if a.relation == r)

    def to_text(self) -> str:
        lines = [f"domain {self.n}"]
        lines += [a.render(self.signature) + "." for a in self.true_atoms()]
        return "\n".join(lines) + "\n"

    def __str__(self):
        atoms = ", ".join(a.render(self.signature) for a in self.true_atoms())
        return f"World(n={self.n}, {{{atoms}}})"


def enumerate_worlds(signature: Signature, n: int, cap: int | None = None) -> Iterator[World]:
    """Yield every world over ``[n]`` in ascending encoding order."""
    num = signature.num_atoms(n)
    check_cap(num, cap)
    for bits in range(1 << num):
        yield World(signature, n, bits)


# --- relabelling -----------------------------------------------------------


def _source_atoms(signature: Signature, n_dst: int, n_src: int, source_of) -> np.ndarray:
    """For each destination atom (canonical order), the index of the source atom it copies."""
    src = []
    for atom in _atoms(signature, n_dst):
        src_args = tuple(source_of[j] for j in atom.args)
        src.append(signature.atom_index(atom.relation, src_args, n_src))
    return np.asarray(src, dtype=np.int64)


def _transfer_bits(bits: int, src_atoms: np.ndarray) -> int:
    out = 0
    for d, s in enumerate(src_atoms.tolist()):
        out |= ((bits >> s) & 1) << d
    return out


def _transfer_all(num_src_atoms: int, src_atoms: np.ndarray) -> np.ndarray:
    enc = np.arange(1 << num_src_atoms, dtype=np.int64)
    out = np.zeros_like(enc)
    for d, s in enumerate(src_atoms.tolist()):
        out |= ((enc >> s) & 1) << d
    return out


def _check_perm(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of [{n}]")
    return perm


def apply_permutation(world: World, perm: Sequence[int]) -> World:
    """Relabel ``world`` by ``perm`` (``perm[i]`` is the image of ``i``).

    ``r(perm[a1], ..., perm[ak])`` holds in the result iff ``r(a1, ..., ak)`` holds in ``world``.
    """
    perm = _check_perm(perm, world.n)
    inverse = [0] * world.n
    for i, p in enumerate(perm):
        inverse[p] = i
    src = _source_atoms(world.signature, world.n, world.n, inverse)
    return World(world.signature, world.n, _transfer_bits(world.bits, src))


@lru_cache(maxsize=32)
def permutation_map(signature: Signature, n: int, perm: tuple[int, ...]) -> np.ndarray:
    """Array mapping each encoding over ``[n]`` to the encoding of its relabelled world."""
    perm = _check_perm(perm, n)
    inverse = [0] * n
    for i, p in enumerate(perm):
        inverse[p] = i
    num = signature.num_atoms(n)
    check_cap(num)
    out = _transfer_all(num, _source_atoms(signature, n, n, inverse))
    out.flags.writeable = False
    return out


def restrict_world(world: World, index: Sequence[int]) -> World:
    """Substructure induced by the distinct elements ``index``, relabelled ``index[j] -> j``."""
    index = tuple(int(i) for i in index)
    if len(set(index)) != len(index):
        raise DuplicateIndex(f"index tuple {index} repeats an element")
    for i in index:
        if not 0 <= i < world.n:
            raise DimensionError(f"index {i} outside domain [0, {world.n})")
    src = _source_atoms(world.signature, len(index), world.n, index)
    return World(world.signature, len(index), _transfer_bits(world.bits, src))


@lru_cache(maxsize=64)
def induced_map(signature: Signature, n: int, index: tuple[int, ...]) -> np.ndarray:
    """Array mapping each encoding over ``[n]`` to the encoding of the substructure induced by ``index``."""
    num = signature.num_atoms(n)
    check_cap(num)
    out = _transfer_all(num, _source_atoms(signature, len(index), n, tuple(index)))
    out.flags.writeable = False
    return out


def restriction_map(signature: Signature, n: int, m: int) -> np.ndarray:
    """Array mapping each encoding over ``[n]`` to the encoding of its restriction to ``[m]``."""
    return induced_map(signature, n, tuple(range(m)))


# --- distributions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Distribution:
    signature: Signature
    n: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        expected = 1 << self.signature.num_atoms(self.n)
        if probs.shape != (expected,):
            raise ValueError(f"expected {expected} probabilities, got shape {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    def __getitem__(self, world: World | int) -> float:
        enc = world.bits if isinstance(world, World) else int(world)
        return float(self.probs[enc])

    def __len__(self):
        return len(self.probs)

    def max_deviation(self, other: "Distribution") -> float:
        if other.signature != self.signature or other.n != self.n:
            raise DimensionError("distributions live on different world spaces")
        return float(np.max(np.abs(self.probs - other.probs)))

    def to_json(self) -> str:
        rows = [{"world": i, "p": float(format(p, ".12g"))} for i, p in enumerate(self.probs.tolist())]
        return json.dumps(rows)


def point_mass(world: World) -> Distribution:
    probs = np.zeros(1 << world.signature.num_atoms(world.n))
    probs[world.bits] = 1.0
    return Distribution(world.signature, world.n, probs)


def uniform(signature: Signature, n: int) -> Distribution:
    num = signature.num_atoms(n)
    check_cap(num)
    return Distribution(signature, n, np.full(1 << num, 1.0 / (1 << num)))


def marginalize(dist: Distribution, m: int) -> Distribution:
    """Marginal of ``dist`` on the atoms whose arguments all lie in ``[m]``."""
    if not 1 <= m:
        raise DimensionError("m must be at least 1")
    if m > dist.n:
        raise DimensionError(f"cannot marginalize a size-{dist.n} distribution to {m}")
    if m == dist.n:
        return dist
    target = restriction_map(dist.signature, dist.n, m)
    size = 1 << dist.signature.num_atoms(m)
    # bincount accumulates in ascending index order, which keeps sums reproducible
    probs = np.bincount(target, weights=dist.probs, minlength=size)
    return Distribution(dist.signature, m, probs)


# --- text formats ----------------------------------------------------------

_ATOM_RE = re.compile(r"^\s*([a-z][A-Za-z0-9_]*)\s*(?:\(\s*([0-9\s,]*)\))?\s*\.?\s*$")


def parse_ground_atom(text: str) -> tuple[str, tuple[int, ...]]:
    match = _ATOM_RE.match(text)
    if not match:
        raise ParseError(f"malformed ground atom {text.strip()!r}")
    name, args = match.group(1), match.group(2)
    if args is None or not args.strip():
        return name, ()
    return name, tuple(int(a) for a in args.split(","))


def parse_world(text: str, signature: Signature | None = None) -> World:
    """Parse the world text format.

    First line ``domain <n>``; an optional ``signature r/1, e/2`` line; then one true
    atom per line such as ``edge(0,1).``.  Without a signature (argument or header)
    the relations are inferred from the listed atoms in order of first appearance.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines or not lines[0][1].startswith("domain"):
        raise ParseError("world file must start with 'domain <n>'", 1, 1)
    lineno, head = lines[0]
    try:
        n = int(head.split()[1])
    except (IndexError, ValueError):
        raise ParseError("expected 'domain <n>'", lineno, 1) from None
    rest = lines[1:]
    if rest and rest[0][1].startswith("signature"):
        declared = _parse_signature_decl(rest[0][1][len("signature"):], rest[0][0])
        signature = signature or declared
        rest = rest[1:]
    atoms = []
    for lineno, line in rest:
        try:
            atoms.append(parse_ground_atom(line))
        except ParseError as exc:
            raise ParseError(exc.message, lineno, 1) from None
    if signature is None:
        rels: dict[str, int] = {}
        for name, args in atoms:
            if rels.setdefault(name, len(args)) != len(args):
                raise ParseError(f"relation {name} used with different arities")
        signature = Signature(tuple(rels.items()))
    for name, args in atoms:
        if name not in signature:
            raise ParseError(f"relation {name} not in signature {signature}")
    try:
        return World.from_atoms(signature, n, atoms)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _parse_signature_decl(text: str, lineno: int) -> Signature:
    rels = []
    for item in text.replace(",", " ").split():
        try:
            name, arity = item.split("/")
            rels.append((name, int(arity)))
        except ValueError:
            raise ParseError(f"malformed relation declaration {item!r}", lineno, 1) from None
    return Signature(tuple(rels))
