"""Ordered substructure counts, complete k-count statistics and induced subgraph sampling."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .core import DEFAULT_TOL, Signature, World, check_cap, induced_map, restrict_world
from .errors import DimensionError
from .semantics import Model


def _tuples(n: int, k: int):
    return itertools.permutations(range(n), k)


def falling_factorial(n: int, k: int) -> int:
    return math.perm(n, k)


def ordered_count(world: World, pattern: World) -> int:
    """Number of ordered tuples of distinct elements whose induced substructure equals ``pattern``."""
    if pattern.signature != world.signature:
        raise ValueError("world and pattern use different signatures")
    if pattern.n > world.n:
        raise DimensionError(f"pattern size {pattern.n} exceeds world size {world.n}")
    return sum(1 for idx in _tuples(world.n, pattern.n) if restrict_world(world, idx).bits == pattern.bits)


@dataclass(frozen=True)
class CountStatistics:
    """Non-zero ordered substructure counts for pattern sizes 1..k, keyed by pattern encoding."""

    k: int
    n: int
    signature: Signature
    levels: Mapping[int, Mapping[int, int]] = field(default_factory=dict)

    def count(self, pattern: World) -> int:
        return self.levels.get(pattern.n, {}).get(pattern.bits, 0)

    def level_total(self, l: int) -> int:
        return sum(self.levels.get(l, {}).values())

    def key(self) -> tuple:
        return tuple((l, tuple(sorted(self.levels[l].items()))) for l in sorted(self.levels))

    def __eq__(self, other):
        return isinstance(other, CountStatistics) and (self.k, self.n, self.signature, self.key()) == (
            other.k, other.n, other.signature, other.key())

    def __hash__(self):
        return hash((self.k, self.n, self.key()))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "levels": [
                {"l": l, "counts": [{"world": enc, "count": c} for enc, c in sorted(self.levels[l].items())]}
                for l in sorted(self.levels)
            ],
        }


def complete_counts(world: World, k: int) -> CountStatistics:
    """Complete k-count statistics C_k(world)."""
    if not 1 <= k <= world.n:
        raise DimensionError(f"need 1 <= k <= n, got k={k}, n={world.n}")
    check_cap(world.signature.num_atoms(k), what="atoms in a size-k pattern")
    levels = {}
    for l in range(1, k + 1):
        counts: dict[int, int] = {}
        for idx in _tuples(world.n, l):
            enc = restrict_world(world, idx).bits
            counts[enc] = counts.get(enc, 0) + 1
        levels[l] = dict(sorted(counts.items()))
    return CountStatistics(k, world.n, world.signature, levels)


def counts_from_level(stats: CountStatistics, l: int) -> dict[int, int]:
    """Level-``l`` counts recovered from the top level ``stats.k``.

    Every l-tuple of distinct elements extends to (n-l)!/(n-k)! distinct k-tuples,
    and the length-l prefix of a k-tuple induces the prefix substructure.
    """
    k, n = stats.k, stats.n
    if not 1 <= l <= k:
        raise DimensionError(f"level {l} outside 1..{k}")
    out: dict[int, int] = {}
    for enc, c in stats.levels[k].items():
        prefix = restrict_world(World(stats.signature, k, enc), tuple(range(l))).bits
        out[prefix] = out.get(prefix, 0) + c
    per = falling_factorial(n - l, k - l)
    return {enc: c // per for enc, c in sorted(out.items())}


def enumerate_subsamples(world: World, m: int) -> list[tuple[tuple[int, ...], World]]:
    """All m-element subsets with their induced worlds (sorted-order relabelling), each of weight 1/C(n, m)."""
    if not 0 <= m <= world.n:
        raise DimensionError(f"cannot sample {m} of {world.n} elements")
    return [(subset, restrict_world(world, subset)) for subset in itertools.combinations(range(world.n), m)]


def subsample_multiset(world: World, m: int) -> dict[int, int]:
    """Induced-world encodings of all m-subsets with multiplicities."""
    out: dict[int, int] = {}
    for _, sub in enumerate_subsamples(world, m):
        out[sub.bits] = out.get(sub.bits, 0) + 1
    return out


@dataclass(frozen=True)
class SamplingIdentity:
    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs

    def to_dict(self) -> dict:
        return {"lhs": str(self.lhs), "rhs": str(self.rhs), "lhs_float": float(self.lhs), "rhs_float": float(self.rhs), "equal": self.equal}


def verify_lemma1(world: World, m: int, pattern: World) -> SamplingIdentity:
    """Exact check that sampled ordered-count frequencies are unbiased.

    lhs = E[(m-k)!/m! * C_pattern(sample)] over all m-subsets, rhs = (n-k)!/n! * C_pattern(world).
    """
    k, n = pattern.n, world.n
    if not k <= m <= n:
        raise DimensionError(f"need k <= m <= n, got k={k}, m={m}, n={n}")
    samples = enumerate_subsamples(world, m)
    total = sum(ordered_count(sub, pattern) for _, sub in samples)
    lhs = Fraction(total, len(samples) * falling_factorial(m, k))
    rhs = Fraction(ordered_count(world, pattern), falling_factorial(n, k))
    return SamplingIdentity(lhs, rhs)


@dataclass(frozen=True)
class DeterminationResult:
    passed: bool
    worst_gap: float
    witness: tuple[World, World] | None = None
    classes: int = 0

    def to_dict(self) -> dict:
        out = {"determined": self.passed, "worst_gap": self.worst_gap, "classes": self.classes}
        if self.witness:
            out["witness"] = [w.to_text() for w in self.witness]
        return out


def count_matrix(signature, n: int, k: int) -> np.ndarray:
    """For every world over [n], its complete k-count statistics as one row of counts."""
    check_cap(signature.num_atoms(n))
    blocks = []
    for l in range(1, k + 1):
        size = 1 << signature.num_atoms(l)
        counts = np.zeros((1 << signature.num_atoms(n), size), dtype=np.int32)
        rows = np.arange(counts.shape[0])
        for idx in _tuples(n, l):
            np.add.at(counts, (rows, induced_map(signature, n, idx)), 1)
        blocks.append(counts)
    return np.concatenate(blocks, axis=1)


def count_rows(signature: Signature, n: int, k: int, encodings) -> np.ndarray:
    """Rows of ``count_matrix`` for selected worlds only, without enumerating all of them."""
    widths = [1 << signature.num_atoms(l) for l in range(1, k + 1)]
    offsets = np.concatenate([[0], np.cumsum(widths)[:-1]])
    out = np.zeros((len(encodings), sum(widths)), dtype=np.int64)
    for row, enc in enumerate(encodings):
        stats = complete_counts(World(signature, n, int(enc)), k)
        for l, counts in stats.levels.items():
            for pattern, c in counts.items():
                out[row, offsets[l - 1] + pattern] = c
    return out


def verify_count_determination(
    model: Model, theta: Mapping[str, float] | None, n: int, k: int, tol: float = DEFAULT_TOL
) -> DeterminationResult:
    """Do worlds with equal complete k-count statistics always receive equal probability?"""
    if not 1 <= k <= n:
        raise DimensionError(f"need 1 <= k <= n, got k={k}, n={n}")
    probs = model.distribution(n, theta).probs
    _, cls = np.unique(count_matrix(model.signature, n, k), axis=0, return_inverse=True)
    cls = cls.ravel()
    classes = int(cls.max()) + 1
    hi = np.full(classes, -np.inf)
    lo = np.full(classes, np.inf)
    np.maximum.at(hi, cls, probs)
    np.minimum.at(lo, cls, probs)
    gaps = hi - lo
    worst = int(np.argmax(gaps))
    gap = float(gaps[worst])
    witness = None
    if gap > tol:
        members = np.flatnonzero(cls == worst)
        a = members[np.argmax(probs[members])]
        b = members[np.argmin(probs[members])]
        witness = (World(model.signature, n, int(a)), World(model.signature, n, int(b)))
    return DeterminationResult(gap <= tol, gap, witness, classes)
