"""Empirical exchangeability and projectivity checks by exact marginalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .core import DEFAULT_TOL, Distribution, marginalize, permutation_map
from .lang import parse_mln, parse_rbn
from .semantics import MlnModel, Model, RbnModel, parse_query, query

FLATLINE_MLN = "a(X) ^ e(X,Y) :: w;"
NOISY_OR_RBN = "edge(X,Y) <- 0.5;\na(X) <- noisy-or{ if edge(X,Y): $theta | Y };\n"


@dataclass(frozen=True)
class ExchangeabilityResult:
    passed: bool
    worst: float
    transposition: tuple[int, int] | None = None


def test_exchangeable(dist: Distribution, tol: float = DEFAULT_TOL) -> ExchangeabilityResult:
    """Invariance of ``dist`` under every adjacent transposition (i, i+1).

    Adjacent transpositions generate the symmetric group, so this is equivalent
    to invariance under all permutations of the domain.
    """
    worst, where = 0.0, None
    for i in range(dist.n - 1):
        perm = list(range(dist.n))
        perm[i], perm[i + 1] = i + 1, i
        moved = dist.probs[permutation_map(dist.signature, dist.n, tuple(perm))]
        dev = float(np.max(np.abs(moved - dist.probs)))
        if dev > worst:
            worst, where = dev, (i, i + 1)
    return ExchangeabilityResult(worst <= tol, worst, where)


test_exchangeable.__test__ = False


def default_n_max(model: Model) -> int:
    return 4 if any(arity >= 2 for _, arity in model.signature.relations) else 6


@dataclass
class ProjectivityReport:
    model: str
    tolerance: float
    theta: dict = field(default_factory=dict)
    deviations: dict[tuple[int, int], float] = field(default_factory=dict)
    exchangeability: dict[int, ExchangeabilityResult] = field(default_factory=dict)

    @property
    def exchangeable(self) -> bool:
        return all(r.passed for r in self.exchangeability.values())

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    @property
    def projective(self) -> bool:
        return self.exchangeable and self.max_deviation <= self.tolerance

    def worst_pair(self) -> tuple[int, int] | None:
        if not self.deviations:
            return None
        return max(self.deviations, key=self.deviations.get)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "theta": dict(sorted(self.theta.items())),
            "pairs": [
                {"n": n, "m": m, "deviation": dev} for (n, m), dev in sorted(self.deviations.items(), reverse=True)
            ],
            "exchangeability": [
                {"n": n, "worst": r.worst, "exchangeable": r.passed} for n, r in sorted(self.exchangeability.items())
            ],
            "exchangeable": self.exchangeable,
            "projective": self.projective,
            "tolerance": self.tolerance,
        }


def test_projective(
    model: Model, theta: Mapping[str, float] | None = None, n_max: int | None = None, tol: float = DEFAULT_TOL
) -> ProjectivityReport:
    """Compare Q^(n) marginalized to [m] against Q^(m) for all 1 <= m < n <= n_max."""
    n_max = default_n_max(model) if n_max is None else n_max
    report = ProjectivityReport(model.name, tol, dict(theta or {}))
    dists = {n: model.distribution(n, theta) for n in range(1, n_max + 1)}
    for n, dist in dists.items():
        report.exchangeability[n] = test_exchangeable(dist, tol)
        current = dist
        # marginalizing step by step equals marginalizing directly
        for m in range(n - 1, 0, -1):
            current = marginalize(current, m)
            report.deviations[(n, m)] = current.max_deviation(dists[m])
    return report


test_projective.__test__ = False


_EMPTY_PAIR_EVIDENCE = "!{r}(0,0),!{r}(0,1),!{r}(1,0),!{r}(1,1)"


def flatline_model() -> MlnModel:
    return MlnModel(parse_mln(FLATLINE_MLN), "flatline-mln")


def noisy_or_model() -> RbnModel:
    return RbnModel(parse_rbn(NOISY_OR_RBN), "noisy-or-rbn")


def q_mln(n: int, w: float) -> float:
    """Q^(n)_w(a(0) | no edges among {0, 1}) for the MLN ``a(X) ^ e(X,Y) :: w``."""
    if n < 2:
        raise ValueError("q_mln needs n >= 2")
    dist = flatline_model().distribution(n, {"w": w})
    return query(dist, parse_query("a(0)", _EMPTY_PAIR_EVIDENCE.format(r="e")))


def q_rbn(n: int, theta: float) -> float:
    """Same conditional for the RBN with ``a(X) <- noisy-or{ if edge(X,Y): theta | Y }``."""
    if n < 2:
        raise ValueError("q_rbn needs n >= 2")
    dist = noisy_or_model().distribution(n, {"theta": theta})
    return query(dist, parse_query("a(0)", _EMPTY_PAIR_EVIDENCE.format(r="edge")))


@dataclass(frozen=True)
class WitnessResult:
    n: int
    m: int
    theta: float
    min_deviation: float
    argmin: float
    grid_size: int
    grid_bounds: tuple[float, float]
    tolerance: float

    @property
    def certificate(self) -> bool:
        """True when no grid point comes within 10 * tol: the marginal leaves the family on this grid."""
        return self.min_deviation >= 10 * self.tolerance

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "theta": self.theta,
            "min_deviation": self.min_deviation,
            "argmin": self.argmin,
            "grid_size": self.grid_size,
            "grid_bounds": list(self.grid_bounds),
            "counterexample": self.certificate,
            "tolerance": self.tolerance,
        }


def structural_witness(
    model: Model, n: int, m: int, theta: float, grid: Iterable[float], tol: float = DEFAULT_TOL
) -> WitnessResult:
    """Search ``grid`` for theta' minimizing || Q^(n)_theta marginalized to [m] - Q^(m)_theta' ||_inf."""
    if len(model.params) != 1:
        raise ValueError("structural_witness needs a one-parameter family")
    (name,) = model.params
    target = marginalize(model.distribution(n, {name: theta}), m)
    grid = [float(g) for g in grid]
    best, best_at = np.inf, None
    for g in grid:
        dev = target.max_deviation(model.distribution(m, {name: g}))
        if dev < best:
            best, best_at = dev, g
    return WitnessResult(n, m, theta, float(best), best_at, len(grid), (min(grid), max(grid)), tol)
