"""Likelihood functions, maximum-likelihood estimation and sampling-consistency checks.

Three objectives are supported for a model and observed data:

* ``exact``: log Q^(m)_theta(omega) for a world over [m];
* ``marginal``: log of the probability that a world over [n] restricts to omega;
* ``subsample``: the average of the exact log-likelihood over all m-subsets of a
  world over [n] (induced-subgraph sampling, computed by exact enumeration).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import World, restriction_map
from .errors import (
    DimensionError,
    InvalidParameter,
    NoMaximum,
    NotFullyObservable,
    NotInFragment,
    SeparabilityError,
    ZeroProbabilityWorld,
)
from .lang import NoisyOr, Param, ProblogSpec, RbnSpec, iter_nodes
from .semantics import Model, ProblogModel, RbnModel, _Bits
from .stats import count_matrix, count_rows, falling_factorial, subsample_multiset

PROB_CLAMP = 1e-9
WEIGHT_BOUNDS = (-10.0, 10.0)
POSITIVE_BOUNDS = (PROB_CLAMP, 10.0)
FLAT_TOL = 1e-9
MODES = ("exact", "marginal", "subsample")


# --- likelihoods -------------------------------------------------------------


def _check_world(model: Model, world: World) -> None:
    if world.signature != model.signature:
        raise ValueError(f"world signature {world.signature} does not match model {model.signature}")


def loglik(model: Model, world: World, theta: Mapping[str, float] | None) -> float:
    """log Q^(m)_theta(world); -inf for a world of probability 0."""
    _check_world(model, world)
    return float(model.log_probs(world.n, theta, [world.bits])[0])


def marginal_loglik(model: Model, world: World, n: int, theta: Mapping[str, float] | None) -> float:
    """log Q^(n)_theta of the set of worlds over [n] whose restriction to [m] is ``world``."""
    _check_world(model, world)
    m = world.n
    if m > n:
        raise DimensionError(f"observed size {m} exceeds domain size {n}")
    if m == n:
        return loglik(model, world, theta)
    dist = model.distribution(n, theta)
    mass = float(dist.probs[restriction_map(model.signature, n, m) == world.bits].sum())
    return math.log(mass) if mass > 0 else -math.inf


def _weighted_loglik(model: Model, m: int, multiset: Mapping[int, int], theta) -> float:
    encs = np.fromiter(multiset, dtype=np.int64, count=len(multiset))
    weights = np.fromiter(multiset.values(), dtype=float, count=len(multiset))
    lp = model.log_probs(m, theta, encs)
    if np.any(np.isneginf(lp)):
        return -math.inf
    return float(weights @ lp / weights.sum())


def expected_sample_loglik(model: Model, world: World, m: int, theta: Mapping[str, float] | None) -> float:
    """Average log-likelihood of the induced sub-worlds over all m-subsets of ``world``."""
    _check_world(model, world)
    return _weighted_loglik(model, m, subsample_multiset(world, m), theta)


def param_bounds(model: Model) -> list[tuple[float, float]]:
    """Search box per parameter: clamped (0, 1) for probabilities, [-10, 10] for weights."""
    if model.param_kind == "prob":
        return [(PROB_CLAMP, 1.0 - PROB_CLAMP)] * len(model.params)
    if model.param_kind == "positive":
        return [POSITIVE_BOUNDS] * len(model.params)
    return [WEIGHT_BOUNDS] * len(model.params)


class LikelihoodFn:
    """A log-likelihood objective theta -> real for one model and one observation.

    For ``mode="subsample"``, ``world`` is the full world over [n] and ``m`` the
    sample size; for ``mode="marginal"``, ``world`` is over [m] and ``n`` is the
    domain size the model is evaluated at.
    """

    def __init__(self, model: Model, world: World, mode: str = "exact", n: int | None = None, m: int | None = None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        _check_world(model, world)
        if mode == "marginal" and n is None:
            raise ValueError("marginal mode needs the domain size n")
        if mode == "subsample":
            if m is None:
                raise ValueError("subsample mode needs the sample size m")
            if not 0 < m <= world.n:
                raise DimensionError(f"cannot sample {m} of {world.n} elements")
            self._multiset = subsample_multiset(world, m)
        self.model, self.world, self.mode, self.n, self.m = model, world, mode, n, m

    @property
    def params(self) -> tuple[str, ...]:
        return self.model.params

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return param_bounds(self.model)

    def __call__(self, theta: Mapping[str, float] | None) -> float:
        try:
            if self.mode == "exact":
                return loglik(self.model, self.world, theta)
            if self.mode == "marginal":
                return marginal_loglik(self.model, self.world, self.n, theta)
            return _weighted_loglik(self.model, self.m, self._multiset, theta)
        except InvalidParameter:
            return -math.inf

    def batch(self, points: np.ndarray) -> np.ndarray:
        """Objective at each row of ``points`` (columns ordered as ``params``)."""
        points = np.asarray(points, dtype=float)
        if isinstance(self.model, RbnModel) and self.mode != "marginal":
            columns = dict(zip(self.params, points.T))
            if self.mode == "exact":
                return self.model.log_probs_grid(self.world.n, columns, [self.world.bits])[:, 0]
            encs = np.fromiter(self._multiset, dtype=np.int64, count=len(self._multiset))
            weights = np.fromiter(self._multiset.values(), dtype=float, count=len(self._multiset))
            lp = self.model.log_probs_grid(self.m, columns, encs)
            with np.errstate(invalid="ignore"):
                out = lp @ weights / weights.sum()
            out[np.any(np.isneginf(lp), axis=1)] = -np.inf
            return out
        return np.array([self(dict(zip(self.params, map(float, row)))) for row in points])

    def describe(self) -> dict:
        out = {"model": self.model.name, "mode": self.mode, "world_size": self.world.n}
        if self.mode == "marginal":
            out["n"] = self.n
        if self.mode == "subsample":
            out["m"] = self.m
        return out


# --- optimization ------------------------------------------------------------


@dataclass
class MleResult:
    theta: dict[str, float]
    loglik: float
    boundary: dict[str, float] = field(default_factory=dict)
    converged: bool = True
    iterations: int = 0
    argmax_set: list[dict[str, float]] = field(default_factory=list)

    def vector(self, params: Sequence[str]) -> np.ndarray:
        return np.array([self.theta[p] for p in params])

    def to_dict(self) -> dict:
        return {
            "theta": dict(sorted(self.theta.items())),
            "loglik": self.loglik,
            "boundary": [{"param": p, "at": v} for p, v in sorted(self.boundary.items())],
            "converged": self.converged,
            "iterations": self.iterations,
        }


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], a: float, b: float, xtol: float = 1e-10) -> tuple[float, float, int]:
    """Maximize a unimodal ``f`` on [a, b]; returns (x, f(x), iterations). Endpoints are candidates too."""
    a0, b0 = a, b
    fa, fb = f(a), f(b)
    c, d = b - _INVPHI * (b - a), a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > xtol and it < 200:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    fx, x = max([(fc, c), (fd, d), (fa, a0), (fb, b0)], key=lambda t: t[0])
    return x, fx, it


def _grid_size(dims: int, per_dim: int, budget: int = 20000) -> int:
    if dims <= 2:
        return per_dim
    return max(3, min(per_dim, int(round(budget ** (1.0 / dims)))))


def mle(objective: LikelihoodFn, grid_points: int = 101, xtol: float = 1e-10, max_sweeps: int = 100) -> MleResult:
    """Grid scan followed by coordinate-wise golden-section refinement."""
    params = objective.params
    if not 1 <= len(params) <= 8:
        raise ValueError(f"mle supports 1 to 8 parameters, got {len(params)}")
    bounds = objective.bounds
    raw = []
    for lo, hi in bounds:
        if objective.model.param_kind == "prob":
            axis = np.clip(np.linspace(0.0, 1.0, _grid_size(len(params), grid_points)), lo, hi)
        else:
            axis = np.linspace(lo, hi, _grid_size(len(params), grid_points))
        raw.append(axis)

    def evaluate(x) -> float:
        v = objective(dict(zip(params, (float(t) for t in x))))
        return v if not math.isnan(v) else -math.inf

    points = np.array(list(itertools.product(*raw)))
    values = objective.batch(points)
    values[np.isnan(values)] = -np.inf
    if not np.any(np.isfinite(values)):
        raise NoMaximum(f"objective is not finite anywhere on the grid for {objective.model.name}")
    x = np.array(points[int(np.argmax(values))], dtype=float)
    fx = float(values.max())
    steps = [axis[1] - axis[0] if len(axis) > 1 else hi - lo for axis, (lo, hi) in zip(raw, bounds)]

    converged, iterations = False, 0
    for sweep in range(max_sweeps):
        moved = 0.0
        for i, (lo, hi) in enumerate(bounds):
            a, b = max(lo, x[i] - steps[i]), min(hi, x[i] + steps[i])

            def along(t, i=i):
                y = x.copy()
                y[i] = t
                return evaluate(y)

            t, ft, it = golden_section(along, a, b, xtol)
            iterations += it
            if ft >= fx:
                moved = max(moved, abs(t - x[i]))
                x[i], fx = t, ft
        iterations += 1
        if moved <= xtol or len(params) == 1:
            converged = True
            break

    boundary = {}
    for i, (name, (lo, hi)) in enumerate(zip(params, bounds)):
        nominal = _nominal_bounds(objective.model.param_kind, lo, hi)
        if x[i] - lo <= 10 * xtol:
            x[i] = lo
            boundary[name] = nominal[0]
        elif hi - x[i] <= 10 * xtol:
            x[i] = hi
            boundary[name] = nominal[1]
    fx = evaluate(x)
    theta = dict(zip(params, (float(t) for t in x)))
    flat = [dict(zip(params, map(float, p))) for p, v in zip(points, values) if v >= fx - FLAT_TOL]
    return MleResult(theta, fx, boundary, converged, iterations, [theta] + [p for p in flat if p != theta])


def _nominal_bounds(kind: str, lo: float, hi: float) -> tuple[float, float]:
    return (0.0, 1.0) if kind == "prob" else (lo, hi)


def hausdorff(a: Sequence[Mapping[str, float]], b: Sequence[Mapping[str, float]]) -> float:
    """Hausdorff distance between two finite point sets under the max-norm."""
    keys = sorted(a[0])
    A = np.array([[p[k] for k in keys] for p in a])
    B = np.array([[p[k] for k in keys] for p in b])
    d = np.max(np.abs(A[:, None, :] - B[None, :, :]), axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def expected_argmax(model: Model, world: World, m: int, **mle_kw) -> dict[str, float]:
    """Average over all m-subsets of the per-sample maximum-likelihood estimate."""
    _check_world(model, world)
    multiset = subsample_multiset(world, m)
    total = sum(multiset.values())
    acc = dict.fromkeys(model.params, 0.0)
    for enc, c in multiset.items():
        est = mle(LikelihoodFn(model, World(model.signature, m, enc)), **mle_kw).theta
        for p in acc:
            acc[p] += c * est[p]
    return {p: v / total for p, v in acc.items()}


# --- unbiasedness and consistency --------------------------------------------

SAMPLING_TOL = 1e-4


@dataclass(frozen=True)
class SamplingCheck:
    name: str
    lhs: dict[str, float]
    rhs: dict[str, float]
    distance: float
    tolerance: float = SAMPLING_TOL

    @property
    def passed(self) -> bool:
        return self.distance <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "lhs": dict(sorted(self.lhs.items())),
            "rhs": dict(sorted(self.rhs.items())),
            "distance": self.distance,
            "pass": self.passed,
        }


def check_unbiasedness(model: Model, world: World, m: int, full: MleResult | None = None) -> SamplingCheck:
    """Expected per-sample estimate versus the full-world estimate."""
    full = full or mle(LikelihoodFn(model, world))
    lhs = expected_argmax(model, world, m)
    return SamplingCheck("unbiasedness", lhs, full.theta, hausdorff([lhs], full.argmax_set))


def check_consistency(model: Model, world: World, m: int, full: MleResult | None = None) -> SamplingCheck:
    """Maximizer of the expected sample log-likelihood versus the full-world estimate."""
    full = full or mle(LikelihoodFn(model, world))
    sample = mle(LikelihoodFn(model, world, "subsample", m=m))
    return SamplingCheck("consistency", sample.theta, full.theta, hausdorff(sample.argmax_set, full.argmax_set))


def sampling_report(model: Model, world: World, m: int) -> dict:
    full = mle(LikelihoodFn(model, world))
    return {
        "eq8": check_unbiasedness(model, world, m, full).to_dict(),
        "eq9": check_consistency(model, world, m, full).to_dict(),
    }


# --- linear-separable decomposition ------------------------------------------


@dataclass
class LogLikDecomposition:
    """log Q^(m)(omega) = sum_l c(m, l) * sum_{w over [l]} C_w(omega) * f_w(theta).

    Level ``l`` collects the atoms whose arguments are exactly ``l`` distinct
    elements, so a self-loop edge(i, i) sits at level 1 with the unary atoms.
    ``f_w`` is 1/l! times the log-probability of the level-l atoms of w that
    use all of its ``l`` elements.
    """

    model: RbnModel
    m: int
    k: int
    level_params: dict[int, frozenset[str]]
    violations: list[str]

    def coefficient(self, m: int, l: int) -> float:
        return 1.0

    @property
    def separable(self) -> bool:
        return not self.violations

    def f(self, l: int, theta: Mapping[str, float] | None) -> np.ndarray:
        """f_w(theta) for every w in Omega^(l), indexed by encoding."""
        model = self.model
        values = model.resolve(theta)
        sig = model.signature
        bits = _Bits(sig.num_atoms(l))
        full = {i for i, a in enumerate(sig.atoms(l)) if len(set(a.args)) == l}
        out = np.zeros(bits.size)
        with np.errstate(divide="ignore"):
            for atom, p in model.atom_probabilities(l, values, bits):
                if atom in full:
                    out += np.log(np.where(bits(atom), p, 1.0 - p))
        return out / math.factorial(l)

    def level_loglik(self, l: int, counts: np.ndarray, theta) -> np.ndarray:
        """Level-l term for rows of level-l counts."""
        f = self.f(l, theta)
        # 0 * -inf must contribute 0: a pattern that does not occur adds nothing
        with np.errstate(invalid="ignore"):
            terms = np.where(counts != 0, counts * f, 0.0)
        return self.coefficient(self.m, l) * terms.sum(axis=-1)

    def reassemble(self, n: int, theta, encodings: Sequence[int] | None = None) -> np.ndarray:
        """Decomposed log-likelihood for worlds over [n] (all of them by default)."""
        sig = self.model.signature
        if encodings is None:
            mat = count_matrix(sig, n, self.k)
        else:
            mat = count_rows(sig, n, self.k, encodings)
        total = np.zeros(mat.shape[0])
        col = 0
        for l in range(1, self.k + 1):
            width = 1 << sig.num_atoms(l)
            total += self.level_loglik(l, mat[:, col : col + width], theta)
            col += width
        return total

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "coefficients": {str(l): self.coefficient(self.m, l) for l in range(1, self.k + 1)},
            "level_params": {str(l): sorted(p) for l, p in sorted(self.level_params.items())},
            "separable": self.separable,
            "violations": list(self.violations),
        }


def _formula_params(body) -> list[str]:
    return list(dict.fromkeys(node.name for node in iter_nodes(body) if isinstance(node, Param)))


def decompose_loglik(model: Model, m: int, strict: bool = True) -> LogLikDecomposition:
    """Level decomposition of a projective RBN's log-likelihood.

    With ``strict`` set, any parameter that occurs in two formulas or governs
    atoms at two different levels raises SeparabilityError; otherwise those
    findings are recorded in ``violations``.
    """
    if not isinstance(model, RbnModel):
        raise NotInFragment(f"{model.name}: decomposition is defined for RBN models only")
    spec: RbnSpec = model.spec
    for f in spec.formulas:
        if any(isinstance(node, NoisyOr) for node in iter_nodes(f.body)):
            raise NotInFragment(f"{model.name}: formula for {f.head.rel} uses a combination function")
    arities = [len(set(f.head.args)) for f in spec.formulas]
    if any(a == 0 for a in arities):
        raise NotInFragment(f"{model.name}: zero-ary relations have no level")
    k = max(arities)
    if m < k:
        raise DimensionError(f"need m >= {k} (largest arity), got m={m}")

    owners: dict[str, list[str]] = {}
    levels: dict[str, set[int]] = {}
    level_params: dict[int, set[str]] = {l: set() for l in range(1, k + 1)}
    for f, arity in zip(spec.formulas, arities):
        for p in _formula_params(f.body):
            owners.setdefault(p, []).append(f.head.rel)
            for l in range(1, arity + 1):
                levels.setdefault(p, set()).add(l)
                level_params[l].add(p)
    violations = []
    for p, rels in owners.items():
        if len(rels) > 1:
            violations.append(f"parameter {p} is shared by the formulas for {', '.join(rels)}")
    for p, ls in levels.items():
        if len(ls) > 1:
            violations.append(f"parameter {p} governs atoms at levels {sorted(ls)}")
    if strict and violations:
        raise SeparabilityError("; ".join(violations))
    return LogLikDecomposition(model, m, k, {l: frozenset(s) for l, s in level_params.items()}, violations)


@dataclass(frozen=True)
class SeparableConsistency:
    identity_gap: float
    consistency: SamplingCheck
    separable: bool
    violations: tuple[str, ...] = ()
    tolerance: float = 1e-9

    @property
    def identity_holds(self) -> bool:
        return self.identity_gap <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.identity_holds and self.consistency.passed

    def to_dict(self) -> dict:
        return {
            "identity_gap": self.identity_gap,
            "identity_holds": self.identity_holds,
            "consistency": self.consistency.to_dict(),
            "separable": self.separable,
            "violations": list(self.violations),
            "pass": self.passed,
        }


def verify_prop6(
    model: Model, world: World, m: int, thetas: Sequence[Mapping[str, float]] | None = None, tol: float = 1e-9
) -> SeparableConsistency:
    """Per-level sampling identity plus the consistency check it is meant to imply.

    The identity E[L_l^(m)] = m!(n-l)!/((m-l)! n!) * L_l^(n) is checked at every
    theta in ``thetas``. Parameters shared between formulas are rejected; a
    parameter that spans levels is reported in ``violations``.
    """
    _check_world(model, world)
    dec = decompose_loglik(model, m, strict=False)
    shared = [v for v in dec.violations if "shared" in v]
    if shared:
        raise SeparabilityError("; ".join(shared))
    n = world.n
    if thetas is None:
        grid = [0.2, 0.35, 0.5, 0.65, 0.8]
        thetas = [{p: g for p in model.params} for g in grid]
    sig = model.signature
    multiset = subsample_multiset(world, m)
    sample_mat = count_rows(sig, m, dec.k, list(multiset))
    weights = np.fromiter(multiset.values(), dtype=float) / sum(multiset.values())
    full_mat = count_rows(sig, n, dec.k, [world.bits])
    gap = 0.0
    for theta in thetas:
        col = 0
        for l in range(1, dec.k + 1):
            width = 1 << sig.num_atoms(l)
            lhs = float(weights @ dec.level_loglik(l, sample_mat[:, col : col + width], theta))
            scale = falling_factorial(m, l) / falling_factorial(n, l)
            rhs = scale * float(dec.level_loglik(l, full_mat[:, col : col + width], theta)[0])
            col += width
            if math.isinf(lhs) or math.isinf(rhs):
                if lhs != rhs:
                    gap = math.inf
                continue
            gap = max(gap, abs(lhs - rhs))
    consistency = check_consistency(model, world, m)
    return SeparableConsistency(gap, consistency, dec.separable, tuple(dec.violations), tol)


# --- complete-data ProbLog estimation ----------------------------------------


def problog_complete_mle(spec: ProblogSpec, world: World) -> dict[str, float]:
    """Closed-form estimates for a ProbLog program observed without latent relations.

    Every parameter is the fraction of true groundings among the groundings of
    the labeled facts it labels. ``world`` is over the full signature.
    """
    observable = {name for name, _ in spec.observable_signature.relations}
    by_relation: dict[str, int] = {}
    for fact in spec.facts:
        rel = fact.atom.rel
        if rel not in observable:
            raise NotFullyObservable(
                f"relation {rel} is latent; the likelihood does not decompose over observed counts"
            )
        by_relation[rel] = by_relation.get(rel, 0) + 1
        if by_relation[rel] > 1:
            raise NotFullyObservable(f"relation {rel} is produced by several labeled facts")
    if world.signature != spec.signature:
        raise ValueError(f"world signature {world.signature} does not match program {spec.signature}")
    model = ProblogModel(spec, project_to_observable=False)
    if model.least_model(world).bits != world.bits:
        raise ZeroProbabilityWorld("world is not the least model of its own labeled-fact atoms")

    true: dict[str, int] = {}
    total: dict[str, int] = {}
    for fact in spec.facts:
        if not isinstance(fact.label, Param):
            continue
        variables = tuple(dict.fromkeys(fact.atom.args))
        for values in itertools.product(range(world.n), repeat=len(variables)):
            env = dict(zip(variables, values))
            args = tuple(env[v] for v in fact.atom.args)
            name = fact.label.name
            total[name] = total.get(name, 0) + 1
            true[name] = true.get(name, 0) + int(world.holds(fact.atom.rel, args))
    return {p: true[p] / total[p] for p in model.params}
