"""Acceptance criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -s`` or directly with ``python tests/test_acceptance.py``.
"""

import random
import sys
import time

import numpy as np
import pytest

import oracles
from specgen import GENERATORS
from srlproj import data_path
from srlproj.cli import marginal_likelihood_gap, marginal_likelihood_models, random_identity_cases
from srlproj.core import Signature, World, parse_world
from srlproj.lang import load_model, parse_model
from srlproj.learning import (
    PROB_CLAMP,
    LikelihoodFn,
    check_consistency,
    check_unbiasedness,
    expected_argmax,
    mle,
)
from srlproj.projectivity import q_mln, q_rbn, test_projective
from srlproj.semantics import MlnModel, model_from_spec, parse_query, problog_distribution, query
from srlproj.stats import ordered_count, verify_lemma1


def load(name):
    return model_from_spec(load_model(data_path(name)))


def half_red(model):
    return parse_world(data_path("half_red.world").read_text(), model.signature)


def mln_flatline():
    values = [q_mln(2, w) for w in (-2, -1, 0, 1, 2)]
    worst = max(abs(v - 0.5) for v in values)
    return worst <= 1e-12, f"max |q_mln(2, w) - 0.5| = {worst:.3g}"


def mln_increasing():
    q = [q_mln(n, 1.2) for n in (2, 3, 4)]
    steps = [q[1] - q[0], q[2] - q[1]]
    return min(steps) >= 1e-6, "q_mln(n, 1.2) for n = 2, 3, 4: " + ", ".join(f"{v:.12g}" for v in q)


def rbn_counterexample():
    at_two = max(abs(q_rbn(2, t)) for t in (0.1, 0.5, 0.9))
    at_three = q_rbn(3, 0.5)
    return at_two <= 1e-12 and at_three > 1e-3, f"max |q_rbn(2, t)| = {at_two:.3g}, q_rbn(3, 0.5) = {at_three:.12g}"


def shared_parameter_numbers():
    model = load("shared_param.rbn")
    w = half_red(model)
    sub = mle(LikelihoodFn(model, w, "subsample", m=2)).theta["theta"]
    full = mle(LikelihoodFn(model, w)).theta["theta"]
    avg = expected_argmax(model, w, 2)["theta"]
    ok = abs(sub - 1 / 6) <= 1e-5 and abs(full - 0.1) <= 1e-5 and abs(avg - 1 / 6) <= 1e-5
    return ok, f"subsample {sub:.12g}, full {full:.12g}, expected argmax {avg:.12g}"


def two_parameter_variant():
    model = load("two_param.rbn")
    w = half_red(model)
    ok = True
    parts = []
    for label, fn in (("full", LikelihoodFn(model, w)), ("subsample", LikelihoodFn(model, w, "subsample", m=2))):
        res = mle(fn)
        ok &= abs(res.theta["theta_r"] - 0.5) <= 1e-5
        ok &= res.boundary.get("theta_e") == 0.0 and res.theta["theta_e"] == PROB_CLAMP
        parts.append(f"{label}: theta_r {res.theta['theta_r']:.12g}, theta_e boundary {res.boundary.get('theta_e')}")
    unbiased = check_unbiasedness(model, w, 2)
    consistent = check_consistency(model, w, 2)
    ok &= unbiased.passed and consistent.passed
    parts.append(f"unbiasedness {unbiased.distance:.3g}, consistency {consistent.distance:.3g}")
    return ok, "; ".join(parts)


def marginal_likelihood_equals_likelihood():
    worst = 0.0
    names = []
    for model, theta in marginal_likelihood_models():
        names.append(model.name)
        for n in (3, 4):
            worst = max(worst, marginal_likelihood_gap(model, theta, n))
    return worst <= 1e-9, f"max gap {worst:.3g} over {', '.join(names)} at n = 3, 4"


def fragment_soundness(count=200):
    start = time.perf_counter()
    failures = []
    for dialect in sorted(GENERATORS):
        rng = random.Random(2024)
        for _ in range(count):
            text, theta = GENERATORS[dialect](rng)
            report = test_projective(model_from_spec(parse_model(text, dialect)), theta, 4, 1e-9)
            if not report.projective:
                failures.append((dialect, text))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed <= 600
    return ok, f"{3 * count - len(failures)} of {3 * count} specs projective in {elapsed:.0f}s"


def sampling_identity_exact():
    cases = list(random_identity_cases(50, seed=1))
    equal = sum(verify_lemma1(w, m, p).equal for w, m, p in cases)
    return equal == len(cases), f"{equal} of {len(cases)} instances exactly equal"


def problog_semantics():
    dist = problog_distribution(load_model(data_path("red_edge.plp")), 2)
    worst = 0.0
    for enc in range(len(dist)):
        w = World(dist.signature, 2, enc)
        reds = {i for i in range(2) if w.holds("red", (i,))}
        closed = all(w.holds("edge", (i, j)) == (i in reds and j in reds) for i in range(2) for j in range(2))
        want = 0.8 ** len(reds) * 0.2 ** (2 - len(reds)) if closed else 0.0
        worst = max(worst, abs(dist[enc] - want))
    latent = query(load("latent_rule.plp").distribution(2), parse_query("edge(0,1)", "red(0),red(1)"))
    ok = worst <= 1e-12 and abs(latent - 0.5) <= 1e-12
    return ok, f"max world error {worst:.3g}, P(edge(0,1) | red(0), red(1)) = {latent:.12g}"


def non_projectivity_witnesses():
    parts = []
    ok = True
    for name, theta, n_max in (("homophily.mln", None, 3), ("noisyor.rbn", {"theta": 0.5}, 4)):
        report = test_projective(load(name), theta, n_max)
        pair = report.worst_pair()
        ok &= report.max_deviation >= 1e-3
        parts.append(f"{name}: {report.max_deviation:.6g} at (n, m) = {pair}")
    return ok, "; ".join(parts)


def oracle_equivalence():
    worst = 0.0
    for name, theta in (("homophily.mln", None), ("flatline.mln", {"w": 1.2}), ("symmetric.mln", None)):
        spec = load_model(data_path(name))
        for n in (1, 2, 3):
            got = MlnModel(spec).distribution(n, theta).probs
            worst = max(worst, float(np.max(np.abs(got - np.array(oracles.mln_probs(spec, n, theta))))))
    sig = Signature.of(("red", 1), ("edge", 2))
    rng = random.Random(11)
    agree = 0
    for _ in range(100):
        n = rng.randint(1, 4)
        k = rng.randint(1, min(n, 3))
        w = World(sig, n, rng.getrandbits(sig.num_atoms(n)))
        idx = tuple(rng.sample(range(n), k))
        ws = oracles.world_set(sig.relations, n, w.bits)
        p = World(sig, k, oracles.encode(sig.relations, k, oracles.restrict(ws, idx)))
        want = oracles.ordered_count(ws, n, oracles.world_set(sig.relations, k, p.bits), k)
        agree += ordered_count(w, p) == want
    return worst <= 1e-9 and agree == 100, f"MLN max error {worst:.3g}; ordered counts {agree} of 100 exact"


CRITERIA = [
    (1, "MLN conditional flat at n = 2", mln_flatline),
    (2, "MLN conditional increasing in n", mln_increasing),
    (3, "noisy-or RBN counterexample", rbn_counterexample),
    (4, "shared-parameter learning numbers", shared_parameter_numbers),
    (5, "two-parameter variant", two_parameter_variant),
    (6, "marginal likelihood equals likelihood", marginal_likelihood_equals_likelihood),
    (7, "fragment soundness on random specs", fragment_soundness),
    (8, "sampling identity is exact", sampling_identity_exact),
    (9, "ProbLog world probabilities", problog_semantics),
    (10, "non-projectivity witnesses", non_projectivity_witnesses),
    (11, "engine and oracle agree", oracle_equivalence),
]


def line(number, title, passed, detail):
    return f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} ({detail})"


PARAMS = [pytest.param(*c, id=f"c{c[0]:02d}", marks=[pytest.mark.slow] if c[0] == 7 else []) for c in CRITERIA]


@pytest.mark.parametrize("number, title, fn", PARAMS)
def test_criterion(number, title, fn, capsys):
    passed, detail = fn()
    with capsys.disabled():
        print("\n" + line(number, title, passed, detail))
    assert passed, detail


if __name__ == "__main__":
    results = []
    for number, title, fn in CRITERIA:
        passed, detail = fn()
        results.append(passed)
        print(line(number, title, passed, detail), flush=True)
    print(f"{sum(results)} of {len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
