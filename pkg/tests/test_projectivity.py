import math
import random

import numpy as np
import pytest

from specgen import GENERATORS
from srlproj import data_path
from srlproj.core import Distribution, World, marginalize, point_mass
from srlproj.lang import load_model, parse_model
from srlproj.projectivity import (
    default_n_max,
    flatline_model,
    q_mln,
    q_rbn,
    structural_witness,
    test_exchangeable,
    test_projective,
)
from srlproj.semantics import clique_empty, erdos_renyi, model_from_spec, sparse_graph


def load(name):
    return model_from_spec(load_model(data_path(name)))


def q_mln_closed_form(n, w):
    # with no edges among {0, 1}, a(0) only interacts with the n - 2 free edges e(0, y)
    on = (1 + math.exp(w)) ** (n - 2)
    return on / (on + 2 ** (n - 2))


def q_rbn_closed_form(n, theta):
    return 1 - (1 - theta / 2) ** (n - 2)


def test_exchangeability_detects_asymmetry():
    er = erdos_renyi()
    assert test_exchangeable(er.distribution(3, {"p": 0.3})).passed
    w = World.from_atoms(er.signature, 3, [("e", (0, 1))])
    result = test_exchangeable(point_mass(w))
    assert not result.passed and result.worst == 1.0
    assert result.transposition in {(0, 1), (1, 2)}


@pytest.mark.parametrize("w", [-2, -1, 0, 1, 1.2, 2])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_q_mln_matches_closed_form(n, w):
    assert abs(q_mln(n, w) - q_mln_closed_form(n, w)) <= 1e-12


@pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_q_rbn_matches_closed_form(n, theta):
    assert abs(q_rbn(n, theta) - q_rbn_closed_form(n, theta)) <= 1e-12


def test_q_requires_two_elements():
    with pytest.raises(ValueError):
        q_mln(1, 0.0)


@pytest.mark.parametrize("model, theta", [(erdos_renyi(), {"p": 0.3}), (clique_empty(), {})])
def test_projective_graph_families(model, theta):
    report = test_projective(model, theta, 4)
    assert report.projective
    assert set(report.deviations) == {(n, m) for n in range(2, 5) for m in range(1, n)}
    assert report.to_dict()["projective"] is True


def test_clique_empty_marginal_is_the_mixture_at_two():
    marg = marginalize(clique_empty().distribution(3), 2)
    assert marg.probs[0] == 0.5 and marg.probs[-1] == 0.5 and np.count_nonzero(marg.probs) == 2


@pytest.mark.parametrize("name", ["homophily.mln", "noisyor.rbn"])
def test_non_projective_models_show_deviation(name):
    model = load(name)
    theta = {"theta": 0.5} if model.params else None
    report = test_projective(model, theta, 4 if name.endswith(".rbn") else 3)
    assert not report.projective
    assert report.max_deviation >= 1e-3
    assert report.worst_pair() is not None


@pytest.mark.parametrize("name", ["block.rbn", "symmetric.mln", "red_edge.plp", "latent_rule.plp"])
def test_fragment_fixtures_are_projective(name):
    assert test_projective(load(name), None, 3).projective


def test_sparse_graph_not_projective_but_structurally_projective():
    model = sparse_graph()
    report = test_projective(model, {"theta": 0.9}, 3)
    assert not report.projective
    grid = np.round(np.linspace(0.1, 1.0, 10), 10)
    witness = structural_witness(model, 3, 2, 0.9, grid)
    # the size-2 marginal is the family member with theta' = 2 * 0.9 / 3
    assert witness.argmin == pytest.approx(0.6)
    assert witness.min_deviation <= 1e-12 and not witness.certificate


def test_flatline_marginal_leaves_the_family():
    witness = structural_witness(flatline_model(), 3, 2, 1.2, np.linspace(-10, 10, 201))
    assert witness.certificate
    assert witness.to_dict()["counterexample"] is True


def test_default_n_max():
    assert default_n_max(erdos_renyi()) == 4
    assert default_n_max(model_from_spec(parse_model("a(X) <- 0.5;", "rbn"))) == 6


def test_unary_model_checked_to_six():
    report = test_projective(model_from_spec(parse_model("a(X) <- 0.3;\nb(X) <- if a(X): 0.9 else: 0.2;", "rbn")))
    assert max(n for n, _ in report.deviations) == 6 and report.projective


@pytest.mark.parametrize("dialect", sorted(GENERATORS))
def test_random_fragment_specs_projective(dialect):
    rng = random.Random(23)
    for _ in range(10):
        text, theta = GENERATORS[dialect](rng)
        report = test_projective(model_from_spec(parse_model(text, dialect)), theta, 4)
        assert report.projective, text


def test_report_deviation_equals_direct_marginal():
    model = load("homophily.mln")
    report = test_projective(model, None, 3)
    direct = marginalize(model.distribution(3), 1).max_deviation(model.distribution(1))
    assert report.deviations[(3, 1)] == pytest.approx(direct, abs=1e-15)


def test_distribution_cache_returns_same_object():
    er = erdos_renyi()
    assert er.distribution(2, {"p": 0.3}) is er.distribution(2, {"p": 0.3})
    assert isinstance(er.distribution(2, {"p": 0.4}), Distribution)
