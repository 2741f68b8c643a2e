import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from srlproj.core import (
    Distribution,
    Signature,
    World,
    apply_permutation,
    atom_cap,
    check_cap,
    enumerate_worlds,
    marginalize,
    parse_world,
    point_mass,
    restrict_world,
    uniform,
)
from srlproj.errors import CapExceeded, DimensionError, ParseError

SIG = Signature.of(("red", 1), ("edge", 2))
GRAPH = Signature.of(("e", 2))


def test_canonical_order_relations_then_lexicographic_tuples():
    rendered = [a.render(SIG) for a in SIG.atoms(2)]
    assert rendered == ["red(0)", "red(1)", "edge(0,0)", "edge(0,1)", "edge(1,0)", "edge(1,1)"]
    assert SIG.num_atoms(3) == 3 + 9


def test_atom_index_matches_oracle_order():
    for n in (1, 2, 3):
        for i, (rel, args) in enumerate(oracles.canonical_atoms(SIG.relations, n)):
            assert SIG.atom_index(rel, args, n) == i


def test_world_roundtrip_through_atoms():
    w = World.from_atoms(SIG, 3, [("red", (2,)), ("edge", (1, 0))])
    assert w.holds("red", (2,)) and w.holds("edge", (1, 0))
    assert not w.holds("edge", (0, 1))
    assert w.count("edge") == 1
    assert parse_world(w.to_text(), SIG) == w


def test_world_rejects_out_of_range_encoding():
    with pytest.raises(ValueError):
        World(GRAPH, 1, 2)


def test_enumerate_worlds_ascending():
    encs = [w.bits for w in enumerate_worlds(GRAPH, 2)]
    assert encs == list(range(16))


def test_cap_from_environment(monkeypatch):
    monkeypatch.setenv("SRLPROJ_CAP", "5")
    assert atom_cap() == 5
    with pytest.raises(CapExceeded):
        check_cap(6)
    with pytest.raises(CapExceeded):
        list(enumerate_worlds(GRAPH, 3))


def test_permutation_moves_atoms():
    w = World.from_atoms(SIG, 3, [("red", (0,)), ("edge", (0, 1))])
    moved = apply_permutation(w, (2, 0, 1))
    assert moved == World.from_atoms(SIG, 3, [("red", (2,)), ("edge", (2, 0))])


def test_restrict_world_relabels_by_position():
    w = World.from_atoms(SIG, 4, [("red", (3,)), ("edge", (3, 1)), ("edge", (0, 2))])
    assert restrict_world(w, (3, 1)) == World.from_atoms(SIG, 2, [("red", (0,)), ("edge", (0, 1))])
    with pytest.raises(Exception):
        restrict_world(w, (1, 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 3), st.data())
def test_restrict_world_matches_oracle(n, data):
    enc = data.draw(st.integers(0, (1 << SIG.num_atoms(n)) - 1))
    k = data.draw(st.integers(1, n))
    idx = tuple(data.draw(st.permutations(range(n)))[:k])
    got = restrict_world(World(SIG, n, enc), idx).bits
    want = oracles.encode(SIG.relations, k, oracles.restrict(oracles.world_set(SIG.relations, n, enc), idx))
    assert got == want


def test_distribution_validates_mass():
    with pytest.raises(ValueError):
        Distribution(GRAPH, 1, np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        Distribution(GRAPH, 1, np.array([1.0]))
    d = uniform(GRAPH, 1)
    assert d[0] == 0.5
    assert json.loads(d.to_json()) == [{"world": 0, "p": 0.5}, {"world": 1, "p": 0.5}]


def test_marginalize_matches_oracle():
    rng = np.random.default_rng(3)
    probs = rng.random(1 << SIG.num_atoms(3))
    probs /= probs.sum()
    dist = Distribution(SIG, 3, probs)
    for m in (1, 2):
        expected = oracles.marginal(SIG.relations, 3, m, probs)
        got = marginalize(dist, m).probs
        for enc, p in expected.items():
            assert got[enc] == pytest.approx(p, abs=1e-15)


def test_marginalize_point_mass_and_identity():
    w = World.from_atoms(GRAPH, 3, [("e", (0, 1)), ("e", (2, 2))])
    assert marginalize(point_mass(w), 2).probs[World.from_atoms(GRAPH, 2, [("e", (0, 1))]).bits] == 1.0
    d = uniform(GRAPH, 2)
    assert marginalize(d, 2) is d
    with pytest.raises(DimensionError):
        marginalize(d, 3)


def test_uniform_marginal_is_uniform():
    assert np.allclose(marginalize(uniform(SIG, 3), 2).probs, uniform(SIG, 2).probs, atol=1e-15)


def test_parse_world_formats():
    text = "// two red nodes\ndomain 3\nsignature red/1, edge/2\nred(0).\nedge(0,2).\n"
    w = parse_world(text)
    assert w.signature == SIG and w.n == 3
    assert [a.render(SIG) for a in w.true_atoms()] == ["red(0)", "edge(0,2)"]
    inferred = parse_world("domain 2\nedge(1,0).\n")
    assert inferred.signature == Signature.of(("edge", 2))


@pytest.mark.parametrize(
    "text",
    ["edge(0,1).\n", "domain x\n", "domain 2\nedge(0,5).\n", "domain 2\nEdge(0).\n", "domain 2\nsignature e\n"],
)
def test_parse_world_errors(text):
    with pytest.raises(ParseError):
        parse_world(text)


def test_permutation_composition_is_a_group_action():
    w = World.from_atoms(SIG, 3, [("red", (1,)), ("edge", (0, 2)), ("edge", (1, 1))])
    for p, q in itertools.product(itertools.permutations(range(3)), repeat=2):
        both = apply_permutation(apply_permutation(w, p), q)
        composed = tuple(q[p[i]] for i in range(3))
        assert both == apply_permutation(w, composed)
