import random

import pytest

from specgen import GENERATORS
from srlproj import data_path
from srlproj.core import Signature
from srlproj.errors import ArityError, ModelSyntaxError, ParseError, StratificationError
from srlproj.lang import (
    Const,
    IfThenElse,
    NoisyOr,
    Param,
    check_projective_fragment,
    dialect_for_path,
    format_model,
    free_parameters,
    load_model,
    parse_mln,
    parse_model,
    parse_problog,
    parse_rbn,
)

FIXTURES = [
    "block.rbn", "block_params.rbn", "block_unary_params.rbn", "noisyor.rbn", "attribute_noisyor.rbn",
    "shared_param.rbn", "two_param.rbn", "erdos_renyi.rbn", "homophily.mln", "flatline.mln", "symmetric.mln",
    "red_edge.plp", "red_edge_param.plp", "latent_rule.plp",
]

IN_FRAGMENT = {
    "block.rbn": True, "block_params.rbn": True, "block_unary_params.rbn": True, "noisyor.rbn": False,
    "attribute_noisyor.rbn": False, "shared_param.rbn": True, "two_param.rbn": True, "erdos_renyi.rbn": True,
    "homophily.mln": False, "flatline.mln": False, "symmetric.mln": True, "red_edge.plp": True,
    "red_edge_param.plp": True, "latent_rule.plp": True,
}


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip(name):
    path = data_path(name)
    spec = load_model(path)
    again = parse_model(format_model(spec), dialect_for_path(path))
    assert again == spec
    assert format_model(again) == format_model(spec)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_fragment_verdicts(name):
    report = check_projective_fragment(load_model(data_path(name)))
    assert report.passed is IN_FRAGMENT[name]
    assert report.to_dict()["projective_fragment"] is IN_FRAGMENT[name]
    assert bool(report.violations) is not IN_FRAGMENT[name]


def test_block_model_structure():
    spec = load_model(data_path("block.rbn"))
    assert spec.signature == Signature.of(("red", 1), ("black", 1), ("edge", 2))
    edge = spec.formulas[2].body
    assert isinstance(edge, IfThenElse)
    assert [str(l) for l in edge.condition] == ["red(X)", "red(Y)"]
    assert edge.then == Const(0.7)
    assert isinstance(edge.otherwise, IfThenElse) and edge.otherwise.otherwise == Const(0.05)


def test_noisy_or_binds_variable():
    spec = load_model(data_path("noisyor.rbn"))
    body = spec.formulas[1].body
    assert isinstance(body, NoisyOr) and body.var == "Y"
    assert isinstance(body.inner, IfThenElse) and body.inner.then == Param("theta")
    assert body.inner.otherwise == Const(0.0)


def test_free_parameters_in_order():
    assert free_parameters(load_model(data_path("block_params.rbn"))) == ("r", "b", "e_rr", "e_bb", "e_other")
    assert free_parameters(load_model(data_path("shared_param.rbn"))) == ("theta",)
    assert free_parameters(load_model(data_path("flatline.mln"))) == ("w",)
    assert free_parameters(load_model(data_path("red_edge_param.plp"))) == ("p",)
    assert free_parameters(load_model(data_path("block.rbn"))) == ()


def test_problog_observable_signature():
    spec = load_model(data_path("latent_rule.plp"))
    assert spec.signature.names == ("red", "rule", "edge")
    assert spec.observable_signature == Signature.of(("red", 1), ("edge", 2))
    assert load_model(data_path("red_edge.plp")).observable_signature.names == ("red", "edge")


def test_mln_connectives_and_weights():
    spec = parse_mln("!a(X) v (b(X) ^ c(X,Y)) :: -1.5;\nc(X,Y) :: $w;\nb(X) :: w2;")
    assert [f.weight for f in spec.formulas] == [-1.5, Param("w"), Param("w2")]
    assert spec.signature.names == ("a", "b", "c")


@pytest.mark.parametrize(
    "text, error, line",
    [
        ("a(X) <- 0.5\nb(X) <- 0.3;", ModelSyntaxError, 2),
        ("a(X) <- if b(X): 0.5 else: 0.1;\nb(X) <- 0.3;", StratificationError, 1),
        ("a(X) <- if a(X): 0.5 else: 0.1;", StratificationError, 1),
        ("a(X) <- 0.5;\nb(X) <- if a(X,X): 1 else: 0;", ArityError, 2),
        ("a(X) <- if b(Y): 1 else: 0;\n", ParseError, 1),
        ("a(X) <- 1.5;", ParseError, 1),
        ("a(X) <- noisy-or{ 0.5 };", ModelSyntaxError, 1),
    ],
)
def test_rbn_errors(text, error, line):
    with pytest.raises(error) as info:
        parse_rbn(text)
    assert info.value.line == line


@pytest.mark.parametrize(
    "text, error",
    [
        ("a(X) ^ :: 1.0;", ModelSyntaxError),
        ("a(X) :: 1.0;\na(X,Y) :: 2.0;", ArityError),
        ("a(X) ^ b(X)", ModelSyntaxError),
    ],
)
def test_mln_errors(text, error):
    with pytest.raises(error):
        parse_mln(text)


@pytest.mark.parametrize(
    "text, error",
    [
        ("0.5 :: a(X).\na(X) :- a(X).", ParseError),
        ("0.5 :: a(X).\nb(X) :- c(X).", ParseError),
        ("0.5 :: a(X).\nb(X) :- c(X).\nc(X) :- b(X).", StratificationError),
        ("0.5 :: a(X).\nb(X) :- a(X,X).", ArityError),
        ("0.5 :: a(X)", ModelSyntaxError),
        ("0.5 :: a(X).\nobservable z/1.", ModelSyntaxError),
    ],
)
def test_problog_errors(text, error):
    with pytest.raises(error):
        parse_problog(text)


def test_error_position_points_at_token():
    with pytest.raises(ModelSyntaxError) as info:
        parse_rbn("red(X) <- 0.3;\nedge(X,Y) <- if red(X) & : 0.7 else: 0.1;")
    assert (info.value.line, info.value.col) == (2, 26)


def test_problog_fragment_violation_names_fresh_variable():
    spec = parse_problog("0.5 :: f(X,Y).\nd(X) :- f(X,Y).")
    report = check_projective_fragment(spec)
    assert not report.passed
    assert "Y" in report.violations[0].message


@pytest.mark.parametrize("dialect", sorted(GENERATORS))
def test_random_specs_round_trip_and_pass_fragment(dialect):
    rng = random.Random(11)
    for _ in range(40):
        text, _ = GENERATORS[dialect](rng)
        spec = parse_model(text, dialect)
        assert parse_model(format_model(spec), dialect) == spec
        assert check_projective_fragment(spec).passed
