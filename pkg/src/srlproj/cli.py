"""Command-line front end: ``srlproj <command> ...``.

Exit codes: 0 pass, 1 semantic failure, 2 parse error, 3 enumeration cap
exceeded, 4 query error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, data_path
from .core import DEFAULT_TOL, World, parse_world
from .errors import CapExceeded, ParseError, SrlError, ZeroEvidence
from .lang import check_projective_fragment, load_model
from .learning import LikelihoodFn, expected_argmax, loglik, marginal_loglik, mle, sampling_report
from .projectivity import q_mln, q_rbn, test_projective
from .semantics import (
    Model,
    ProblogModel,
    clique_empty,
    erdos_renyi,
    model_from_spec,
    parse_query,
    query,
    sparse_graph,
)
from .stats import complete_counts, verify_lemma1

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_CAP, EXIT_QUERY = 0, 1, 2, 3, 4

BUILTINS = {"erdos-renyi": erdos_renyi, "clique-empty": clique_empty, "sparse-graph": sparse_graph}


class QueryError(SrlError):
    pass


# --- output ------------------------------------------------------------------


def fmt(x) -> str:
    """Numbers with 12 significant digits."""
    if isinstance(x, bool) or not isinstance(x, (int, float, np.floating, np.integer)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def clean(obj):
    """JSON-ready copy with floats rounded to 12 significant digits and infinities as strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.12g}")
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2, sort_keys=True)


def emit(args, report: dict, lines: list[str]) -> None:
    """Print the text summary, or the JSON report when ``--json -`` is given; ``--json PATH`` writes a file."""
    target = getattr(args, "json", None)
    if target == "-":
        print(dumps(report))
        return
    for line in lines:
        print(line)
    if target:
        Path(target).write_text(dumps(report) + "\n")


# --- loading -----------------------------------------------------------------


def parse_params(items: list[str] | None) -> dict[str, float]:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise argparse.ArgumentTypeError(f"--param expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"--param {name}: {value!r} is not a number") from None
    return out


def resolve_path(path: str) -> Path:
    """A file path, falling back to the bundled fixtures for bare names like ``block.rbn``."""
    p = Path(path)
    if p.exists() or p.is_absolute() or len(p.parts) > 1:
        return p
    bundled = data_path(path)
    return bundled if bundled.exists() else p


def load(path: str, dialect: str | None = None) -> Model:
    """A model from a file, or a built-in family written ``builtin:<name>``."""
    if path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        if name not in BUILTINS:
            raise ParseError(f"unknown built-in model {name!r}; choose from {sorted(BUILTINS)}")
        return BUILTINS[name]()
    p = resolve_path(path)
    return model_from_spec(load_model(p, dialect), name=p.stem)


_SIGNATURE_LINE = re.compile(r"^\s*signature\b", re.MULTILINE)


def load_world(path: str, model: Model | None = None) -> World:
    text = resolve_path(path).read_text()
    if model is None or _SIGNATURE_LINE.search(text):
        return parse_world(text)
    return parse_world(text, model.signature)


def model_for_world(model: Model, world: World) -> Model:
    """ProbLog worlds may list latent relations too; evaluate them over the full signature then."""
    if isinstance(model, ProblogModel) and world.signature == model.spec.signature != model.signature:
        return ProblogModel(model.spec, project_to_observable=False, name=model.name)
    return model


# --- commands ----------------------------------------------------------------


def cmd_check(args) -> int:
    if args.model.startswith("builtin:"):
        raise ParseError("built-in families have no source text to check")
    p = resolve_path(args.model)
    spec = load_model(p, args.dialect)
    report = check_projective_fragment(spec)
    lines = [f"{p.name}: {'in' if report.passed else 'not in'} the projective {report.dialect} fragment"]
    lines += [f"  {v.message}" + (f" (line {v.pos.line})" if getattr(v, "pos", None) else "") for v in report.violations]
    emit(args, report.to_dict(), lines)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_project(args) -> int:
    model = load(args.model, args.dialect)
    report = test_projective(model, parse_params(args.param), args.n, args.tol)
    lines = [f"{model.name}: {'projective' if report.projective else 'not projective'} (tol {fmt(args.tol)})"]
    lines.append(f"{'n':>3} {'m':>3} {'deviation':>20}")
    for (n, m), dev in sorted(report.deviations.items()):
        lines.append(f"{n:>3} {m:>3} {fmt(dev):>20}")
    for n, r in sorted(report.exchangeability.items()):
        if not r.passed:
            lines.append(f"not exchangeable at n={n}: {fmt(r.worst)}")
    emit(args, report.to_dict(), lines)
    return EXIT_OK if report.projective else EXIT_FAIL


def cmd_query(args) -> int:
    model = load(args.model, args.dialect)
    try:
        q = parse_query(args.target, args.evidence or "")
    except ParseError as exc:
        raise QueryError(str(exc)) from None
    dist = model.distribution(args.n, parse_params(args.param))
    try:
        p = query(dist, q)
    except (ParseError, ValueError, KeyError) as exc:
        raise QueryError(str(exc)) from None
    report = {"model": model.name, "n": args.n, "target": args.target, "evidence": args.evidence or "", "probability": p}
    emit(args, report, [fmt(p)])
    return EXIT_OK


def cmd_counts(args) -> int:
    world = load_world(args.world)
    stats = complete_counts(world, args.k)
    lines = [f"complete {args.k}-count statistics of a world over [{world.n}]"]
    for l in sorted(stats.levels):
        for enc, c in sorted(stats.levels[l].items()):
            lines.append(f"  l={l} world={enc:<6} count={c}")
    emit(args, stats.to_dict(), lines)
    return EXIT_OK


def cmd_lemma1(args) -> int:
    world = load_world(args.world)
    sig = world.signature
    rows = []
    for enc in range(1 << sig.num_atoms(args.k)):
        r = verify_lemma1(world, args.m, World(sig, args.k, enc))
        rows.append({"pattern": enc, **r.to_dict()})
    ok = all(r["equal"] for r in rows)
    lines = [f"{'pattern':>8} {'lhs':>12} {'rhs':>12} equal"]
    lines += [f"{r['pattern']:>8} {r['lhs']:>12} {r['rhs']:>12} {r['equal']}" for r in rows]
    emit(args, {"n": world.n, "m": args.m, "k": args.k, "rows": rows, "all_equal": ok}, lines)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_mle(args) -> int:
    model = load(args.model, args.dialect)
    world = load_world(args.world, model)
    model = model_for_world(model, world)
    if args.mode == "marginal" and args.n is None:
        raise argparse.ArgumentTypeError("--mode marginal needs --n")
    if args.mode == "subsample" and args.m is None:
        raise argparse.ArgumentTypeError("--mode subsample needs --m")
    objective = LikelihoodFn(model, world, args.mode, n=args.n, m=args.m)
    result = mle(objective)
    report = {**objective.describe(), **result.to_dict()}
    lines = [f"{name} = {fmt(v)}" + (f"  (boundary {fmt(result.boundary[name])})" if name in result.boundary else "")
             for name, v in sorted(result.theta.items())]
    lines.append(f"loglik = {fmt(result.loglik)}")
    emit(args, report, lines)
    return EXIT_OK


# --- repro -------------------------------------------------------------------


@dataclass
class Row:
    quantity: str
    value: float
    expected: str
    passed: bool

    def to_dict(self) -> dict:
        return {"quantity": self.quantity, "value": self.value, "expected": self.expected, "pass": self.passed}


def _close(value: float, target: float, tol: float) -> bool:
    return abs(value - target) <= tol


def repro_mln_flatline() -> list[Row]:
    rows = [Row(f"q_mln(2, {w})", q_mln(2, w), "0.5 +- 1e-12", _close(q_mln(2, w), 0.5, 1e-12)) for w in (-2, -1, 0, 1, 2)]
    q = [q_mln(n, 1.2) for n in (2, 3, 4)]
    for n, v in zip((2, 3, 4), q):
        rows.append(Row(f"q_mln({n}, 1.2)", v, "increasing in n" if n > 2 else "0.5", True))
    rows.append(Row("q_mln(3,1.2) - q_mln(2,1.2)", q[1] - q[0], ">= 1e-6", q[1] - q[0] >= 1e-6))
    rows.append(Row("q_mln(4,1.2) - q_mln(3,1.2)", q[2] - q[1], ">= 1e-6", q[2] - q[1] >= 1e-6))
    return rows


def repro_rbn_noisyor() -> list[Row]:
    rows = [Row(f"q_rbn(2, {t})", q_rbn(2, t), "0 +- 1e-12", _close(q_rbn(2, t), 0.0, 1e-12)) for t in (0.1, 0.5, 0.9)]
    rows.append(Row("q_rbn(3, 0.5)", q_rbn(3, 0.5), "> 1e-3", q_rbn(3, 0.5) > 1e-3))
    rows.append(Row("q_rbn(4, 0.5)", q_rbn(4, 0.5), "> 1e-3", q_rbn(4, 0.5) > 1e-3))
    return rows


def _half_red(model: Model) -> World:
    return parse_world(data_path("half_red.world").read_text(), model.signature)


def repro_shared_param() -> list[Row]:
    model = load("shared_param.rbn")
    world = _half_red(model)
    sub = mle(LikelihoodFn(model, world, "subsample", m=2)).theta["theta"]
    full = mle(LikelihoodFn(model, world)).theta["theta"]
    avg = expected_argmax(model, world, 2)["theta"]
    report = sampling_report(model, world, 2)
    return [
        Row("argmax expected sample loglik", sub, "1/6 +- 1e-5", _close(sub, 1 / 6, 1e-5)),
        Row("argmax full-world loglik", full, "1/(2(n+1)) = 0.1 +- 1e-5", _close(full, 0.1, 1e-5)),
        Row("expected per-sample argmax", avg, "1/6 +- 1e-5", _close(avg, 1 / 6, 1e-5)),
        Row("unbiasedness distance", report["eq8"]["distance"], "fails (> 1e-4)", not report["eq8"]["pass"]),
        Row("consistency distance", report["eq9"]["distance"], "fails (> 1e-4)", not report["eq9"]["pass"]),
    ]


def repro_two_param() -> list[Row]:
    model = load("two_param.rbn")
    world = _half_red(model)
    rows = []
    for label, objective in (("full-world", LikelihoodFn(model, world)),
                             ("expected sample", LikelihoodFn(model, world, "subsample", m=2))):
        res = mle(objective)
        rows.append(Row(f"theta_r, {label}", res.theta["theta_r"], "0.5 +- 1e-5", _close(res.theta["theta_r"], 0.5, 1e-5)))
        at = res.boundary.get("theta_e")
        rows.append(Row(f"theta_e, {label}", res.theta["theta_e"], "boundary 0", at == 0.0))
    report = sampling_report(model, world, 2)
    rows.append(Row("unbiasedness distance", report["eq8"]["distance"], "passes (<= 1e-4)", report["eq8"]["pass"]))
    rows.append(Row("consistency distance", report["eq9"]["distance"], "passes (<= 1e-4)", report["eq9"]["pass"]))
    return rows


def random_identity_cases(count: int = 50, seed: int = 0):
    """Random (world, m, pattern) triples over the red/edge signature with n <= 4."""
    rng = random.Random(seed)
    sig = load("two_param.rbn").signature
    for _ in range(count):
        n = rng.randint(2, 4)
        m = rng.randint(1, n)
        k = rng.randint(1, min(m, 2))
        world = World(sig, n, rng.getrandbits(sig.num_atoms(n)))
        pattern = World(sig, k, rng.getrandbits(sig.num_atoms(k)))
        yield world, m, pattern


def repro_lemma1() -> list[Row]:
    sig = load("two_param.rbn").signature
    edge01 = lambda n: World.from_atoms(sig, n, [("edge", (0, 1))])
    full = lambda n: World(sig, n, (1 << sig.num_atoms(n)) - 1)
    cases = [
        ("edge(0,1) in n=3, m=2", edge01(3), 2, edge01(2), Fraction(1, 6)),
        ("empty n=4, m=2, empty k=2", World(sig, 4, 0), 2, World(sig, 2, 0), Fraction(1)),
        ("complete n=4, m=3, complete k=2", full(4), 3, full(2), Fraction(1)),
    ]
    rows = []
    for label, world, m, pattern, target in cases:
        r = verify_lemma1(world, m, pattern)
        rows.append(Row(label, float(r.lhs), f"lhs = rhs = {target}", r.equal and r.lhs == target))
    results = [verify_lemma1(w, m, p).equal for w, m, p in random_identity_cases()]
    rows.append(Row("random instances with lhs == rhs", sum(results), f"{len(results)} of {len(results)}", all(results)))
    return rows


def marginal_likelihood_models() -> list[tuple[Model, dict]]:
    return [
        (erdos_renyi(), {"p": 0.3}),
        (clique_empty(), {}),
        (load("block.rbn"), {}),
        (load("red_edge.plp"), {}),
    ]


def marginal_likelihood_gap(model: Model, theta: dict, n: int) -> float:
    """max over worlds w over [2] of |marginal_loglik(w, n) - loglik(w)|, matching infinities exactly."""
    gap = 0.0
    for enc in range(1 << model.signature.num_atoms(2)):
        w = World(model.signature, 2, enc)
        a, b = marginal_loglik(model, w, n, theta), loglik(model, w, theta)
        if math.isinf(a) or math.isinf(b):
            gap = gap if a == b else math.inf
        else:
            gap = max(gap, abs(a - b))
    return gap


def repro_marginal_likelihood() -> list[Row]:
    rows = []
    for model, theta in marginal_likelihood_models():
        for n in (3, 4):
            gap = marginal_likelihood_gap(model, theta, n)
            rows.append(Row(f"{model.name}, n={n}", gap, "<= 1e-9", gap <= 1e-9))
    return rows


REPRO = {
    "mln-eq6": repro_mln_flatline,
    "rbn-noisyor": repro_rbn_noisyor,
    "shared-param": repro_shared_param,
    "two-param": repro_two_param,
    "lemma1": repro_lemma1,
    "prop4": repro_marginal_likelihood,
}


def cmd_repro(args) -> int:
    rows = REPRO[args.case]()
    ok = all(r.passed for r in rows)
    width = max(len(r.quantity) for r in rows)
    lines = [f"{'quantity':<{width}}  {'value':>20}  {'expected':<26} result"]
    lines += [f"{r.quantity:<{width}}  {fmt(r.value):>20}  {r.expected:<26} {'pass' if r.passed else 'FAIL'}" for r in rows]
    emit(args, {"case": args.case, "rows": [r.to_dict() for r in rows], "pass": ok}, lines)
    return EXIT_OK if ok else EXIT_FAIL


# --- argument parsing --------------------------------------------------------


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dialect", choices=("rbn", "mln", "problog"), help="override the dialect inferred from the extension")
    common.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter value (repeatable)")
    common.add_argument("--tol", type=_positive, default=DEFAULT_TOL, help="numerical tolerance (default 1e-9)")
    common.add_argument("--cap", type=int, help="maximum number of ground atoms to enumerate")
    common.add_argument("--json", metavar="PATH", help="write the JSON report to PATH ('-' for stdout)")

    parser = argparse.ArgumentParser(prog="srlproj", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="static projective-fragment check")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("project", parents=[common], help="exact projectivity test up to --n")
    p.add_argument("model", help="model file or builtin:<name>")
    p.add_argument("--n", type=int, help="largest domain size (default 4 with binary relations, else 6)")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("query", parents=[common], help="conditional probability at domain size --n")
    p.add_argument("model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", required=True, help="ground literal, e.g. 'edge(0,1)' or '!red(0)'")
    p.add_argument("--evidence", help="comma-separated ground literals")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("counts", parents=[common], help="complete k-count statistics of a world")
    p.add_argument("world")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("lemma1", parents=[common], help="exact sampling identity for all size-k patterns")
    p.add_argument("world")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_lemma1)

    p = sub.add_parser("mle", parents=[common], help="maximum-likelihood estimate from a world")
    p.add_argument("model")
    p.add_argument("world")
    p.add_argument("--mode", choices=("exact", "marginal", "subsample"), default="exact")
    p.add_argument("--n", type=int, help="domain size for --mode marginal")
    p.add_argument("--m", type=int, help="sample size for --mode subsample")
    p.set_defaults(func=cmd_mle)

    p = sub.add_parser("repro", parents=[common], help="regenerate a table of reference numbers")
    p.add_argument("case", choices=sorted(REPRO))
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cap is not None:
        os.environ["SRLPROJ_CAP"] = str(args.cap)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ZeroEvidence, QueryError) as exc:
        print(f"query error: {exc}", file=sys.stderr)
        return EXIT_QUERY
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (SrlError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
