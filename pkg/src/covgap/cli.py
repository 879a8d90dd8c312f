"""Command-line front end.

Exit codes: 0 success (REALIZABLE, PASS, value computed), 1 NOT_REALIZABLE or
FAIL, 2 NECESSARY_PASSED or UNKNOWN, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .constructors import ConstructionSpec, Recipe, hafnian
from .core import DEFAULT_TOL, CovgapError, MatrixKind, Tolerances, load_array, parse_codomain, validate_symmetric
from .gap import ENUMERATION_BUDGET, IntegerGapReading, TensorArray, eta_gap, gamma_gap, gamma_gap_tensor
from .montecarlo import verify_construction
from .realizability import RealizabilityConfig, Status, check_covariance, check_moment, check_variogram

EXIT_OK, EXIT_REJECT, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3

_STATUS_EXIT = {
    Status.REALIZABLE: EXIT_OK,
    Status.NOT_REALIZABLE: EXIT_REJECT,
    Status.NECESSARY_PASSED: EXIT_INCONCLUSIVE,
    Status.UNKNOWN: EXIT_INCONCLUSIVE,
}


def _threads() -> int | None:
    raw = os.environ.get("CODOMAIN_GAP_THREADS")
    if raw is None:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        raise CovgapError("BAD_ENV", f"CODOMAIN_GAP_THREADS must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covgap", description="Realizability checks for moment functions of random fields.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-m", "--matrix", required=True, help="input matrix or tensor (JSON or CSV)")
    common.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=ENUMERATION_BUDGET, help="enumeration budget")
    common.add_argument("--gap-tol", type=float, default=DEFAULT_TOL.gap_tol)
    common.add_argument("--psd-tol", type=float, default=DEFAULT_TOL.psd_tol)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gap", parents=[common], help="gamma, eta or tensor gap of a test array")
    g.add_argument("-E", "--codomain", required=True)
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--eta", action="store_true", help="eta gap (variogram form)")
    mode.add_argument("--tensor", type=int, metavar="Q", help="gap of a Q-dimensional array")
    g.add_argument("--reading", choices=["componentwise", "lattice"], default="componentwise",
                   help="meaning of Z\\0 in n dimensions")

    c = sub.add_parser("check", parents=[common], help="classify a candidate moment function")
    c.add_argument("what", choices=["cov", "variogram", "moment"])
    c.add_argument("-E", "--codomain", required=True)
    c.add_argument("--random-tests", type=int, default=RealizabilityConfig.random_tests)

    k = sub.add_parser("construct", parents=[common], help="apply a realizable recipe")
    k.add_argument("recipe", choices=[r.value for r in Recipe])
    k.add_argument("-a", type=float, default=1.0, help="arcsin scale")
    k.add_argument("-e", "--eps", type=float, help="integer bump size")
    k.add_argument("-q", type=int, default=4, help="moment order")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of a recipe")
    s.add_argument("recipe", choices=[r.value for r in Recipe])
    s.add_argument("-N", "--samples", type=int, default=100_000)
    s.add_argument("-a", type=float, default=1.0)
    s.add_argument("-q", type=int, default=4)
    s.add_argument("--mc-sigmas", type=float, default=DEFAULT_TOL.mc_sigmas)

    sub.add_parser("hafnian", parents=[common], help="hafnian of a symmetric matrix")
    return p


def _tolerances(args) -> Tolerances:
    kw = {"gap_tol": args.gap_tol, "psd_tol": args.psd_tol}
    if getattr(args, "mc_sigmas", None) is not None:
        kw["mc_sigmas"] = args.mc_sigmas
    return Tolerances(**{**DEFAULT_TOL.to_dict(), **kw})


def _spec(args) -> ConstructionSpec:
    r = Recipe(args.recipe)
    params = {}
    if r is Recipe.ARCSIN:
        params["a"] = args.a
    elif r is Recipe.INTEGER_BUMP:
        if getattr(args, "eps", None) is None:
            raise CovgapError("MISSING_ARGUMENT", "integer_bump needs -e EPS")
        params["eps"] = args.eps
    elif r is Recipe.GAUSSIAN_MOMENT:
        params["q"] = args.q
    return ConstructionSpec(r, params)


def _run_gap(args, tol) -> tuple[dict, int]:
    E = parse_codomain(args.codomain)
    arr, labels, _ = load_array(args.matrix)
    if args.tensor:
        if arr.ndim != args.tensor:
            raise CovgapError("BAD_TENSOR", f"expected a {args.tensor}-dimensional array, got {arr.ndim}")
        res = gamma_gap_tensor(TensorArray(arr), E, args.budget)
    else:
        L = validate_symmetric(arr, MatrixKind.TEST, tol, labels=labels)
        if args.eta:
            res = eta_gap(L, E, tol, args.budget, seed=args.seed)
        else:
            reading = IntegerGapReading.LATTICE_NONZERO if args.reading == "lattice" else \
                IntegerGapReading.COMPONENTWISE_NONZERO
            res = gamma_gap(L, E, tol, args.budget, reading=reading, seed=args.seed)
    out = res.to_dict()
    return {"value": out.pop("value"), "gap": out}, EXIT_OK


def _run_check(args, tol) -> tuple[dict, int]:
    E = parse_codomain(args.codomain)
    config = RealizabilityConfig(tol=tol, seed=args.seed, enumeration_budget=args.budget,
                                 random_tests=args.random_tests)
    arr, labels, _ = load_array(args.matrix)
    if args.what == "cov":
        v = check_covariance(validate_symmetric(arr, MatrixKind.COVARIANCE, tol, labels=labels), E, config)
    elif args.what == "variogram":
        v = check_variogram(validate_symmetric(arr, MatrixKind.VARIOGRAM, tol, labels=labels), E, config)
    else:
        v = check_moment(arr, E, config)
    d = v.to_dict()
    d["engine_config"] = d.pop("config")
    return d, _STATUS_EXIT[v.status]


def _run_construct(args, tol) -> tuple[dict, int]:
    arr, labels, _ = load_array(args.matrix)
    spec = _spec(args)
    out = spec.apply(validate_symmetric(arr, MatrixKind.COVARIANCE, tol, labels=labels))
    entries = out.entries.tolist()
    return {"spec": spec.to_dict(), "value": entries, **({"labels": labels} if labels else {})}, EXIT_OK


def _run_simulate(args, tol) -> tuple[dict, int]:
    arr, labels, _ = load_array(args.matrix)
    C = validate_symmetric(arr, MatrixKind.COVARIANCE, tol, labels=labels)
    rep = verify_construction(_spec(args), C, args.samples, args.seed, tol)
    d = rep.to_dict()
    return d, EXIT_OK if rep.passed else EXIT_REJECT


def _run_hafnian(args, tol) -> tuple[dict, int]:
    arr, labels, _ = load_array(args.matrix)
    S = validate_symmetric(arr, MatrixKind.GENERIC, tol, labels=labels)
    return {"value": hafnian(S)}, EXIT_OK


_RUNNERS = {
    "gap": _run_gap,
    "check": _run_check,
    "construct": _run_construct,
    "simulate": _run_simulate,
    "hafnian": _run_hafnian,
}


def _resolved_config(args, tol: Tolerances) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("command",)}
    cfg["tolerances"] = tol.to_dict()
    cfg["threads"] = _threads()
    return cfg


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    t0 = time.perf_counter()
    try:
        tol = _tolerances(args)
        config = _resolved_config(args, tol)
        body, code = _RUNNERS[args.command](args, tol)
    except (CovgapError, OSError) as exc:
        print(f"covgap: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {"command": args.command, "config": config, **body,
              "timing_ms": round((time.perf_counter() - t0) * 1000, 3)}
    text = json.dumps(report, indent=2, default=_default)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
