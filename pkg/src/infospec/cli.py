"""Command-line front end.

Exit codes: 0 ok, 2 input error, 3 property failure, 4 resource cap.
"""
import argparse
import math
import sys
from importlib import resources

import numpy as np

from . import __version__
from .classical import FiniteMeasure, classical_psi, iid_spectrum, kl_divergence
from .errors import DomainError, EigenError, InputError, PropertyFailure, SizeError
from .exponents import (
    B_e_from_rates,
    B_e_star_from_rates,
    B_e_star_star,
    han_formula_check,
    han_kobayashi_exponent,
    hoeffding_exponent,
    quantum_hoeffding_lower_bound,
)
from .io import csv_text, json_text, load_input, spectrum_rows, write_text
from .operators import DEFAULT_BRUTE_CAP, as_density
from .quantum import MODES, BruteForceOracle, QuantumPsi, quantum_relative_entropy
from .rates import cramer_rates, stein_report
from .schur import g_curve
from .selftest import report, run_selftest
from .source import R_e, R_e_star, finite_n_rate, sigma_rate_tables

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY, EXIT_CAP = 0, 2, 3, 4
EXPONENT_KINDS = (
    "hoeffding",
    "han-kobayashi",
    "quantum-hoeffding",
    "b-e-rates",
    "b-e-star-rates",
    "b-e-star-star",
    "han-check",
)


def _sample(name):
    return str(resources.files("infospec").joinpath("data", name))


def _int_list(text):
    try:
        out = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("block lengths must be positive")
    return out


def _float_list(text):
    try:
        out = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not out:
        raise argparse.ArgumentTypeError("list is empty")
    return out


def _grid(lo, hi, points):
    if points < 1:
        raise InputError("grid needs at least one point")
    if points > 1 and not hi > lo:
        raise InputError("grid maximum must exceed its minimum")
    return np.linspace(lo, hi, points) if points > 1 else np.array([lo])


def build_parser():
    p = argparse.ArgumentParser(prog="infospec", description="Information-spectrum hypothesis testing.")
    p.add_argument("--version", action="version", version=f"infospec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_default="5"):
        sp.add_argument("--input-rho", help="JSON operator or measure (default: bundled example)")
        sp.add_argument("--input-sigma", help="JSON operator or measure (default: bundled example)")
        sp.add_argument("--n", type=_int_list, default=_int_list(n_default), help="comma-separated block lengths")
        sp.add_argument("--a-min", type=float, default=0.0)
        sp.add_argument("--a-max", type=float, default=0.8)
        sp.add_argument("--a-points", type=int, default=161)
        sp.add_argument("--mode", choices=MODES, default="strict")
        sp.add_argument("--cap", type=int, default=DEFAULT_BRUTE_CAP, help="largest brute-force dimension")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default="-", help="output path ('-' for stdout)")

    sp = sub.add_parser("gcurve", help="g_n(a), alpha, beta rows")
    common(sp, "5,15,50")
    sp.add_argument("--oracle", action="store_true", help="add a brute-force comparison column")

    sp = sub.add_parser("divergence", help="relative entropy of the input pair")
    common(sp)

    sp = sub.add_parser("spectrum", help="exact i.i.d. log-likelihood spectrum of a classical pair")
    common(sp)

    sp = sub.add_parser("psi", help="psi(theta) on a theta grid")
    common(sp)
    sp.add_argument("--theta-min", type=float, default=-1.0)
    sp.add_argument("--theta-max", type=float, default=1.0)
    sp.add_argument("--theta-points", type=int, default=201)

    sp = sub.add_parser("stein", help="finite-n Stein thresholds")
    common(sp, "5,15,50")
    sp.add_argument("--epsilon", type=float, default=0.5)

    sp = sub.add_parser("exponent", help="error exponent tables over r")
    common(sp)
    sp.add_argument("--kind", choices=EXPONENT_KINDS, default="hoeffding")
    sp.add_argument("--r", type=_float_list, default=_float_list("0,0.05,0.1,0.2,0.3"))
    sp.add_argument("--theta-points", type=int, default=64)

    sp = sub.add_parser("source", help="source-coding rates and exponents")
    common(sp)
    sp.add_argument("--table", choices=("exponents", "rates"), default="exponents")
    sp.add_argument("--r", type=_float_list, default=_float_list("0,0.05,0.1,0.2"))
    sp.add_argument("--epsilon", type=_float_list, default=_float_list("0.1"))

    sp = sub.add_parser("selftest", help="seeded property suite")
    sp.add_argument("--seed", type=int, default=0, help="64-bit seed (recorded in the report)")
    sp.add_argument("--cap", type=int, default=DEFAULT_BRUTE_CAP)
    sp.add_argument("--corrupt", action="store_true", help="perturb the Schur blocks to exercise the harness")
    sp.add_argument("--full", action="store_true", help="run the full-size suite")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--out", default="-")
    return p


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "threads")}


def _pair(args, classical_default=False):
    if classical_default:
        rho_path = args.input_rho or _sample("coin_fair.json")
        sigma_path = args.input_sigma or _sample("coin_biased.json")
    else:
        rho_path = args.input_rho or _sample("example_rho.json")
        sigma_path = args.input_sigma or _sample("example_sigma.json")
    rho, sigma = load_input(rho_path), load_input(sigma_path)
    if isinstance(rho, FiniteMeasure) != isinstance(sigma, FiniteMeasure):
        raise InputError("rho and sigma must both be measures or both be operators")
    if not isinstance(rho, FiniteMeasure):
        if rho.shape != sigma.shape:
            raise InputError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
        rho = as_density(rho)
    return rho, sigma


def _a_grid(args):
    return _grid(args.a_min, args.a_max, args.a_points)


def cmd_gcurve(args):
    rho, sigma = _pair(args)
    if isinstance(rho, FiniteMeasure):
        raise InputError("gcurve needs operators")
    grid = _a_grid(args)
    header = ["n", "a", "g", "alpha", "beta", "log10_beta"] + (["g_bruteforce"] if args.oracle else [])
    rows = []
    if rho.shape == (2, 2):
        curve = g_curve(rho, sigma, args.n, grid, args.mode, threads=args.threads)
        rows = [[r.n, r.a, r.g, r.alpha, r.beta, r.log10_beta] for r in curve]
    else:
        for n in sorted(set(args.n)):
            if rho.shape[0] ** n > args.cap:
                raise SizeError(
                    f"fast path requires dim 2; dim {rho.shape[0]} at n={n} exceeds the brute-force cap {args.cap}"
                )
            oracle = BruteForceOracle(rho, sigma, n, cap=args.cap)
            for a in grid:
                r = oracle.evaluate(float(a), (args.mode,))[args.mode]
                beta = r.evaluation.beta
                rows.append([n, float(a), r.g, r.evaluation.alpha, beta, math.log10(beta) if beta > 0 else -math.inf])
    if args.oracle:
        cache = {}
        for row in rows:
            n = row[0]
            if n not in cache:
                cache[n] = BruteForceOracle(rho, sigma, n, cap=args.cap)
            row.append(cache[n].evaluate(row[1], (args.mode,))[args.mode].g)
    return csv_text(header, rows, _config(args))


def cmd_divergence(args):
    rho, sigma = _pair(args)
    if isinstance(rho, FiniteMeasure):
        value, kind = kl_divergence(rho, sigma), "classical"
    else:
        value, kind = quantum_relative_entropy(rho, sigma), "quantum"
    return json_text({"divergence": value, "kind": kind}, _config(args))


def cmd_spectrum(args):
    rho, sigma = _pair(args, classical_default=True)
    if not isinstance(rho, FiniteMeasure):
        raise InputError("spectrum needs classical measures")
    rows = []
    for n in sorted(set(args.n)):
        rows.extend(spectrum_rows(iid_spectrum(rho, sigma, n)))
    return csv_text(["n", "z", "rho_mass", "sigma_mass"], rows, _config(args))


def cmd_psi(args):
    rho, sigma = _pair(args)
    if isinstance(rho, FiniteMeasure):
        psi = lambda t: classical_psi(rho, sigma, t)  # noqa: E731
    else:
        psi = QuantumPsi(rho, sigma)
    thetas = _grid(args.theta_min, args.theta_max, args.theta_points)
    return csv_text(["theta", "psi"], [(float(t), psi(float(t))) for t in thetas], _config(args))


def cmd_stein(args):
    if not 0.0 <= args.epsilon <= 1.0:
        raise InputError("epsilon must lie in [0, 1]")
    rho, sigma = _pair(args)
    rep = stein_report((rho, sigma), args.epsilon, args.n, _a_grid(args), cap=args.cap)
    body = {
        "epsilon": rep.epsilon,
        "D_lower_estimate": rep.D_lower_estimate,
        "D_upper_estimate": rep.D_upper_estimate,
        "strong_converse_gap": rep.strong_converse_gap,
        "resolution": rep.resolution,
        "target": rep.target,
        "degenerate": rep.degenerate,
        "flags": list(rep.flags),
        "per_n_thresholds": [
            {"n": r.n, "threshold": r.threshold, "threshold_strict": r.threshold_strict} for r in rep.per_n_thresholds
        ],
    }
    return json_text(body, _config(args))


def cmd_exponent(args):
    if args.theta_points < 64:
        raise InputError("theta grid needs at least 64 points")
    rho, sigma = _pair(args, classical_default=args.kind != "quantum-hoeffding")
    kind = args.kind
    if kind == "quantum-hoeffding":
        if isinstance(rho, FiniteMeasure):
            rho, sigma = np.diag(rho.weights), np.diag(sigma.weights)
        results = [(r, quantum_hoeffding_lower_bound(rho, sigma, r)) for r in args.r]
    else:
        if not isinstance(rho, FiniteMeasure):
            raise InputError(f"{kind} needs classical measures")
        if kind in ("hoeffding", "han-kobayashi"):
            fn = hoeffding_exponent if kind == "hoeffding" else han_kobayashi_exponent
            results = [(r, fn(rho, sigma, r)) for r in args.r]
        else:
            eta, zeta, zeta_c = cramer_rates(rho, sigma, _a_grid(args))
            if kind == "han-check":
                rows = [{"r": r, **han_formula_check(eta, zeta_c, r).as_dict()} for r in args.r]
                return json_text({"han_formula_check": rows}, _config(args))
            if kind == "b-e-rates":
                results = [(r, B_e_from_rates(eta, zeta, r)) for r in args.r]
            elif kind == "b-e-star-rates":
                results = [(r, B_e_star_from_rates(zeta_c, r)) for r in args.r]
            else:
                results = [(r, B_e_star_star(zeta_c, r)) for r in args.r]
    rows = [(r, res.value, res.optimizer, res.method) for r, res in results]
    return csv_text(["r", "value", "optimizer", "method"], rows, _config(args))


def cmd_source(args):
    P = load_input(args.input_rho or _sample("source_07.json"))
    if not isinstance(P, FiniteMeasure):
        raise InputError("source needs a measure")
    if args.table == "rates":
        rows = [(e, n, finite_n_rate(P, e, n)) for e in args.epsilon for n in sorted(set(args.n))]
        return csv_text(["epsilon", "n", "rate"], rows, _config(args))
    lower, star = sigma_rate_tables(P)
    rows = []
    for r in args.r:
        re = R_e(P, r, lower=lower).value if r > 0 else math.nan
        rows.append((r, re, R_e_star(P, r, star=star).value))
    return csv_text(["r", "R_e", "R_e_star"], rows, _config(args))


def cmd_selftest(args):
    if not 0 <= args.seed < 2**64:
        raise InputError("seed must be a 64-bit unsigned integer")
    results = run_selftest(args.seed, corrupt=args.corrupt, cap=args.cap, fuzz_trials=args.trials, quick=not args.full)
    rep = report(results, _config(args))
    for r in rep["properties"]:
        r.pop("seconds", None)
    return json_text(rep, _config(args)), rep["passed"]


COMMANDS = {
    "gcurve": cmd_gcurve,
    "divergence": cmd_divergence,
    "spectrum": cmd_spectrum,
    "psi": cmd_psi,
    "stein": cmd_stein,
    "exponent": cmd_exponent,
    "source": cmd_source,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "selftest":
            text, passed = cmd_selftest(args)
            write_text(args.out, text)
            if not passed:
                print("selftest: property failure", file=sys.stderr)
                return EXIT_PROPERTY
            return EXIT_OK
        write_text(args.out, COMMANDS[args.command](args))
        return EXIT_OK
    except (InputError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PropertyFailure as exc:
        print(f"property failure: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except SizeError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except EigenError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":
    raise SystemExit(main())
