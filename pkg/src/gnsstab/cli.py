"""Command-line entry point: ``gnsstab <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import gridfn
from .asymmetry import AffineRestriction, SearchConfig, relative_asymmetry
from .errors import GnsError, NumericalFailure
from .gnscore import GnsParams, deficit, make_params
from .harness import FAMILIES, fit_scan, read_scan_csv, records_to_csv, run_scan
from .radialopt import OptimizerModel, minimize_radial
from .rearrange import schwarz_rearrange
from .symmetrize import AsymmetryOracle, full_reduction, is_n_symmetric, median_offset, reflect_halves

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class CliError(Exception):
    pass


def parse_params(text: str) -> GnsParams:
    parts = [x.strip() for x in text.split(",")]
    if len(parts) != 4:
        raise CliError(f"--params expects n,p,s,q; got {text!r}")
    try:
        n = int(parts[0])
        p, s, q = (float(x) for x in parts[1:])
    except ValueError:
        raise CliError(f"--params expects numbers; got {text!r}") from None
    return make_params(n, p, s, q)


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2, default=float)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


def _load_model(args, params: GnsParams | None) -> OptimizerModel:
    if not args.model:
        raise CliError("--model is required")
    model = OptimizerModel.load(args.model)
    if params is not None and model.params.tuple != params.tuple:
        raise CliError(f"model was solved for {model.params.tuple}, not {params.tuple}")
    return model


def _search_cfg(args) -> SearchConfig:
    if getattr(args, "search_config", None):
        cfg = SearchConfig.load(args.search_config)
        return SearchConfig(**{**asdict(cfg), "seed": args.seed})
    return SearchConfig(seed=args.seed)


def _params_or_model(args) -> tuple[GnsParams, OptimizerModel | None]:
    params = parse_params(args.params) if args.params else None
    model = _load_model(args, params) if args.model else None
    if params is None:
        if model is None:
            raise CliError("give --params or --model")
        params = model.params
    return params, model


# -- subcommands ---------------------------------------------------------------


def cmd_constant(args) -> int:
    if not args.params:
        raise CliError("--params is required")
    params = parse_params(args.params)
    sol = minimize_radial(params, resolution=args.resolution or 2048, r_max=args.r_max, budget=args.budget, seed=args.seed)
    model = OptimizerModel.from_solution(params, sol, args.seed)
    if args.out:
        model.save(args.out)
    _emit(
        {
            "G_est": sol.G_est,
            "G_direct": sol.G_direct,
            "F_min": sol.F_min,
            "eta0": params.eta0,
            "k": params.k_exp,
            "iterations": sol.iterations,
            "converged": sol.converged,
            "stagnated": sol.stagnated,
        }
    )
    return EXIT_OK


def _input(args) -> gridfn.GridFunction:
    if not args.input:
        raise CliError("--input is required")
    return gridfn.read_gfn(args.input)


def cmd_deficit(args) -> int:
    params, model = _params_or_model(args)
    G = args.G if args.G is not None else (model.G_est if model else None)
    if G is None:
        raise CliError("give --model or --G for the optimal constant")
    _emit(asdict(deficit(_input(args), params, G)), args.out)
    return EXIT_OK


def cmd_asymmetry(args) -> int:
    params, model = _params_or_model(args)
    if model is None:
        raise CliError("--model is required")
    fixed = {}
    for item in args.fix or []:
        axis, _, value = item.partition("=")
        try:
            fixed[int(axis)] = float(value)
        except ValueError:
            raise CliError(f"--fix expects AXIS=VALUE, got {item!r}") from None
    res = relative_asymmetry(_input(args), AffineRestriction(fixed), params, model, _search_cfg(args))
    _emit(
        {
            "lambda": res.lambda_value,
            "a": res.witness.a,
            "b": res.witness.b,
            "x0": list(res.witness.x0),
            "constraint_residual": res.constraint_residual,
            "restarts_used": res.restarts_used,
            "converged": res.converged,
            "at_box_boundary": res.at_box_boundary,
        },
        None,
    )
    return EXIT_OK


def cmd_rearrange(args) -> int:
    u = _input(args)
    p = parse_params(args.params).p if args.params else 2.0
    res = schwarz_rearrange(u, p)
    if args.out:
        gridfn.write_gfn(res.u_star, args.out)
    _emit({"checksum": res.value_permutation_checksum, "ps_deficit": res.ps_deficit, "p": p})
    return EXIT_OK


def cmd_symmetrize(args) -> int:
    u = _input(args)
    q = parse_params(args.params).q if args.params else 2.0
    c = median_offset(u, args.axis, q) if args.offset is None else args.offset
    split = reflect_halves(u, args.axis, c, q)
    if args.out:
        gridfn.write_gfn(split.u_plus, f"{args.out}.plus.gfn")
        gridfn.write_gfn(split.u_minus, f"{args.out}.minus.gfn")
    _emit({"axis": args.axis, "offset": c, "mass_plus": split.mass_plus, "mass_minus": split.mass_minus})
    return EXIT_OK


def cmd_reduce(args) -> int:
    params, model = _params_or_model(args)
    if model is None:
        raise CliError("--model is required")
    u = _input(args)
    if np.any(u.values < 0):
        raise CliError("reduce needs a nonnegative input; pass its absolute value instead")
    trace = full_reduction(u, params, AsymmetryOracle(params, model, _search_cfg(args)))
    if args.out:
        gridfn.write_gfn(trace.final, args.out)
    if args.trace:
        trace.write_csv(args.trace)
    sys.stdout.write(trace.to_csv_text())
    print(f"n_symmetric={is_n_symmetric(trace.final)}", file=sys.stderr)
    return EXIT_OK


def cmd_scan(args) -> int:
    model = _load_model(args, parse_params(args.params) if args.params else None)
    if args.eps:
        eps = parse_floats(args.eps)
    else:
        lo, hi, count = parse_floats(args.eps_grid)
        eps = [0.0] + list(np.geomspace(lo, hi, int(count)))
    custom = gridfn.read_gfn(args.w_input) if args.w_input else None
    family = "custom" if custom is not None and args.family is None else (args.family or "radial-bump")
    records, problems = run_scan(
        family,
        eps,
        model,
        cells=args.resolution or 128,
        half_width=args.half_width,
        cfg=_search_cfg(args),
        reference=args.reference,
        custom=custom,
        workers=args.workers,
    )
    for msg in problems:
        print(f"skipped row: {msg}", file=sys.stderr)
    text = records_to_csv(records)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_fit(args) -> int:
    res = fit_scan(read_scan_csv(_required(args.input, "--input")), args.threshold, args.floor)
    _emit(asdict(res), args.out)
    return EXIT_OK


def _required(value, flag):
    if not value:
        raise CliError(f"{flag} is required")
    return value


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="exponent tuple n,p,s,q")
    common.add_argument("--model", help="optimizer model JSON")
    common.add_argument("--input", help="input file (.gfn, or .csv for fit)")
    common.add_argument("--out", help="output path")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--resolution", type=int, help="radial nodes (constant) or cells per axis (scan)")
    common.add_argument("--search-config", help="asymmetry search config JSON")

    parser = argparse.ArgumentParser(prog="gnsstab", description="Stability experiments for GNS inequalities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constant", parents=[common], help="solve for the optimal constant")
    p.add_argument("--r-max", type=float, default=20.0)
    p.add_argument("--budget", type=int, default=2000)
    p.set_defaults(func=cmd_constant)

    p = sub.add_parser("deficit", parents=[common], help="deficit of a grid function")
    p.add_argument("--G", type=float, help="optimal constant (overrides the model)")
    p.set_defaults(func=cmd_deficit)

    p = sub.add_parser("asymmetry", parents=[common], help="distance to the optimizer orbit")
    p.add_argument("--fix", action="append", metavar="AXIS=VALUE", help="pin a center coordinate")
    p.set_defaults(func=cmd_asymmetry)

    p = sub.add_parser("rearrange", parents=[common], help="spherical decreasing rearrangement")
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("symmetrize", parents=[common], help="median split and reflected halves")
    p.add_argument("--axis", type=int, default=0)
    p.add_argument("--offset", type=float, help="cut position (default: median)")
    p.set_defaults(func=cmd_symmetrize)

    p = sub.add_parser("reduce", parents=[common], help="full reduction to an n-symmetric function")
    p.add_argument("--trace", help="trace CSV path")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("scan", parents=[common], help="perturbation scan around the optimizer")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--eps", help="comma-separated eps values")
    p.add_argument("--eps-grid", default="0.002,0.3,9", help="LO,HI,COUNT geometric grid plus eps=0")
    p.add_argument("--half-width", type=float, default=6.0)
    p.add_argument("--reference", choices=("model", "grid"), default="model")
    p.add_argument("--w-input", help="GFN direction for the custom family")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("fit", parents=[common], help="fit log lambda against log delta")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--floor", type=float)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CliError, GnsError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
