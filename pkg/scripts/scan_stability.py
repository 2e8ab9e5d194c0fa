"""Perturbation scan around the optimizer at two grid sizes, with power-law fits.

    python3 scripts/scan_stability.py 2,1.5,1.5,3 --family radial-bump --cells 128,256
"""

import argparse

import numpy as np

from gnsstab.cli import parse_floats, parse_params
from gnsstab.harness import FAMILIES, fit_scan, records_to_csv, run_scan
from gnsstab.errors import ParameterError
from gnsstab.radialopt import OptimizerModel, minimize_radial


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("params", help="n,p,s,q")
    ap.add_argument("--family", choices=FAMILIES[:-1], default="radial-bump")
    ap.add_argument("--cells", default="128,256")
    ap.add_argument("--half-width", type=float, default=6.0)
    ap.add_argument("--reference", choices=("model", "grid"), default="grid")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    params = parse_params(args.params)
    model = OptimizerModel.from_solution(params, minimize_radial(params), 0)
    eps = [0.0] + list(np.geomspace(0.002, 0.3, 9))
    for cells in (int(c) for c in parse_floats(args.cells)):
        records, problems = run_scan(
            args.family, eps, model, cells=cells, half_width=args.half_width, reference=args.reference, workers=args.workers
        )
        print(f"# {args.family} on {cells}^{params.n} cells")
        print(records_to_csv(records), end="")
        for msg in problems:
            print(f"# skipped {msg}")
        try:
            fit = fit_scan(records)
            print(f"# alpha_hat={fit.alpha_hat:.4f} exponent={fit.exponent:.4f} r2={fit.r_squared:.5f} points={fit.points_used}")
        except ParameterError as exc:
            print(f"# no fit: {exc}")


if __name__ == "__main__":
    main()
