"""Solve the radial problem for a parameter tuple at several resolutions.

    python3 scripts/compute_constant.py 3,2,2,4 --resolutions 1024,2048,4096
"""

import argparse

from gnsstab.cli import parse_floats, parse_params
from gnsstab.radialopt import OptimizerModel, minimize_radial


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("params", help="n,p,s,q")
    ap.add_argument("--resolutions", default="1024,2048,4096")
    ap.add_argument("--r-max", type=float, default=20.0)
    ap.add_argument("--save", help="write the finest model to this JSON path")
    args = ap.parse_args()

    params = parse_params(args.params)
    print("resolution,G_est,G_direct,F_min,iterations,converged")
    sol = None
    for res in (int(r) for r in parse_floats(args.resolutions)):
        sol = minimize_radial(params, resolution=res, r_max=args.r_max)
        print(f"{res},{sol.G_est!r},{sol.G_direct!r},{sol.F_min!r},{sol.iterations},{sol.converged}")
    if args.save and sol is not None:
        OptimizerModel.from_solution(params, sol, 0).save(args.save)


if __name__ == "__main__":
    main()
