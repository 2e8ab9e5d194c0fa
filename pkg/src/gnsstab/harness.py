"""Perturbation scans around the optimizer and power-law fits of their output.

A scan evaluates ``u_eps = (v + eps * w) / ||v + eps * w||_q`` for a fixed
optimizer ``v`` embedded on a grid and a direction ``w`` taken from a named
family (``v_s(x) = v(x / s)`` below):

``radial-bump``  ``w(x) = exp(-(|x| - 2)^2)``, a ring in the radial profile
``translate``    ``w = v(x - e_1) - v(x)``
``dilate``       ``w = v_{1.5} - v``
``two-bump``     ``w = v(x - 3 e_1)``
``sign-flip``    ``w = -v(x - 3 e_1)``
``custom``       ``w`` read from a GFN file on the same grid

Each row records the deficit, the asymmetry, the Polya-Szego deficit and the
boundary-mass diagnostic.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import gridfn
from .asymmetry import SearchConfig, asymmetry
from .errors import GnsError, ParameterError, PreconditionError
from .gnscore import GnsParams, deficit, functional_G
from .gridfn import GridFunction
from .radialopt import OptimizerModel, eval_witness
from .rearrange import ps_deficit

FAMILIES = ("radial-bump", "translate", "dilate", "two-bump", "sign-flip", "custom")
SCAN_HEADER = ["eps", "delta", "lambda", "delta_ps", "boundary_mass"]


@dataclass(frozen=True)
class ScanRecord:
    eps: float
    delta: float
    lambda_value: float
    delta_ps: float
    boundary_mass: float

    def __post_init__(self):
        if not self.eps >= 0:
            raise ParameterError(f"eps must be nonnegative, got {self.eps}")
        if not all(math.isfinite(x) for x in astuple(self)):
            raise ParameterError(f"scan record has non-finite fields: {self}")


@dataclass(frozen=True)
class FitResult:
    """Least-squares line ``log lambda = alpha_hat * log delta + intercept``.

    ``alpha_hat`` is the slope, so exact data ``lambda = delta^2`` gives 2.
    ``exponent`` is its reciprocal, the power ``alpha`` in
    ``delta >= kappa * lambda^alpha``.
    """

    alpha_hat: float
    intercept: float
    r_squared: float
    points_used: int
    exponent: float

    def __post_init__(self):
        if self.points_used < 3:
            raise ParameterError("a fit needs at least 3 points")


def direction(family: str, v: GridFunction, model: OptimizerModel, custom: GridFunction | None = None) -> GridFunction:
    """The perturbation direction ``w`` of a named family on ``v``'s grid."""
    n = v.dim
    e1 = np.zeros(n)
    if family == "radial-bump":
        return v.with_values(np.exp(-((np.sqrt(v.radius_squared()) - 2.0) ** 2)))
    if family == "translate":
        e1[0] = 1.0
        return eval_witness(model.witness(x0=e1), v) - v
    if family == "dilate":
        return eval_witness(model.witness(b=1 / 1.5), v) - v
    if family in ("two-bump", "sign-flip"):
        e1[0] = 3.0
        far = eval_witness(model.witness(x0=e1), v)
        return far if family == "two-bump" else -far
    if family == "custom":
        if custom is None:
            raise ParameterError("the custom family needs a GFN direction")
        if not custom.same_geometry(v):
            raise ParameterError("custom direction lives on a different grid")
        return custom
    raise ParameterError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def embedded_optimizer(model: OptimizerModel, cells: int, half_width: float) -> GridFunction:
    template = GridFunction.on_box((cells,) * model.params.n, half_width)
    return eval_witness(model.witness(), template)


def reference_constant(model: OptimizerModel, v: GridFunction, reference: str) -> float:
    """Constant used in deficits: the model's ``G_est`` or the grid quotient of ``v``.

    ``"grid"`` divides out the finite-difference error of the grid, so the
    embedded optimizer has deficit 0 exactly on that grid.
    """
    if reference == "model":
        return model.G_est
    if reference == "grid":
        return functional_G(v, model.params) / gridfn.lr_norm(v, model.params.q)
    raise ParameterError(f"reference must be 'model' or 'grid', got {reference!r}")


def perturbed(v: GridFunction, w: GridFunction, eps: float, q: float) -> GridFunction:
    u = v + w * eps
    norm = gridfn.lr_norm(u, q)
    if norm == 0:
        raise PreconditionError(f"perturbation cancels the optimizer at eps={eps}")
    return u * (1.0 / norm)


def scan_row(
    eps: float, v: GridFunction, w: GridFunction, model: OptimizerModel, G_ref: float, cfg: SearchConfig
) -> ScanRecord:
    params = model.params
    u = perturbed(v, w, eps, params.q)
    return ScanRecord(
        eps=float(eps),
        delta=deficit(u, params, G_ref).delta,
        lambda_value=asymmetry(u, params, model, cfg).lambda_value,
        delta_ps=ps_deficit(u, params),
        boundary_mass=gridfn.boundary_mass_fraction(u, params.q),
    )


def _row_job(args):
    try:
        return scan_row(*args), None
    except (GnsError, ValueError, ArithmeticError) as exc:
        return None, f"eps={args[0]!r}: {exc}"


def run_scan(
    family: str,
    eps_grid: Sequence[float],
    model: OptimizerModel,
    cells: int = 128,
    half_width: float = 6.0,
    cfg: SearchConfig | None = None,
    reference: str = "model",
    custom: GridFunction | None = None,
    workers: int = 1,
) -> tuple[list[ScanRecord], list[str]]:
    """One record per ``eps`` in increasing order, plus diagnostics for skipped rows."""
    cfg = cfg or SearchConfig()
    eps_sorted = sorted(float(e) for e in eps_grid)
    if any(e < 0 for e in eps_sorted):
        raise ParameterError("eps values must be nonnegative")
    v = embedded_optimizer(model, cells, half_width) if custom is None else eval_witness(model.witness(), custom)
    w = direction(family, v, model, custom)
    G_ref = reference_constant(model, v, reference)
    jobs = [(e, v, w, model, G_ref, cfg) for e in eps_sorted]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_row_job, jobs))
    else:
        results = [_row_job(job) for job in jobs]
    records = [r for r, _ in results if r is not None]
    problems = [msg for _, msg in results if msg is not None]
    return records, problems


def records_to_csv(records: Sequence[ScanRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_HEADER)
    for r in records:
        writer.writerow([repr(float(x)) for x in astuple(r)])
    return buf.getvalue()


def read_scan_csv(path: str | Path) -> list[ScanRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCAN_HEADER:
            raise ParameterError(f"unexpected scan header {header}")
        names = [f.name for f in fields(ScanRecord)]
        return [ScanRecord(**dict(zip(names, map(float, row)))) for row in reader if row]


def fit_scan(records: Sequence[ScanRecord], delta_threshold: float = 0.05, floor: float | None = None) -> FitResult:
    """Fit ``log lambda`` against ``log delta`` on the small-deficit rows.

    Rows must satisfy ``floor < delta < delta_threshold`` and ``lambda > 0``.
    By default the floor is ten times the magnitude of the deficit in an
    ``eps = 0`` row, which measures the grid's own error.
    """
    if floor is None:
        zero = [abs(r.delta) for r in records if r.eps == 0]
        floor = 10 * max(zero) if zero else 0.0
    pts = [(r.delta, r.lambda_value) for r in records if floor < r.delta < delta_threshold and r.lambda_value > 0]
    if len(pts) < 3:
        raise ParameterError(f"need at least 3 usable rows, found {len(pts)}")
    x = np.log([d for d, _ in pts])
    y = np.log([lam for _, lam in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, len(pts), float(1 / slope) if slope != 0 else math.inf)

