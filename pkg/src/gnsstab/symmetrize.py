"""Reflection symmetrization: median splits, reflected halves and the full reduction.

A nonnegative function is made symmetric one axis at a time. Along each of
the first ``n - 1`` axes the |u|^q-mass is cut in half by a median
hyperplane, each half is mirrored onto the other side, and the mirrored copy
with the larger asymmetry is kept. The last axis is handled together with
axis 0 by the two diagonal reflections, which leaves a function symmetric
with respect to ``n`` mutually orthogonal hyperplanes.

Medians are snapped to the nearest cell-layer boundary and the function is
shifted by whole cells so the cut sits at 0; every reflection is then an
exact permutation of cells.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import gridfn
from .errors import DomainError, PreconditionError, ShapeError
from .gnscore import GnsParams, deficit
from .asymmetry import SearchConfig, asymmetry
from .gridfn import GridFunction, Hyperplane
from .radialopt import OptimizerModel

AsymOracle = Callable[[GridFunction], float]

TRACE_HEADER = ["stage", "label", "axis", "chosen_half", "delta", "lambda", "snap_residual"]


# -- medians -------------------------------------------------------------------


def layer_masses(u: GridFunction, axis: int, q: float) -> np.ndarray:
    """``int |u|^q`` over each cell layer orthogonal to ``axis``."""
    others = tuple(k for k in range(u.dim) if k != axis)
    return np.sum(np.abs(u.values) ** q, axis=others) * u.cell_volume


def _imbalance(masses: np.ndarray) -> np.ndarray:
    """Mass below minus mass above, at each of the ``N + 1`` layer boundaries.

    Both sums accumulate from the outside in, so an even layer profile gives
    exactly 0 at the middle boundary.
    """
    below = np.concatenate([[0.0], np.cumsum(masses)])
    above = np.concatenate([np.cumsum(masses[::-1])[::-1], [0.0]])
    return below - above


def median_offset(u: GridFunction, axis: int, q: float) -> float:
    """Coordinate ``c`` with half of ``int |u|^q`` on each side of ``{x_axis = c}``.

    Linear interpolation between layer boundaries.
    """
    c, _ = median_with_imbalance(u, axis, q)
    return c


def median_with_imbalance(u: GridFunction, axis: int, q: float) -> tuple[float, float]:
    """Median coordinate and the relative mass imbalance at the nearest layer boundary."""
    masses = layer_masses(u, axis, q)
    total = masses.sum()
    if total == 0:
        raise DomainError("median is undefined for a function with zero q-mass")
    D = _imbalance(masses)
    m, h = u.shape[axis], u.spacing[axis]
    j = int(np.searchsorted(D, 0.0, side="left"))
    if D[j] == 0 or j == 0:
        c = (j - m // 2) * h
    else:
        c = (j - 1 - m // 2) * h + h * (-D[j - 1]) / (D[j] - D[j - 1])
    nearest = int(np.clip(round(c / h) + m // 2, 0, m))
    return float(c), float(abs(D[nearest]) / total)


def snap_to_layer(u: GridFunction, axis: int, c: float) -> tuple[int, float]:
    """Nearest layer boundary ``k * h`` to ``c``: returns ``(k, c - k * h)``."""
    h = u.spacing[axis]
    k = int(round(c / h))
    return k, float(c - k * h)


def center_axis(u: GridFunction, axis: int, q: float) -> tuple[GridFunction, float]:
    """Shift ``u`` by whole cells so its snapped median on ``axis`` sits at 0."""
    k, residual = snap_to_layer(u, axis, median_offset(u, axis, q))
    shift = [-k if a == axis else 0 for a in range(u.dim)]
    return gridfn.translate_cells(u, shift), residual


# -- reflected halves ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HalfSpaceSplit:
    axis: int
    offset: float
    u_plus: GridFunction
    u_minus: GridFunction
    mass_plus: float
    mass_minus: float

    def layer_tolerance(self, u: GridFunction, p: float, width: int = 2) -> float:
        """Gradient energy within ``width`` layers of the cut, for ``u`` and both halves.

        The finite-difference stencil straddles the cut, so this is the
        budget by which the averaging identities may fail on a grid.
        """
        x = np.broadcast_to(u.mesh()[self.axis], u.shape)
        near = np.abs(x - self.offset) < width * u.spacing[self.axis]
        total = 0.0
        for w in (u, self.u_plus, self.u_minus):
            total += u.integral(np.where(near, gridfn.grad_magnitude(w) ** p, 0.0))
        return total


def reflect_halves(u: GridFunction, axis: int, c: float, q: float = 2.0) -> HalfSpaceSplit:
    """Mirror each side of ``{x_axis = c}`` onto the other.

    ``u_plus`` keeps ``u`` above the cut and its mirror image below;
    ``u_minus`` keeps ``u`` below the cut and mirrors it upward. The q-masses
    of the two sides of ``u`` are returned alongside.
    """
    mirrored = gridfn.reflect(u, Hyperplane.axis_plane(axis, c))
    above = np.broadcast_to(u.mesh()[axis] > c, u.shape)
    dens = np.abs(u.values) ** q
    return HalfSpaceSplit(
        axis=axis,
        offset=float(c),
        u_plus=u.with_values(np.where(above, u.values, mirrored.values)),
        u_minus=u.with_values(np.where(above, mirrored.values, u.values)),
        mass_plus=u.integral(np.where(above, dens, 0.0)),
        mass_minus=u.integral(np.where(above, 0.0, dens)),
    )


# -- diagonal stage --------------------------------------------------------------


def _half_offsets(u: GridFunction, axis: int) -> np.ndarray:
    """Cell centers along ``axis`` in units of half a cell (odd integers)."""
    m = u.shape[axis]
    off = 2 * np.arange(m) - m + 1
    return off.reshape([-1 if k == axis else 1 for k in range(u.dim)])


def defining_hyperplanes(n: int, partner: int = 0, free: int | None = None) -> list[Hyperplane]:
    """The ``n`` orthogonal symmetry hyperplanes of the final stage output."""
    free = n - 1 if free is None else free
    planes = [Hyperplane.diagonal(partner, free, 1), Hyperplane.diagonal(partner, free, -1)]
    planes += [Hyperplane.axis_plane(k) for k in range(n) if k not in (partner, free)]
    return planes


def is_n_symmetric(u: GridFunction, planes: list[Hyperplane] | None = None, rtol: float = 1e-12) -> bool:
    """Invariance under ``n`` mutually orthogonal reflections (defaults to the final-stage set)."""
    planes = defining_hyperplanes(u.dim) if planes is None else planes
    atol = rtol * float(np.max(np.abs(u.values), initial=0.0))
    return all(gridfn.is_symmetric(u, H, atol) for H in planes)


def _diagonal_extension(u: GridFunction, partner: int, free: int) -> GridFunction:
    P, F = partner, free
    oP, oF = _half_offsets(u, P), _half_offsets(u, F)
    swapped = np.swapaxes(u.values, P, F)
    in_Q = np.abs(oP) <= oF
    in_right = np.abs(oF) <= oP
    in_bottom = np.abs(oP) <= -oF
    out = np.where(
        in_Q,
        u.values,
        np.where(in_right, swapped, np.where(in_bottom, np.flip(u.values, (P, F)), np.flip(swapped, (P, F)))),
    )
    return u.with_values(out)


def sector_mass(u: GridFunction, q: float, partner: int = 0, free: int | None = None) -> float:
    """``int_Q |u|^q`` over ``Q = {|x_partner| <= x_free}``, diagonal cells at half weight."""
    free = u.dim - 1 if free is None else free
    oP, oF = _half_offsets(u, partner), _half_offsets(u, free)
    weight = np.where(np.abs(oP) < oF, 1.0, np.where(np.abs(oP) == oF, 0.5, 0.0))
    return u.integral(np.broadcast_to(weight, u.shape) * np.abs(u.values) ** q)


def _final_stage(u: GridFunction, params: GnsParams, partner: int = 0) -> tuple[GridFunction, float]:
    n = u.dim
    if n < 2:
        raise ShapeError("the diagonal stage needs at least two dimensions")
    free = n - 1
    if u.shape[partner] != u.shape[free] or u.spacing[partner] != u.spacing[free]:
        raise ShapeError(f"axes {partner} and {free} must form a square grid")
    atol = 1e-12 * float(np.max(np.abs(u.values), initial=0.0))
    for k in range(n - 1):
        if not gridfn.is_symmetric(u, Hyperplane.axis_plane(k), atol):
            raise PreconditionError(f"input must be symmetric in axis {k} about 0")
    centered, residual = center_axis(u, free, params.q)
    return _diagonal_extension(centered, partner, free), residual


def final_symmetrize(u: GridFunction, params: GnsParams) -> GridFunction:
    """Diagonal-reflection extension of a function symmetric in axes ``0..n-2``.

    The last axis is first centered on its median. The result equals ``u`` on
    ``Q = {|x_0| <= x_{n-1}}``, ``u`` reflected across ``{x_0 = x_{n-1}}`` on
    the image of ``Q``, and is completed by the reflection across
    ``{x_0 = -x_{n-1}}``. It is not renormalized.
    """
    return _final_stage(u, params)[0]


# -- pipeline -----------------------------------------------------------------


@dataclass(frozen=True)
class ReductionStage:
    stage: int
    label: str
    axis: int
    chosen_half: str
    delta: float
    lambda_value: float
    snap_residual: float
    q_mass: float

    def row(self) -> list:
        return [self.stage, self.label, self.axis, self.chosen_half, self.delta, self.lambda_value, self.snap_residual]


@dataclass(frozen=True, eq=False)
class ReductionTrace:
    stages: list[ReductionStage] = field(default_factory=list)
    final: GridFunction | None = None

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for st in self.stages:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in st.row()])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8")


def _unit(u: GridFunction, q: float) -> GridFunction:
    norm = gridfn.lr_norm(u, q)
    if norm == 0:
        raise DomainError("cannot normalize a function with zero q-norm")
    return u * (1.0 / norm)


def nsym_reduce(
    u: GridFunction, params: GnsParams, asym_oracle: AsymOracle, G_const: float | None = None
) -> ReductionTrace:
    """Symmetrize axes ``0..n-2`` in turn, keeping the more asymmetric half each time.

    ``G_const`` defaults to the oracle's ``G_const`` attribute.
    """
    G = _G(asym_oracle, G_const)
    if np.any(u.values < 0):
        raise PreconditionError("the reduction needs a nonnegative function (pass |u|)")
    if u.dim != params.n:
        raise ShapeError(f"grid dimension {u.dim} does not match n={params.n}")
    q = params.q
    current = _unit(u, q)
    stages = []
    for axis in range(params.n - 1):
        centered, residual = center_axis(current, axis, q)
        split = reflect_halves(centered, axis, 0.0, q)
        lam_plus = asym_oracle(split.u_plus)
        if np.array_equal(split.u_plus.values, split.u_minus.values):
            lam_minus = lam_plus
        else:
            lam_minus = asym_oracle(split.u_minus)
        half, chosen, lam = ("+", split.u_plus, lam_plus) if lam_plus >= lam_minus else ("-", split.u_minus, lam_minus)
        mass = gridfn.lr_power(chosen, q)
        current = _unit(chosen, q)
        stages.append(
            ReductionStage(
                stage=axis + 1,
                label=f"halve-axis-{axis}",
                axis=axis,
                chosen_half=half,
                delta=deficit(current, params, G).delta,
                lambda_value=float(lam),
                snap_residual=residual,
                q_mass=mass,
            )
        )
    return ReductionTrace(stages, current)


def _G(asym_oracle: AsymOracle, G_const: float | None) -> float:
    G = getattr(asym_oracle, "G_const", None) if G_const is None else G_const
    if G is None:
        raise PreconditionError("pass G_const or an oracle carrying it")
    return float(G)


def full_reduction(
    u: GridFunction, params: GnsParams, asym_oracle: AsymOracle, G_const: float | None = None
) -> ReductionTrace:
    """Axis stages followed by the diagonal stage; ``final`` has unit q-norm."""
    G = _G(asym_oracle, G_const)
    partial = nsym_reduce(u, params, asym_oracle, G)
    hat, residual = _final_stage(partial.final, params)
    mass = gridfn.lr_power(hat, params.q)
    final = _unit(hat, params.q)
    last = ReductionStage(
        stage=params.n,
        label="diagonal",
        axis=params.n - 1,
        chosen_half="",
        delta=deficit(final, params, G).delta,
        lambda_value=float(asym_oracle(final)),
        snap_residual=residual,
        q_mass=mass,
    )
    return ReductionTrace(partial.stages + [last], final)


class AsymmetryOracle:
    """Callable ``u -> lambda(u)`` bound to a model, carrying ``G_const``."""

    def __init__(self, params: GnsParams, model: OptimizerModel, cfg: SearchConfig | None = None):
        self.params = params
        self.model = model
        self.cfg = cfg or SearchConfig()
        self.G_const = model.G_est

    def __call__(self, u: GridFunction) -> float:
        return asymmetry(u, self.params, self.model, self.cfg).lambda_value
