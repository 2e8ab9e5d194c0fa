"""Distance from a grid function to the orbit of optimizers.

The asymmetry is ``min ||u - a v(b(. - x0))||_q^q / ||u||_q^q`` where the
amplitude ``a > 0`` is tied to ``b`` by matching q-norms. The remaining
``n + 1`` variables ``(log b, x0)`` are searched by multi-start Nelder-Mead.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import ndimage
from scipy.optimize import minimize

from . import gridfn
from .errors import DomainError, ParameterError, ShapeError
from .gnscore import GnsParams
from .gridfn import GridFunction, Hyperplane
from .radialopt import OptimizerModel, OptimizerWitness, radial_samples


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 8
    budget: int = 600
    b_min: float = 1e-3
    b_max: float = 1e3
    seed: int = 0
    tol: float = 1e-6

    def __post_init__(self):
        if self.restarts < 0 or self.budget < 1:
            raise ParameterError("restarts must be >= 0 and budget >= 1")
        if not 0 < self.b_min < self.b_max:
            raise ParameterError("need 0 < b_min < b_max")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> SearchConfig:
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> SearchConfig:
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class AffineRestriction:
    """Pins some coordinates of the optimizer center ``x0``."""

    fixed_coords: Mapping[int, float] = field(default_factory=dict)

    def validate(self, dim: int) -> None:
        for axis in self.fixed_coords:
            if not 0 <= int(axis) < dim:
                raise ShapeError(f"restricted axis {axis} out of range for dimension {dim}")

    @classmethod
    def origin(cls, dim: int) -> AffineRestriction:
        return cls({k: 0.0 for k in range(dim)})


@dataclass(frozen=True, eq=False)
class AsymmetryResult:
    lambda_value: float
    witness: OptimizerWitness
    constraint_residual: float
    restarts_used: int
    converged: bool
    at_box_boundary: bool = False


class _Objective:
    """``||u - a v_b(. - x0)||_q / ||u||_q`` with ``a`` eliminated."""

    def __init__(self, u: GridFunction, model: OptimizerModel, restriction: AffineRestriction):
        self.u = u
        self.model = model
        self.q = model.params.q
        self.norm_u = gridfn.lr_norm(u, self.q)
        self.free = [k for k in range(u.dim) if k not in restriction.fixed_coords]
        self.x0_fixed = np.zeros(u.dim)
        for k, c in restriction.fixed_coords.items():
            self.x0_fixed[int(k)] = float(c)
        self.evaluations = 0

    def unpack(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        x0 = self.x0_fixed.copy()
        x0[self.free] = z[1:]
        return math.exp(z[0]), x0

    def orbit_member(self, b: float, x0: np.ndarray) -> tuple[float, np.ndarray]:
        """Amplitude and samples of the matched-norm optimizer at ``(b, x0)``."""
        v = radial_samples(self.model.profile, self.u, b, x0)
        norm_v = float(np.sum(v**self.q) * self.u.cell_volume) ** (1 / self.q)
        if norm_v == 0:
            return 0.0, v
        return self.norm_u / norm_v, v

    def __call__(self, z: np.ndarray) -> float:
        self.evaluations += 1
        b, x0 = self.unpack(z)
        a, v = self.orbit_member(b, x0)
        if a == 0:
            return 2.0
        diff = np.abs(self.u.values - a * v) ** self.q
        return float(np.sum(diff) * self.u.cell_volume) ** (1 / self.q) / self.norm_u


def _barycenter(u: GridFunction, q: float) -> np.ndarray:
    w = np.abs(u.values) ** q
    total = w.sum()
    return np.array([float(np.sum(w * x) / total) for x in np.broadcast_arrays(*u.mesh())])


def _initial_simplex(z0: np.ndarray, scales: np.ndarray) -> np.ndarray:
    sim = np.tile(z0, (z0.size + 1, 1))
    for k in range(z0.size):
        sim[k + 1, k] += scales[k]
    return sim


def relative_asymmetry(
    u: GridFunction,
    S: AffineRestriction,
    params: GnsParams,
    model: OptimizerModel,
    cfg: SearchConfig | None = None,
) -> AsymmetryResult:
    """Asymmetry with the optimizer center restricted to the affine set ``S``."""
    cfg = cfg or SearchConfig()
    if model.params.tuple != params.tuple:
        raise ParameterError("model was solved for a different parameter tuple")
    if u.dim != params.n:
        raise ShapeError(f"grid dimension {u.dim} does not match n={params.n}")
    S.validate(u.dim)
    obj = _Objective(u, model, S)
    if obj.norm_u == 0:
        raise DomainError("asymmetry is undefined for a function with zero q-norm")

    lo, hi = math.log(cfg.b_min), math.log(cfg.b_max)
    h = np.array(u.spacing)
    bary = _barycenter(u, params.q)[obj.free]

    # Starts: b = 1 and the best of a coarse log-b scan, at the barycenter and
    # at the highest peaks, then random perturbations.
    log_bs = np.linspace(math.log(0.125), math.log(8.0), 13)
    scan = [obj(np.concatenate([[lb], bary])) for lb in log_bs]
    starts = [np.concatenate([[0.0], bary]), np.concatenate([[log_bs[int(np.argmin(scan))]], bary])]
    for peak in _peaks(u, count=3):
        x0 = peak[obj.free]
        scan = [obj(np.concatenate([[lb], x0])) for lb in log_bs]
        starts.append(np.concatenate([[log_bs[int(np.argmin(scan))]], x0]))
    rng = np.random.default_rng(cfg.seed)
    spread = np.sqrt(np.maximum(_second_moment(u, params.q)[obj.free], h[obj.free] ** 2))
    for _ in range(cfg.restarts):
        lb = starts[1][0] + rng.normal(0.0, 0.5)
        x0 = bary + rng.normal(0.0, 1.0, size=bary.size) * 0.5 * spread
        starts.append(np.concatenate([[lb], x0]))

    scales = np.concatenate([[0.2], 2.0 * h[obj.free]])
    best = None
    converged_any = False
    for z0 in starts:
        z0 = z0.copy()
        z0[0] = min(max(z0[0], lo), hi)
        res = minimize(
            obj,
            z0,
            method="Nelder-Mead",
            bounds=[(lo, hi)] + [(None, None)] * len(obj.free),
            options={
                "initial_simplex": _initial_simplex(z0, scales),
                "xatol": cfg.tol,
                "fatol": cfg.tol * 1e-3,
                "maxfev": cfg.budget,
            },
        )
        converged_any |= bool(res.success)
        if best is None or res.fun < best.fun:
            best = res

    b, x0 = obj.unpack(best.x)
    a, v = obj.orbit_member(b, x0)
    witness = OptimizerWitness(a if a > 0 else 1.0, b, tuple(x0), model.profile)
    norm_v = a * float(np.sum(v**params.q) * u.cell_volume) ** (1 / params.q)
    at_boundary = min(best.x[0] - lo, hi - best.x[0]) < 1e-3
    if at_boundary:
        warnings.warn(f"asymmetry search ended at the dilation box boundary (b={b:.3g})", RuntimeWarning)
    return AsymmetryResult(
        lambda_value=float(best.fun) ** params.q,
        witness=witness,
        constraint_residual=abs(norm_v - obj.norm_u) / obj.norm_u,
        restarts_used=len(starts),
        converged=converged_any,
        at_box_boundary=bool(at_boundary),
    )


def _peaks(u: GridFunction, count: int) -> list[np.ndarray]:
    """Centers of the ``count`` highest local maxima of ``|u|``."""
    w = np.abs(u.values)
    is_max = (w == ndimage.maximum_filter(w, size=3, mode="constant")) & (w > 0)
    idx = np.flatnonzero(is_max)
    idx = idx[np.argsort(-w.ravel()[idx], kind="stable")][:count]
    axes = [u.centers(k) for k in range(u.dim)]
    return [np.array([axes[k][i] for k, i in enumerate(np.unravel_index(j, u.shape))]) for j in idx]


def _second_moment(u: GridFunction, q: float) -> np.ndarray:
    w = np.abs(u.values) ** q
    total = w.sum()
    c = _barycenter(u, q)
    return np.array([float(np.sum(w * (x - c[k]) ** 2) / total) for k, x in enumerate(np.broadcast_arrays(*u.mesh()))])


def asymmetry(
    u: GridFunction,
    params: GnsParams,
    model: OptimizerModel,
    cfg: SearchConfig | None = None,
) -> AsymmetryResult:
    """``lambda(u)``: normalized q-distance from ``u`` to the optimizer orbit."""
    return relative_asymmetry(u, AffineRestriction(), params, model, cfg)


def reflection_distance(u: GridFunction, H: Hyperplane, q: float) -> float:
    """``int |u o T_H - u|^q`` for a reflection that permutes cells."""
    if not H.is_permutation(u):
        raise ShapeError("reflection_distance needs a hyperplane that maps cells to cells")
    return gridfn.lr_power(gridfn.reflect(u, H) - u, q)
