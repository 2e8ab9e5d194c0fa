"""Radial decreasing optimizers and the numerical optimal constant.

The energy ``F(u) = int |grad u|^p + int |u|^s`` is minimized over radial,
nonnegative, nonincreasing profiles with prescribed ``int |u|^q``. The
radial integrals use dual-cell shell volumes so they are exact for
piecewise-constant data on the shells.

Each descent step is a variable-metric gradient step: the metric is the
tridiagonal operator ``A(u)`` with ``grad F(u) = A(u) u`` (a lagged
diffusivity), the tangent direction is obtained by removing the component
along the constraint gradient in that metric, and the trial point is
projected back onto the monotone cone by pool-adjacent-violators and
renormalized. Armijo backtracking guarantees monotone energy decrease.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import solveh_banded
from scipy.special import gamma

from .errors import NumericalFailure, ParameterError
from .gnscore import GnsParams
from .gridfn import GridFunction


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


def shell_volumes(radii: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Dual-cell volumes at the nodes and shell volumes between nodes."""
    w = unit_ball_volume(n)
    mid = 0.5 * (radii[1:] + radii[:-1])
    edges = np.concatenate([[0.0], mid, [radii[-1]]])
    node_vol = w * (edges[1:] ** n - edges[:-1] ** n)
    edge_vol = w * (radii[1:] ** n - radii[:-1] ** n)
    return node_vol, edge_vol


def pava_nonincreasing(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least-squares projection of ``y`` onto nonincreasing sequences."""
    # Pool adjacent violators on the reversed (nondecreasing) problem.
    ys, ws = y[::-1], w[::-1]
    means: list[float] = []
    weights: list[float] = []
    sizes: list[int] = []
    for yi, wi in zip(ys, ws):
        means.append(yi)
        weights.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            wsum = weights[-2] + weights[-1]
            means[-2] = (means[-2] * weights[-2] + means[-1] * weights[-1]) / wsum
            weights[-2] = wsum
            sizes[-2] += sizes[-1]
            means.pop(), weights.pop(), sizes.pop()
    return np.repeat(means, sizes)[::-1]


def _project(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Only pool where monotonicity actually fails; PAVA leaves the rest as is.
    if np.all(np.diff(y) <= 0):
        out = y
    else:
        out = pava_nonincreasing(y, w)
    return np.maximum(out, 0.0)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Nonnegative nonincreasing profile ``v(r)`` of a radial function on R^n."""

    dim: int
    radii: np.ndarray
    values: np.ndarray
    q: float
    q_norm: float = field(init=False)

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
            raise ParameterError("radii and values must be 1-d arrays of equal length >= 2")
        if radii[0] != 0 or np.any(np.diff(radii) <= 0):
            raise ParameterError("radii must start at 0 and increase strictly")
        if np.any(values < 0) or np.any(np.diff(values) > 0):
            raise ParameterError("profile values must be nonnegative and nonincreasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "q_norm", self.lr_norm(self.q))
        if not self.q_norm > 0:
            raise ParameterError("profile must have positive q-norm")

    def lr_norm(self, r: float) -> float:
        node_vol, _ = shell_volumes(self.radii, self.dim)
        return float(np.sum(node_vol * self.values**r)) ** (1 / r)

    def __call__(self, r):
        """Linear interpolation in ``r``; zero beyond the last radius."""
        return np.interp(r, self.radii, self.values, right=0.0)


class RadialEnergy:
    """Discrete ``F``, the q-mass constraint and their gradients on a radial mesh."""

    def __init__(self, params: GnsParams, radii: np.ndarray):
        self.params = params
        self.radii = radii
        self.h = np.diff(radii)
        self.node_vol, self.edge_vol = shell_volumes(radii, params.n)

    def slopes(self, u):
        return np.diff(u) / self.h

    def energy(self, u) -> float:
        p, s = self.params.p, self.params.s
        return float(np.sum(self.edge_vol * np.abs(self.slopes(u)) ** p) + np.sum(self.node_vol * np.abs(u) ** s))

    def grad_power(self, u) -> float:
        return float(np.sum(self.edge_vol * np.abs(self.slopes(u)) ** self.params.p))

    def mass(self, u) -> float:
        return float(np.sum(self.node_vol * np.abs(u) ** self.params.q))

    def energy_gradient(self, u) -> np.ndarray:
        p, s = self.params.p, self.params.s
        D = self.slopes(u)
        flux = self.edge_vol * p * np.abs(D) ** (p - 1) * np.sign(D) / self.h
        g = s * self.node_vol * np.abs(u) ** (s - 1) * np.sign(u)
        g[:-1] -= flux
        g[1:] += flux
        return g

    def mass_gradient(self, u) -> np.ndarray:
        q = self.params.q
        return q * self.node_vol * np.abs(u) ** (q - 1) * np.sign(u)

    def metric(self, u) -> np.ndarray:
        """Upper banded form of the SPD operator ``A(u)``."""
        p, s = self.params.p, self.params.s
        D = self.slopes(u)
        eps_d = 1e-3 * max(np.max(np.abs(D)), 1e-300)
        eps_u = 1e-3 * max(np.max(np.abs(u)), 1e-300)
        c = self.edge_vol * p * (D * D + eps_d * eps_d) ** ((p - 2) / 2) / self.h**2
        diag = s * self.node_vol * (u * u + eps_u * eps_u) ** ((s - 2) / 2)
        diag = diag.copy()
        diag[:-1] += c
        diag[1:] += c
        band = np.zeros((2, u.size))
        band[0, 1:] = -c
        band[1] = diag
        return band


@dataclass
class RadialSolution:
    profile: RadialProfile
    G_est: float
    F_min: float
    G_direct: float
    mass: float
    iterations: int
    converged: bool
    stagnated: bool
    tail_fraction: float
    energy_history: list[float]


def initial_profile(radii: np.ndarray, seed: int | None) -> np.ndarray:
    """``exp(-r^2)``; a nonzero seed jitters the width deterministically."""
    width = 1.0
    if seed:
        width = float(np.random.default_rng(seed).uniform(0.6, 1.6))
    return np.exp(-((radii / width) ** 2))


def minimize_radial(
    params: GnsParams,
    resolution: int = 2048,
    r_max: float = 20.0,
    budget: int = 2000,
    seed: int | None = 0,
    mass: float = 1.0,
    tol: float = 1e-10,
    tail_threshold: float = 1e-8,
) -> RadialSolution:
    """Minimize the radial energy over profiles with ``int |u|^q = mass``.

    Returns the profile, the energy minimum ``F_min`` and the constant
    ``G_est = (F_min / (eta0 * mass^alpha))^(1/k)``.
    """
    if resolution < 256:
        raise ParameterError(f"resolution must be >= 256, got {resolution}")
    if not mass > 0:
        raise ParameterError(f"mass must be positive, got {mass}")
    q = params.q
    radii = np.linspace(0.0, r_max, resolution)
    E = RadialEnergy(params, radii)

    def normalize(v):
        return v * (mass / E.mass(v)) ** (1 / q)

    u = normalize(_project(initial_profile(radii, seed), E.node_vol))
    F = E.energy(u)
    history = [F]
    converged = stagnated = False
    it = 0
    t_prev = 1.0
    window = 20
    for it in range(1, budget + 1):
        g = E.energy_gradient(u)
        hgrad = E.mass_gradient(u)
        band = E.metric(u)
        x = solveh_banded(band, g)
        y = solveh_banded(band, hgrad)
        mu = float(hgrad @ x) / float(hgrad @ y)
        d = -(x - mu * y)
        slope = float(g @ d)
        if slope >= 0 or -slope <= tol * F:
            converged = True
            break
        t = min(1.0, 2 * t_prev)
        for _ in range(40):
            trial = normalize(_project(u + t * d, E.node_vol))
            F_trial = E.energy(trial)
            if F_trial <= F + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # No sufficient decrease: converged to rounding, or stuck.
            converged = -slope <= 1e3 * tol * F
            stagnated = not converged
            break
        u, F, t_prev = trial, F_trial, t
        history.append(F)
        # Windowed stationarity: the compact-support front of p < 2 optimizers
        # keeps the slope test from firing long after F has settled.
        if len(history) > window and history[-window - 1] - F <= window * tol * F:
            converged = True
            break

    profile = RadialProfile(params.n, radii, u, q)
    tail = float(np.sum(E.node_vol[radii >= 0.9 * r_max] * u[radii >= 0.9 * r_max] ** q) / mass)
    if tail > tail_threshold:
        raise NumericalFailure(f"R_max too small: q-mass fraction {tail:.3e} beyond 0.9*R_max")
    G_est = (F / (params.eta0 * mass**params.alpha_exp)) ** (1 / params.k_exp)
    A = E.grad_power(u)
    B = float(np.sum(E.node_vol * u**params.s))
    G_direct = A ** (params.theta / params.p) * B ** ((1 - params.theta) / params.s) / mass ** (1 / q)
    return RadialSolution(profile, G_est, F, G_direct, mass, it, converged, stagnated, tail, history)


def phi_of_mass(m: float, params: GnsParams, base: float) -> float:
    """Constrained energy minimum at q-mass ``m`` from its value at mass 1."""
    if not m > 0:
        raise ParameterError(f"mass must be positive, got {m}")
    return m**params.alpha_exp * base


# -- optimizer orbit ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OptimizerWitness:
    """Parameters of ``x -> a * v(b * (x - x0))``."""

    a: float
    b: float
    x0: tuple[float, ...]
    profile: RadialProfile

    def __post_init__(self):
        if self.a == 0 or not self.b > 0:
            raise ParameterError("witness needs a != 0 and b > 0")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))

    def expected_q_norm(self) -> float:
        n, q = self.profile.dim, self.profile.q
        return abs(self.a) * self.b ** (-n / q) * self.profile.q_norm


def radial_samples(profile: RadialProfile, template: GridFunction, b: float, x0: Sequence[float]) -> np.ndarray:
    """``v(b |x - x0|)`` at every cell center of ``template``."""
    r = np.sqrt(template.radius_squared(None if not np.any(x0) else x0))
    return profile(b * r)


def eval_witness(w: OptimizerWitness, template: GridFunction) -> GridFunction:
    """Sample ``a * v(b * |x - x0|)`` on the grid of ``template``."""
    if len(w.x0) != template.dim or w.profile.dim != template.dim:
        raise ParameterError("witness and template dimensions differ")
    return template.with_values(w.a * radial_samples(w.profile, template, w.b, w.x0))


# -- model files ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OptimizerModel:
    """A solved radial optimizer together with its numerical constant."""

    params: GnsParams
    profile: RadialProfile
    G_est: float
    F_min: float
    resolution: int
    seed: int | None

    @classmethod
    def from_solution(cls, params: GnsParams, sol: RadialSolution, seed: int | None) -> OptimizerModel:
        return cls(params, sol.profile, sol.G_est, sol.F_min, sol.profile.radii.size, seed)

    def witness(self, a: float = 1.0, b: float = 1.0, x0: Sequence[float] | None = None) -> OptimizerWitness:
        return OptimizerWitness(a, b, tuple(x0) if x0 is not None else (0.0,) * self.params.n, self.profile)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "radii": self.profile.radii.tolist(),
            "values": self.profile.values.tolist(),
            "G_est": self.G_est,
            "F_min": self.F_min,
            "resolution": self.resolution,
            "seed": self.seed,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> OptimizerModel:
        params = GnsParams.from_dict(data["params"])
        profile = RadialProfile(params.n, np.array(data["radii"]), np.array(data["values"]), params.q)
        return cls(params, profile, float(data["G_est"]), float(data["F_min"]), int(data["resolution"]), data.get("seed"))

    @classmethod
    def load(cls, path: str | Path) -> OptimizerModel:
        return cls.from_dict(json.loads(Path(path).read_text()))
