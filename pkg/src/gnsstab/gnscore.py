"""Exponents, functionals and deficits of the Gagliardo-Nirenberg-Sobolev inequality.

The inequality reads ``G ||u||_q <= ||grad u||_p^theta ||u||_s^(1-theta)``.
Everything here is either closed-form scalar algebra on the exponents or a
thin layer over :mod:`gnsstab.gridfn` norms.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gridfn
from .errors import DegenerateInputError, DomainError, ParameterError, PreconditionError
from .gridfn import GridFunction


@dataclass(frozen=True)
class GnsParams:
    """Admissible exponent tuple ``(n, p, s, q)`` plus derived exponents.

    Derived fields:

    * ``p_star = n p / (n - p)``, the Sobolev exponent.
    * ``theta`` with ``theta / p_star + (1 - theta) / s = 1 / q``.
    * ``a_exp``, ``b_exp``: powers of the dilation factor picked up by
      ``int |grad u|^p`` and ``int |u|^s`` under the q-norm preserving
      dilation.
    * ``k_exp``: power linking the minimal dilated energy to ``G(u)``.
    * ``alpha_exp = k_exp / q``: homogeneity of the constrained minimum in
      the prescribed q-mass.
    * ``eta0 = min_l (l^a + l^b)``.
    * ``z_exp = max(p, 2)``.
    """

    n: int
    p: float
    s: float
    q: float
    p_star: float = field(init=False)
    theta: float = field(init=False)
    a_exp: float = field(init=False)
    b_exp: float = field(init=False)
    k_exp: float = field(init=False)
    alpha_exp: float = field(init=False)
    eta0: float = field(init=False)
    z_exp: float = field(init=False)

    def __post_init__(self):
        n, p, s, q = self.n, float(self.p), float(self.s), float(self.q)
        _validate(n, p, s, q)
        p_star = n * p / (n - p)
        theta = (1 / s - 1 / q) / (1 / s - 1 / p_star)
        a = -n + p + n * p / q
        b = -n + n * s / q
        nu = (n * p + p * s - n * s) / (n * p + p * q - n * s)
        derived = dict(
            p=p, s=s, q=q, p_star=p_star, theta=theta, a_exp=a, b_exp=b,
            k_exp=q * nu, alpha_exp=nu, eta0=_eta0(a, b), z_exp=max(p, 2.0),
        )
        for name, value in derived.items():
            object.__setattr__(self, name, value)

    @property
    def tuple(self) -> tuple[int, float, float, float]:
        return (self.n, self.p, self.s, self.q)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> GnsParams:
        """Rebuild from a dict, rejecting stored derived values that disagree."""
        params = make_params(data["n"], data["p"], data["s"], data["q"])
        for name, value in params.to_dict().items():
            if name in data and not math.isclose(float(data[name]), value, rel_tol=1e-12, abs_tol=1e-15):
                raise ParameterError(f"stored {name}={data[name]} disagrees with recomputed {value}")
        return params

    @classmethod
    def from_json(cls, text: str) -> GnsParams:
        return cls.from_dict(json.loads(text))


def _validate(n, p, s, q) -> None:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ParameterError(f"n must be an integer >= 2, got {n}", constraint="n >= 2")
    checks = [
        (p > 1, "1 < p", f"p={p}"),
        (p < n, "p < n", f"p={p}, n={n}"),
        (s >= 1, "1 <= s", f"s={s}"),
        (s < q, "s < q", f"s={s}, q={q}"),
    ]
    for ok, constraint, detail in checks:
        if not ok:
            raise ParameterError(f"constraint {constraint} violated ({detail})", constraint=constraint)
    p_star = n * p / (n - p)
    if not q < p_star:
        raise ParameterError(f"constraint q < p* violated (q={q}, p*={p_star})", constraint="q < p*")


def make_params(n, p, s, q) -> GnsParams:
    """Validate ``(n, p, s, q)`` and derive every exponent."""
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    return GnsParams(n, p, s, q)


def _eta0(a: float, b: float) -> float:
    lam = (-b / a) ** (1 / (a - b))
    return lam**a + lam**b


def eta0_of(params: GnsParams) -> float:
    """Minimum of ``l^a + l^b`` over ``l > 0``."""
    return params.eta0


def scale_minimizer(A: float, B: float, params: GnsParams) -> float:
    """Dilation ``l`` minimizing ``l^a A + l^b B``."""
    a, b = params.a_exp, params.b_exp
    return (-b / a) ** (1 / (a - b)) * (B / A) ** (1 / (a - b))


def scaled_energy(lam, A: float, B: float, params: GnsParams):
    """``F`` of the dilated function as a scalar: ``l^a A + l^b B``."""
    return lam**params.a_exp * A + lam**params.b_exp * B


def g_from_powers(A: float, B: float, params: GnsParams) -> float:
    """``G(u)`` from ``A = int |grad u|^p`` and ``B = int |u|^s``."""
    return A ** (params.theta / params.p) * B ** ((1 - params.theta) / params.s)


# -- functionals on grids --------------------------------------------------


def functional_F(u: GridFunction, params: GnsParams) -> float:
    """``int |grad u|^p + int |u|^s``."""
    return gridfn.grad_lp_power(u, params.p) + gridfn.lr_power(u, params.s)


def functional_G(u: GridFunction, params: GnsParams) -> float:
    """``||grad u||_p^theta ||u||_s^(1-theta)``."""
    return g_from_powers(gridfn.grad_lp_power(u, params.p), gridfn.lr_power(u, params.s), params)


@dataclass(frozen=True)
class DeficitReport:
    grad_p: float
    norm_s: float
    norm_q: float
    G_value: float
    delta: float
    boundary_mass_fraction: float


def deficit(u: GridFunction, params: GnsParams, G_const: float) -> DeficitReport:
    """Relative excess ``G(u) / (G_const ||u||_q) - 1``."""
    if not G_const > 0:
        raise ParameterError(f"G_const must be positive, got {G_const}")
    norm_q = gridfn.lr_norm(u, params.q)
    if norm_q == 0:
        raise DomainError("deficit is undefined for a function with zero q-norm")
    A = gridfn.grad_lp_power(u, params.p)
    B = gridfn.lr_power(u, params.s)
    G_value = g_from_powers(A, B, params)
    return DeficitReport(
        grad_p=A ** (1 / params.p),
        norm_s=B ** (1 / params.s),
        norm_q=norm_q,
        G_value=G_value,
        delta=G_value / (G_const * norm_q) - 1.0,
        boundary_mass_fraction=gridfn.boundary_mass_fraction(u, params.q),
    )


def normalize_scale(u: GridFunction, params: GnsParams) -> tuple[float, GridFunction]:
    """Dilate ``u`` (q-norm preserving) to the energy-minimizing scale.

    Returns ``(lambda_m, tau_{lambda_m} u)``. At that scale the energy
    ``F`` equals ``eta0 * G(u)^k``.
    """
    A = gridfn.grad_lp_power(u, params.p)
    B = gridfn.lr_power(u, params.s)
    if A == 0 or B == 0:
        raise DegenerateInputError("normalize_scale needs nonzero gradient and s-norm")
    lam = scale_minimizer(A, B, params)
    return lam, gridfn.rescale(u, lam, None, params.q)


# -- sign splitting --------------------------------------------------------


def sign_split_f(t, kappa: float, q: float):
    """``(t^(kappa/q) + (1-t)^(kappa/q))^(1/kappa) - 1`` on ``[0, 1]``."""
    t = np.asarray(t, dtype=float)
    r = kappa / q
    out = (t**r + (1 - t) ** r) ** (1 / kappa) - 1
    return float(out) if out.ndim == 0 else out


def sign_split_bound(u: GridFunction, params: GnsParams, G_const: float, norm_tol: float = 1e-8):
    """Positive-part q-mass ``t``, the lower bound ``f(t)`` and ``delta(u)``.

    ``u`` must change sign and have unit q-norm; the bound ``f(t) <= delta(u)``
    is what callers test.
    """
    v = u.values
    if not (np.any(v > 0) and np.any(v < 0)):
        raise PreconditionError("sign_split_bound needs a function that changes sign")
    total = gridfn.lr_power(u, params.q)
    if abs(total - 1.0) > norm_tol:
        raise PreconditionError(f"sign_split_bound needs ||u||_q = 1, got q-mass {total}")
    t = u.integral(np.where(v > 0, v, 0.0) ** params.q)
    f_value = sign_split_f(t, params.k_exp, params.q)
    return t, f_value, deficit(u, params, G_const).delta
