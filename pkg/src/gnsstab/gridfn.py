"""Grid-sampled functions on a box centered at the origin.

Samples live at cell centers of a uniform axis-aligned grid with an even
number of cells per axis, so every coordinate hyperplane ``{x_k = 0}`` runs
between two cell layers. Integrals use the midpoint rule; gradients use
central differences with one-sided differences on the outermost layer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .errors import FormatError, ParameterError, ShapeError

GFN_MAGIC = "GFN1"
GFN_DTYPE = "f64le"


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values sampled at the cell centers of a box symmetric about 0.

    ``values`` is an n-dimensional array in row-major (C) order; the last
    axis varies fastest, which is also the on-disk order.
    """

    values: np.ndarray
    spacing: tuple[float, ...]
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim < 1:
            raise ShapeError("values must have at least one axis")
        spacing = tuple(float(h) for h in np.broadcast_to(self.spacing, (values.ndim,)))
        origin = (0.0,) * values.ndim if self.origin is None else tuple(float(c) for c in self.origin)
        if len(origin) != values.ndim:
            raise ShapeError(f"origin has {len(origin)} entries for a {values.ndim}-d grid")
        if any(c != 0.0 for c in origin):
            raise ShapeError("the grid must be centered at the origin")
        if any(not (h > 0 and math.isfinite(h)) for h in spacing):
            raise ShapeError(f"spacing must be positive and finite, got {spacing}")
        if any(m % 2 or m == 0 for m in values.shape):
            raise ShapeError(f"every axis needs an even, nonzero cell count, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ShapeError("values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    # -- geometry ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def half_widths(self) -> tuple[float, ...]:
        return tuple(m * h / 2 for m, h in zip(self.shape, self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        m, h = self.shape[axis], self.spacing[axis]
        return (np.arange(m) - m / 2 + 0.5) * h

    def mesh(self) -> list[np.ndarray]:
        """Open (broadcastable) coordinate arrays, one per axis."""
        return np.ix_(*[self.centers(k) for k in range(self.dim)])

    def radius_squared(self, center: Sequence[float] | None = None) -> np.ndarray:
        """Squared distance of every cell center from ``center`` (default 0).

        Around the origin on an isotropic grid the result is computed from
        integer half-cell offsets, so cells related by a grid symmetry get
        bit-identical radii.
        """
        if center is None and len(set(self.spacing)) == 1:
            h = self.spacing[0]
            r2 = np.zeros(self.shape, dtype=np.int64)
            for k, m in enumerate(self.shape):
                off = 2 * np.arange(m, dtype=np.int64) - m + 1
                r2 = r2 + (off**2).reshape([-1 if j == k else 1 for j in range(self.dim)])
            return r2 * (h * h / 4)
        c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        out = np.zeros(self.shape)
        for k, x in enumerate(self.mesh()):
            out = out + (x - c[k]) ** 2
        return out

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, shape: Sequence[int], spacing: float | Sequence[float]) -> GridFunction:
        return cls(np.zeros(tuple(shape)), spacing)

    @classmethod
    def on_box(cls, shape: Sequence[int], half_width: float | Sequence[float]) -> GridFunction:
        """Zero function on ``prod_k [-L_k, L_k]`` with the given cell counts."""
        shape = tuple(int(m) for m in shape)
        L = np.broadcast_to(np.asarray(half_width, dtype=float), (len(shape),))
        return cls.zeros(shape, tuple(2 * L[k] / shape[k] for k in range(len(shape))))

    @classmethod
    def from_callable(
        cls,
        f: Callable[..., np.ndarray],
        shape: Sequence[int],
        half_width: float | Sequence[float],
    ) -> GridFunction:
        """Sample ``f(x_1, ..., x_n)`` (broadcasting coordinates) at cell centers."""
        template = cls.on_box(shape, half_width)
        return template.with_values(np.broadcast_to(f(*template.mesh()), template.shape))

    def with_values(self, values: np.ndarray) -> GridFunction:
        """Same geometry, new samples."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.shape:
            raise ShapeError(f"expected shape {self.shape}, got {values.shape}")
        return GridFunction(values, self.spacing, self.origin)

    def same_geometry(self, other: GridFunction) -> bool:
        return self.shape == other.shape and self.spacing == other.spacing

    # -- arithmetic helpers ------------------------------------------------

    def __mul__(self, c: float) -> GridFunction:
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: GridFunction) -> GridFunction:
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __neg__(self) -> GridFunction:
        return self.with_values(-self.values)

    def abs(self) -> GridFunction:
        return self.with_values(np.abs(self.values))

    def integral(self, density: np.ndarray | None = None) -> float:
        """Midpoint-rule integral of ``density`` (default: the values)."""
        d = self.values if density is None else density
        return float(np.sum(d) * self.cell_volume)


def _check_same(u: GridFunction, v: GridFunction) -> None:
    if not u.same_geometry(v):
        raise ShapeError(f"grid mismatch: {u.shape}/{u.spacing} vs {v.shape}/{v.spacing}")


# -- norms and gradients ------------------------------------------------------


def lr_power(u: GridFunction, r: float) -> float:
    """``int |u|^r`` by the midpoint rule."""
    if not r >= 1:
        raise ParameterError(f"L^r norm needs r >= 1, got {r}", constraint="r >= 1")
    return u.integral(np.abs(u.values) ** r)


def lr_norm(u: GridFunction, r: float) -> float:
    """Discrete L^r norm ``(sum |u|^r * cell volume)^(1/r)``."""
    return lr_power(u, r) ** (1.0 / r)


def gradient(u: GridFunction) -> list[np.ndarray]:
    """Partial derivatives by central differences, one-sided at the edges."""
    if min(u.shape) < 3:
        raise ShapeError(f"gradient needs at least 3 cells per axis, got {u.shape}")
    g = np.gradient(u.values, *u.spacing, edge_order=1)
    return [g] if u.dim == 1 else list(g)


def grad_magnitude(u: GridFunction) -> np.ndarray:
    """Euclidean length of the discrete gradient in every cell."""
    g = gradient(u)
    if len(g) == 1:
        return np.abs(g[0])
    return np.sqrt(sum(gk * gk for gk in g))


def grad_lp_power(u: GridFunction, p: float) -> float:
    """``int |grad u|^p``."""
    if not p > 1:
        raise ParameterError(f"gradient norm needs p > 1, got {p}", constraint="p > 1")
    return u.integral(grad_magnitude(u) ** p)


def grad_lp_norm(u: GridFunction, p: float) -> float:
    """Discrete L^p norm of ``|grad u|``."""
    return grad_lp_power(u, p) ** (1.0 / p)


def boundary_mass_fraction(u: GridFunction, r: float = 2.0, width: int = 1) -> float:
    """Share of ``int |u|^r`` carried by the outermost ``width`` cell layers.

    A large value signals that the function is cut off by the box.
    """
    dens = np.abs(u.values) ** r
    total = dens.sum()
    if total == 0:
        return 0.0
    inner = dens[tuple(slice(width, m - width) for m in u.shape)].sum()
    return float((total - inner) / total)


# -- geometric transforms -----------------------------------------------------


def _index_coords(u: GridFunction, points: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Convert physical coordinates into fractional cell indices."""
    return [points[k] / u.spacing[k] + u.shape[k] / 2 - 0.5 for k in range(u.dim)]


def sample(u: GridFunction, points: Sequence[np.ndarray]) -> np.ndarray:
    """Multilinear interpolation of ``u`` at physical points; zero outside."""
    coords = _index_coords(u, [np.asarray(x, dtype=float) for x in points])
    coords = np.broadcast_arrays(*coords)
    return ndimage.map_coordinates(
        u.values, np.stack(coords), order=1, mode="grid-constant", cval=0.0, prefilter=False
    )


def rescale(u: GridFunction, lam: float, x0: Sequence[float] | None = None, q: float = 2.0) -> GridFunction:
    """Return ``lam^(n/q) * u(lam * (x - x0))`` resampled on the same grid.

    This dilation keeps ``int |u|^q`` unchanged. Samples falling outside the
    source box read as zero.
    """
    if not lam > 0:
        raise ParameterError(f"rescale needs lam > 0, got {lam}", constraint="lambda > 0")
    x0 = np.zeros(u.dim) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (u.dim,):
        raise ShapeError(f"x0 must have {u.dim} coordinates")
    if lam == 1.0 and not np.any(x0):
        return u.with_values(u.values.copy())
    points = [lam * (x - x0[k]) for k, x in enumerate(u.mesh())]
    return u.with_values(lam ** (u.dim / q) * sample(u, points))


def translate_cells(u: GridFunction, shift: Sequence[int]) -> GridFunction:
    """Shift values by whole cells (``out[i] = u[i - shift]``), zero-filling."""
    out = u.values
    for k, m in enumerate(shift):
        m = int(m)
        if m == 0:
            continue
        moved = np.zeros_like(out)
        src = [slice(None)] * u.dim
        dst = [slice(None)] * u.dim
        if abs(m) < u.shape[k]:
            if m > 0:
                src[k], dst[k] = slice(0, u.shape[k] - m), slice(m, None)
            else:
                src[k], dst[k] = slice(-m, None), slice(0, u.shape[k] + m)
            moved[tuple(dst)] = out[tuple(src)]
        out = moved
    return u.with_values(out)


@dataclass(frozen=True)
class Hyperplane:
    """Either ``{x_axis = offset}`` or the diagonal ``{x_i = sign * x_j}``."""

    kind: str
    axis: int = 0
    offset: float = 0.0
    i: int = 0
    j: int = 1
    sign: int = 1

    @classmethod
    def axis_plane(cls, axis: int, offset: float = 0.0) -> Hyperplane:
        return cls("axis", axis=int(axis), offset=float(offset))

    @classmethod
    def diagonal(cls, i: int, j: int, sign: int = 1) -> Hyperplane:
        if sign not in (1, -1):
            raise ParameterError("diagonal sign must be +1 or -1")
        if i == j:
            raise ParameterError("diagonal hyperplane needs two distinct axes")
        return cls("diagonal", i=int(i), j=int(j), sign=int(sign))

    def validate(self, dim: int) -> None:
        if self.kind == "axis":
            if not 0 <= self.axis < dim:
                raise ShapeError(f"axis {self.axis} out of range for dimension {dim}")
        elif self.kind == "diagonal":
            if dim < 2 or self.i == self.j or not (0 <= self.i < dim and 0 <= self.j < dim):
                raise ShapeError(f"invalid diagonal ({self.i}, {self.j}) for dimension {dim}")
        else:
            raise ShapeError(f"unknown hyperplane kind {self.kind!r}")

    def is_permutation(self, u: GridFunction) -> bool:
        """Whether reflecting ``u`` maps cell centers onto cell centers."""
        self.validate(u.dim)
        if self.kind == "diagonal":
            return u.shape[self.i] == u.shape[self.j] and u.spacing[self.i] == u.spacing[self.j]
        return _aligned_shift(self.offset, u.spacing[self.axis]) is not None


def _aligned_shift(offset: float, h: float) -> int | None:
    """``2 * offset / h`` when it is an integer (to rounding), else None."""
    t = 2 * offset / h
    m = round(t)
    return int(m) if abs(t - m) <= 1e-9 * max(1.0, abs(t)) else None


def reflect(u: GridFunction, plane: Hyperplane) -> GridFunction:
    """Return ``u o T`` where ``T`` is the reflection across ``plane``.

    Reflections that map cells to cells are exact index permutations (with
    zero fill for cells whose mirror image leaves the box); other axis
    offsets fall back to linear interpolation.
    """
    plane.validate(u.dim)
    if plane.kind == "diagonal":
        i, j = plane.i, plane.j
        if u.shape[i] != u.shape[j] or u.spacing[i] != u.spacing[j]:
            raise ShapeError(f"diagonal reflection needs a square grid on axes {i}, {j}")
        out = np.swapaxes(u.values, i, j)
        if plane.sign < 0:
            out = np.flip(out, axis=(i, j))
        return u.with_values(np.ascontiguousarray(out))

    k = plane.axis
    shift = _aligned_shift(plane.offset, u.spacing[k])
    if shift is not None:
        flipped = u.with_values(np.flip(u.values, axis=k))
        return translate_cells(flipped, [shift if a == k else 0 for a in range(u.dim)])
    points = list(np.broadcast_arrays(*u.mesh()))
    points[k] = 2 * plane.offset - points[k]
    return u.with_values(sample(u, points))


def is_symmetric(u: GridFunction, plane: Hyperplane, atol: float = 0.0) -> bool:
    """Whether ``u`` equals its reflection to within ``atol``."""
    return bool(np.max(np.abs(reflect(u, plane).values - u.values), initial=0.0) <= atol)


# -- GFN file format ---------------------------------------------------------


def write_gfn(u: GridFunction, path: str | Path) -> None:
    """Write ``u`` as one JSON header line followed by raw little-endian f64."""
    header = {
        "magic": GFN_MAGIC,
        "dim": u.dim,
        "shape": list(u.shape),
        "spacing": list(u.spacing),
        "origin": list(u.origin),
        "dtype": GFN_DTYPE,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_gfn(path: str | Path) -> GridFunction:
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise FormatError("missing header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}") from None
    if not isinstance(header, dict) or header.get("magic") != GFN_MAGIC:
        raise FormatError("bad magic")
    if header.get("dtype") != GFN_DTYPE:
        raise FormatError(f"unsupported dtype {header.get('dtype')!r}")
    try:
        dim = int(header["dim"])
        shape = tuple(int(m) for m in header["shape"])
        spacing = tuple(float(h) for h in header["spacing"])
        origin = tuple(float(c) for c in header["origin"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed header: {exc}") from None
    if not (dim == len(shape) == len(spacing) == len(origin)):
        raise FormatError("header dim, shape, spacing and origin disagree")
    payload = data[newline + 1 :]
    count = math.prod(shape)
    if len(payload) != 8 * count:
        raise FormatError(f"payload holds {len(payload)} bytes, header implies {8 * count}")
    values = np.frombuffer(payload, dtype="<f8").reshape(shape)
    if not np.all(np.isfinite(values)):
        raise FormatError("payload contains non-finite values")
    try:
        return GridFunction(values.astype(np.float64), spacing, origin)
    except ShapeError as exc:
        raise FormatError(str(exc)) from None
