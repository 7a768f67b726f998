"""Exponents, uniform grids and nodal grid functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadResolution, GridMismatch, OutOfRange, UnsupportedDim

MIN_POINTS = 8


@dataclass(frozen=True)
class Params:
    """Exponents of the fast-diffusion problem and their derived constants.

    ``m`` is the diffusion exponent (``v = u**m``), ``sigma`` the order of the
    fractional Laplacian and ``dim`` the spatial dimension.
    """

    m: float
    sigma: float
    dim: int = 1

    @property
    def a(self) -> float:
        """Weight exponent of the extension problem."""
        return 1.0 - 2.0 * self.sigma

    @property
    def alpha(self) -> float:
        return 1.0 - 1.0 / self.m

    @property
    def p(self) -> float:
        return 1.0 / self.m

    @property
    def lam(self) -> float:
        """Eigenvalue of the separable profile, ``1/(1-m)``."""
        return 1.0 / (1.0 - self.m)

    @property
    def extinction_exp(self) -> float:
        return 1.0 / (1.0 - self.m)

    @property
    def smoothing_exp(self) -> float:
        n, m, s = self.dim, self.m, self.sigma
        return m * n / (2.0 * m * n - (n - 2.0 * s) * (1.0 + m))

    @property
    def energy_exp(self) -> float:
        """Exponent ``(m+1)/m`` of the dissipated energy ``int v**((m+1)/m)``."""
        return (self.m + 1.0) / self.m

    @property
    def sobolev_exp(self) -> float:
        """Critical Lebesgue exponent ``2n/(n-2 sigma)`` (inf when invalid)."""
        if not self.sobolev_valid:
            return math.inf
        return 2.0 * self.dim / (self.dim - 2.0 * self.sigma)

    @property
    def sobolev_valid(self) -> bool:
        return 2.0 * self.sigma < self.dim

    @property
    def m_lower(self) -> float:
        n, s = self.dim, self.sigma
        return (n - 2.0 * s) / (n + 2.0 * s)


def make_params(m: float, sigma: float, dim: int = 1) -> Params:
    """Validate ``(m, sigma, dim)`` and return the parameter record."""
    for name, val in (("m", m), ("sigma", sigma)):
        if not math.isfinite(val):
            raise OutOfRange(f"{name}={val!r} is not finite")
    if dim not in (1, 2):
        raise UnsupportedDim(f"dim={dim!r}; only 1 and 2 are supported")
    if not 0.0 < sigma < 1.0:
        raise OutOfRange(f"sigma={sigma} must lie in (0, 1)")
    lower = (dim - 2.0 * sigma) / (dim + 2.0 * sigma)
    if not lower < m < 1.0:
        raise OutOfRange(f"m={m} must lie in ({lower:.6g}, 1) for sigma={sigma}, dim={dim}")
    return Params(float(m), float(sigma), int(dim))


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform interior mesh of the cube ``(-L, L)**dim``; the exterior is zero."""

    dim: int
    L: float
    N: int
    h: float = field(init=False)
    axis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = 2.0 * self.L / (self.N + 1)
        axis = -self.L + (np.arange(self.N) + 1.0) * h
        axis.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "axis", axis)

    @property
    def size(self) -> int:
        return self.N**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(size,)`` in 1D and ``(size, 2)`` in 2D."""
        if self.dim == 1:
            return self.axis.copy()
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def radius(self) -> np.ndarray:
        """Euclidean distance of each node to the origin."""
        pts = self.points
        return np.abs(pts) if self.dim == 1 else np.hypot(pts[:, 0], pts[:, 1])

    def same_as(self, other: "Grid") -> bool:
        return (self.dim, self.L, self.N) == (other.dim, other.L, other.N)

    def sample(self, func) -> "GridFunction":
        """Evaluate ``func`` at the nodes (``func`` takes an array of points)."""
        return GridFunction(self, np.asarray(func(self.points), dtype=float))

    def integrate(self, values) -> float:
        return float(np.sum(values) * self.cell_volume)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))


def make_grid(L: float, N: int, dim: int = 1, *, min_points: int = MIN_POINTS) -> Grid:
    if not (math.isfinite(L) and L > 0):
        raise BadResolution(f"half width L={L!r} must be positive")
    if dim not in (1, 2):
        raise UnsupportedDim(f"dim={dim!r}")
    if int(N) != N or N < min_points:
        raise BadResolution(f"N={N} below the floor of {min_points} points per axis")
    return Grid(int(dim), float(L), int(N))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values attached to a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != self.grid.size:
            raise GridMismatch(f"{vals.shape[0]} values for a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function has non-finite values")
        object.__setattr__(self, "values", vals)

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if not self.grid.same_as(other.grid):
                raise GridMismatch("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._coerce(other))

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def integral(self) -> float:
        return self.grid.integrate(self.values)


def as_values(f, grid: Grid) -> np.ndarray:
    """Return nodal values of ``f`` checked against ``grid``."""
    if isinstance(f, GridFunction):
        if not f.grid.same_as(grid):
            raise GridMismatch("grid function does not live on the operator's grid")
        return f.values
    arr = np.asarray(f, dtype=float).reshape(-1)
    if arr.shape[0] != grid.size:
        raise GridMismatch(f"{arr.shape[0]} values for a grid of {grid.size} nodes")
    return arr


def tent(grid: Grid, width: float = 0.5) -> GridFunction:
    """``max(0, 1 - |x|/width)``: the standard test datum of the package."""
    return GridFunction(grid, np.maximum(0.0, 1.0 - grid.radius / width))


def bump(grid: Grid, center=0.0, radius: float = 0.5, power: int = 3) -> GridFunction:
    """Smooth compactly supported bump ``(1 - |x-c|^2/r^2)_+^power``."""
    pts = grid.points
    c = np.asarray(center, dtype=float)
    if grid.dim == 1:
        r2 = (pts - float(c)) ** 2
    else:
        r2 = np.sum((pts - c) ** 2, axis=1)
    return GridFunction(grid, np.maximum(0.0, 1.0 - r2 / radius**2) ** power)
