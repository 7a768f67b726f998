"""Weighted harmonic extension to the upper half plane and its Dirichlet-to-Neumann map.

For ``a = 1 - 2 sigma`` the extension ``v*`` solves ``div(y^a grad v*) = 0``
with trace ``v`` on ``y = 0``.  It is the convolution of ``v`` with the
Poisson kernel ``P_y``, which in 1D is the law of ``y / sqrt(2 sigma)`` times a
Student t variable with ``2 sigma`` degrees of freedom.  That identity gives
exact convolutions of the piecewise-linear interpolant through ``t.cdf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.special import gamma
from scipy.stats import t as student_t

from .core import Grid, Params, as_values, bump, make_grid, make_params, GridFunction
from .errors import BadYMesh, NonpositiveY, SolverDivergence, UnsupportedDim
from .fraclap import assemble

DEFAULT_LEVELS = 64
REFERENCE_N = 256


def kernel_constant(params: Params) -> float:
    n, s = params.dim, params.sigma
    return gamma(0.5 * n + s) / (math.pi ** (0.5 * n) * gamma(s))


def poisson_kernel(x, y, params: Params):
    """``P_y(x) = c y^(2s) / (|x|^2 + y^2)^((n+2s)/2)``, normalized to unit mass."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise NonpositiveY(f"y must be positive, got {y}")
    x = np.asarray(x, dtype=float)
    r2 = x**2 if params.dim == 1 or x.ndim == 0 else np.sum(x**2, axis=-1)
    s = params.sigma
    return kernel_constant(params) * y ** (2 * s) / (r2 + y**2) ** (0.5 * params.dim + s)


def analytic_dtn_constant(sigma: float) -> float:
    """``4^s Gamma(s) / (2 Gamma(1-s))``: reference value for the calibration."""
    return 4.0**sigma * gamma(sigma) / (2.0 * gamma(1.0 - sigma))


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class YMesh:
    """Graded vertical mesh ``y_k = Y (k/K)^gamma`` for ``k = 0..K``."""

    Y: float
    K: int
    grading: float
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        y = self.Y * (np.arange(self.K + 1) / self.K) ** self.grading
        y.setflags(write=False)
        object.__setattr__(self, "y", y)


def make_ymesh(params: Params, L: float = 1.0, K: int = DEFAULT_LEVELS, *, Y: float | None = None,
               grading: float | None = None) -> YMesh:
    """Default height ``4L`` and grading ``2/(1-a) = 1/sigma``."""
    if K < 2:
        raise BadYMesh(f"K={K}: need at least two positive levels above y=0")
    g = 1.0 / params.sigma if grading is None else float(grading)
    return YMesh(float(4.0 * L if Y is None else Y), int(K), g)


@dataclass(frozen=True, eq=False)
class ExtensionField:
    """Values of ``v*`` on the tensor mesh ``x`` by ``y``; row ``k`` is level ``y_k``."""

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    a: float
    grid: Grid | None = None

    @property
    def trace(self) -> np.ndarray:
        return self.values[0]

    def to_rows(self):
        """Flat ``(x, y, value)`` rows for CSV export."""
        X, Yv = np.meshgrid(self.x, self.y)
        return np.column_stack([X.ravel(), Yv.ravel(), self.values.ravel()])


def _p1_convolution(grid: Grid, xs, y: float, sigma: float) -> np.ndarray:
    """Matrix mapping nodal values to ``(f_I * P_y)(xs)`` for the P1 interpolant."""
    N, h = grid.N, grid.h
    z = np.concatenate([[-grid.L], grid.axis, [grid.L]])
    left = z[:-1]
    nu = 2.0 * sigma
    scale = y / math.sqrt(nu)
    c = y ** (2 * sigma) * math.gamma(0.5 + sigma) / (math.sqrt(math.pi) * math.gamma(sigma))
    xs = np.asarray(xs, dtype=float)
    s_hi = xs[:, None] - left[None, :]  # x - z_k
    s_lo = s_hi - h  # x - z_{k+1}
    F = student_t.cdf(s_hi / scale, nu) - student_t.cdf(s_lo / scale, nu)

    def H(r):  # antiderivative of r * P_y(r)
        if abs(1.0 - nu) < 1e-12:
            return 0.5 * c * np.log(r**2 + y**2)
        return c * (r**2 + y**2) ** (0.5 * (1.0 - nu)) / (1.0 - nu)

    first = (s_hi * F - (H(s_hi) - H(s_lo))) / h  # weight of the right end of each cell
    M = np.zeros((len(xs), N))
    M += (F - first)[:, 1:]  # left end of cell k is node k-1
    M += first[:, :-1]
    return M


def _convolve(f, grid: Grid, xs, ys, sigma: float) -> np.ndarray:
    vals = as_values(f, grid)
    out = np.empty((len(ys), len(xs)))
    xs = np.asarray(xs, dtype=float)
    for k, y in enumerate(ys):
        if y == 0.0:
            out[k] = np.interp(xs, np.concatenate([[-grid.L], grid.axis, [grid.L]]),
                               np.concatenate([[0.0], vals, [0.0]]), left=0.0, right=0.0)
        else:
            out[k] = _p1_convolution(grid, xs, y, sigma) @ vals
    return out


def extend(f, ygrid: YMesh, params: Params, grid: Grid | None = None, xs=None) -> ExtensionField:
    """Poisson extension of the piecewise-linear interpolant of ``f`` (exact quadrature)."""
    if params.dim != 1:
        raise UnsupportedDim("the extension module is one-dimensional")
    if grid is None:
        grid = f.grid
    xs = grid.axis if xs is None else np.asarray(xs, dtype=float)
    vals = _convolve(f, grid, xs, ygrid.y, params.sigma)
    if xs is grid.axis:
        vals[0] = as_values(f, grid)
    return ExtensionField(np.array(xs), ygrid.y, vals, params.a, grid)


def _raw_dtn(vals, grid: Grid, ygrid: YMesh, sigma: float) -> np.ndarray:
    """``-lim y^a dv*/dy`` from a fit ``v* - v = c1 y^(2s) + c2 y^2`` on two levels."""
    y1, y2 = ygrid.y[1], ygrid.y[2]
    if not (0 < y1 < y2):
        raise BadYMesh("the y mesh needs two distinct positive levels")
    lev = _convolve(vals, grid, grid.axis, (y1, y2), sigma) - vals
    s2 = 2.0 * sigma
    M = np.array([[y1**s2, y1**2], [y2**s2, y2**2]])
    c1, _ = np.linalg.solve(M, lev)
    return -s2 * c1


@lru_cache(maxsize=None)
def dtn_calibration(sigma: float, K: int = DEFAULT_LEVELS) -> float:
    """Constant linking the extension flux to ``A``, fitted on a reference bump."""
    params = make_params(max(0.5, (1 - 2 * sigma) / (1 + 2 * sigma) + 1e-3), sigma, 1)
    grid = make_grid(1.0, REFERENCE_N)
    g = bump(grid, 0.0, 0.6).values
    raw = _raw_dtn(g, grid, make_ymesh(params, grid.L, K), sigma)
    ref = assemble(grid, params).matrix @ g
    return float(raw @ ref / (raw @ raw))


def dtn(f, params: Params, grid: Grid | None = None, ygrid: YMesh | None = None) -> GridFunction:
    """Dirichlet-to-Neumann image of ``f`` scaled to approximate ``A f``."""
    if params.dim != 1:
        raise UnsupportedDim("the extension module is one-dimensional")
    if grid is None:
        grid = f.grid
    if ygrid is None:
        ygrid = make_ymesh(params, grid.L)
    if ygrid.K < 2:
        raise BadYMesh("need at least three y levels")
    vals = as_values(f, grid)
    return GridFunction(grid, dtn_calibration(params.sigma) * _raw_dtn(vals, grid, ygrid, params.sigma))


# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightedSolution:
    field: ExtensionField
    energy: float


def solve_weighted(boundary_trace, params: Params, ygrid: YMesh, *, grid: Grid | None = None, pad: float = 1.0,
                   top=None, side=None) -> ExtensionField:
    """Finite-volume solve of ``div(y^a grad u) = 0`` on a padded box.

    The trace is extended by zero to ``|x| <= L + pad``; lateral and top values
    come from :func:`extend` unless ``side`` / ``top`` are given (constants or
    callables of ``(x, y)``).  Vertical conductances use the exact harmonic
    average ``1 / int y^-a dy``.  Returns the field restricted to the grid's
    ``x`` nodes; the full box field and its Dirichlet energy are available via
    :func:`solve_weighted_box`.
    """
    box = solve_weighted_box(boundary_trace, params, ygrid, grid=grid, pad=pad, top=top, side=side)
    full = box.field
    g = full.grid
    lo = (len(full.x) - g.N) // 2
    vals = full.values[:, lo:lo + g.N]
    return ExtensionField(g.axis.copy(), full.y, vals, full.a, g)


def solve_weighted_box(boundary_trace, params: Params, ygrid: YMesh, *, grid: Grid | None = None,
                       pad: float = 1.0, top=None, side=None) -> WeightedSolution:
    if params.dim != 1:
        raise UnsupportedDim("the extension module is one-dimensional")
    if grid is None:
        grid = boundary_trace.grid
    f = as_values(boundary_trace, grid)
    a = params.a
    h = grid.h
    n_pad = int(round(pad / h))
    x = grid.axis[0] + h * np.arange(-n_pad - 1, grid.N + n_pad + 1)  # includes lateral boundary columns
    nx = len(x)
    y = ygrid.y
    K = ygrid.K
    u = np.zeros((K + 1, nx))
    u[0, n_pad + 1:n_pad + 1 + grid.N] = f

    def data(spec, xs, ys):
        if spec is None:
            return _convolve(f, grid, xs, ys, params.sigma)
        if callable(spec):
            X, Yv = np.meshgrid(xs, ys)
            return spec(X, Yv)
        return np.full((len(ys), len(xs)), float(spec))

    u[K, :] = data(top, x, [y[K]])[0]
    sides = data(side, x[[0, -1]], y[1:K])
    u[1:K, 0], u[1:K, -1] = sides[:, 0], sides[:, 1]

    # conductances
    ymid = np.concatenate([[0.0], 0.5 * (y[1:] + y[:-1]), [y[-1]]])  # cell faces in y
    wy = (ymid[1:] ** (a + 1) - ymid[:-1] ** (a + 1)) / (a + 1)  # int y^a over the cell of level k
    gy = h * (1.0 - a) / (y[1:] ** (1 - a) - y[:-1] ** (1 - a))  # between levels k and k+1
    gx = wy / h  # horizontal conductance for level k

    ki, xi = np.meshgrid(np.arange(1, K), np.arange(1, nx - 1), indexing="ij")
    ni, nj = K - 1, nx - 2
    idx = (ki - 1) * nj + (xi - 1)
    rows, cols, vals = [], [], []
    rhs = np.zeros(ni * nj)
    diag = np.zeros(ni * nj)

    def couple(mask, nb_k, nb_x, g):
        i0 = idx[mask]
        gv = g[mask]
        np.add.at(diag, i0, gv)
        interior = (nb_k[mask] >= 1) & (nb_k[mask] <= K - 1) & (nb_x[mask] >= 1) & (nb_x[mask] <= nx - 2)
        j0 = (nb_k[mask] - 1) * nj + (nb_x[mask] - 1)
        rows.append(i0[interior])
        cols.append(j0[interior])
        vals.append(-gv[interior])
        bd = ~interior
        np.add.at(rhs, i0[bd], gv[bd] * u[nb_k[mask][bd], nb_x[mask][bd]])

    full = np.ones_like(ki, dtype=bool)
    gxk = gx[ki]
    couple(full, ki, xi - 1, gxk)
    couple(full, ki, xi + 1, gxk)
    couple(full, ki - 1, xi, gy[ki - 1])
    couple(full, ki + 1, xi, gy[ki])
    rows.append(np.arange(ni * nj))
    cols.append(np.arange(ni * nj))
    vals.append(diag)
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ni * nj,) * 2)
    try:
        sol = spsolve(M.tocsc(), rhs)
    except RuntimeError as exc:
        raise SolverDivergence(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SolverDivergence("weighted solve produced non-finite values")
    u[1:K, 1:nx - 1] = sol.reshape(ni, nj)
    u[1:K, 0], u[1:K, -1] = sides[:, 0], sides[:, 1]

    # Dirichlet energy sum of conductance * jump^2 over all edges
    dx = np.diff(u, axis=1)
    dy = np.diff(u, axis=0)
    energy = float(np.sum(gx[:, None] * dx**2) + np.sum(gy[:, None] * dy**2))
    return WeightedSolution(ExtensionField(x, y, u, a, grid), energy)
