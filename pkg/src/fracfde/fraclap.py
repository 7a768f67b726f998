"""Restricted (integral) fractional Laplacian on a cube with zero exterior.

The operator is

    (-Lap)^s f(x) = C_{n,s} * int (f(x) - f(y)) / |x - y|^(n + 2s) dy,

with ``f`` extended by zero outside the cube.  In 1D the matrix integrates the
piecewise-linear interpolant exactly: far-field hat-function weights are
integrated by Gauss quadrature, the two cells adjacent to the singularity use
the closed-form principal-value weight, and the exterior contributes an
analytic diagonal tail.  In 2D a piecewise-constant far field with exact cell
integrals is used, with a five-point Laplacian for the singular cell.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import cho_factor, cho_solve, toeplitz
from scipy.special import beta, betainc, gamma

from .core import Grid, GridFunction, Params, as_values, make_grid, make_params
from .errors import GridMismatch, SingularSystem

_GL_X, _GL_W = leggauss(40)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def normalization_constant(dim: int, sigma: float) -> float:
    """``C_{n,s} = 4^s Gamma(n/2 + s) / (pi^(n/2) |Gamma(-s)|)``."""
    return 4.0**sigma * gamma(dim / 2.0 + sigma) / (np.pi ** (dim / 2.0) * abs(gamma(-sigma)))


def near_weight(sigma: float) -> float:
    """Weight (in units of ``h^-2s``) of the symmetric difference on ``|t| <= h``.

    For ``s < 1/2`` this is the exact integral of the linear interpolant,
    ``int_0^1 t^(-2s) dt``; the linear interpolant has no finite principal value
    for ``s >= 1/2`` and the quadratic-interpolant weight ``1/(2-2s)`` is used.
    """
    if sigma < 0.5:
        return 1.0 / (1.0 - 2.0 * sigma)
    return 1.0 / (2.0 - 2.0 * sigma)


def _rise(d: np.ndarray, sigma: float) -> np.ndarray:
    """``int_0^1 t (d-1+t)^(-1-2s) dt`` for ``d >= 2``."""
    t = _GL_X[None, :]
    return np.sum(_GL_W * t * (d[:, None] - 1.0 + t) ** (-1.0 - 2.0 * sigma), axis=1)


def _fall(d: np.ndarray, sigma: float) -> np.ndarray:
    """``int_0^1 (1-t) (d+t)^(-1-2s) dt`` for ``d >= 1``."""
    t = _GL_X[None, :]
    return np.sum(_GL_W * (1.0 - t) * (d[:, None] + t) ** (-1.0 - 2.0 * sigma), axis=1)


def hat_weights_1d(N: int, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-spacing coupling weights ``W(d)`` and boundary half-hat weights ``B(d)``.

    Both arrays are indexed by the index distance ``d = 0..N`` (entry 0 unused).
    """
    d = np.arange(N + 1, dtype=float)
    rise = np.zeros(N + 1)
    fall = np.zeros(N + 1)
    rise[1] = near_weight(sigma)
    if N >= 2:
        rise[2:] = _rise(d[2:], sigma)
    fall[1:] = _fall(d[1:], sigma)
    W = rise + fall
    W[0] = 0.0
    B = rise.copy()
    return W, B


def exterior_tail_1d(grid: Grid, sigma: float) -> np.ndarray:
    """``int_{|y|>L} |x-y|^(-1-2s) dy`` at every node (no normalization)."""
    x = grid.axis
    L = grid.L
    return ((L - x) ** (-2.0 * sigma) + (L + x) ** (-2.0 * sigma)) / (2.0 * sigma)


# ----------------------------------------------------------------------------
# 2D helpers


def _square_tail(center: np.ndarray, half: float, sigma: float) -> np.ndarray:
    """``int_{|y_i| > half} |x - y|^(-2-2s) dy`` for each row ``x`` of ``center``.

    In polar coordinates about ``x`` the radial integral is ``rho^(-2s)/(2s)``
    with ``rho`` the distance to the square's boundary.  On the face with normal
    distance ``d`` this is ``d^(-2s) cos(phi)^(2s)``, whose angular antiderivative
    is an incomplete beta function.
    """
    c = np.atleast_2d(center)
    e = 2.0 * sigma
    b = 0.5 * (e + 1.0)
    full = 0.5 * beta(0.5, b)

    def G(phi):
        return np.sign(phi) * full * betainc(0.5, b, np.sin(phi) ** 2)

    x, y = c[:, 0], c[:, 1]
    total = np.zeros(c.shape[0])
    # each face: normal distance d and the node's tangential offset t
    for d, t in ((half - x, y), (half + x, -y), (half - y, -x), (half + y, x)):
        phi_hi = np.arctan2(half - t, d)
        phi_lo = np.arctan2(-half - t, d)
        total += d ** (-e) * (G(phi_hi) - G(phi_lo))
    return total / e


def _square_moment(half: float, power: float) -> float:
    """``int_0^{2 pi} rho(theta)^power dtheta`` for the square ``[-half, half]^2``
    seen from its center."""
    phi = 0.25 * np.pi * _GL_X
    return 8.0 * float(np.sum(_GL_W * 0.25 * np.pi * (half / np.cos(phi)) ** power))


def _cell_integrals_2d(N: int, sigma: float) -> np.ndarray:
    """``I[p, q] = int_{unit cell at offset (p, q)} |s|^(-2-2s) ds`` for ``p, q >= 0``."""
    expo = -1.0 - sigma  # |s|^(-2-2s) = (|s|^2)^(-1-s)
    I = np.zeros((N, N))
    P, Q = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    near = np.maximum(P, Q)
    for npts, mask in ((32, near <= 3), (16, (near > 3) & (near <= 16)), (8, near > 16)):
        xs, ws = leggauss(npts)
        mask = mask.copy()
        mask[0, 0] = False
        p = P[mask].astype(float)[:, None, None]
        q = Q[mask].astype(float)[:, None, None]
        sx = p + 0.5 * xs[None, :, None]
        sy = q + 0.5 * xs[None, None, :]
        vals = (sx**2 + sy**2) ** expo
        I[mask] = 0.25 * np.einsum("kij,i,j->k", vals, ws, ws)
    return I


# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FracOp:
    """Assembled dense operator and its exterior-tail diagnostics."""

    grid: Grid
    params: Params
    matrix: np.ndarray = field(repr=False)
    constant: float
    exterior_tail: np.ndarray = field(repr=False)
    tail: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.grid.size

    @cached_property
    def _cho(self):
        try:
            return cho_factor(self.matrix, lower=False, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc

    def __matmul__(self, f):
        return self.matrix @ as_values(f, self.grid)


def assemble(grid: Grid, params: Params) -> FracOp:
    """Assemble the restricted fractional Laplacian on ``grid``."""
    if grid.dim != params.dim:
        raise GridMismatch(f"grid dim {grid.dim} != params dim {params.dim}")
    s = params.sigma
    C = normalization_constant(grid.dim, s)
    scale = C * grid.h ** (-2.0 * s)
    N = grid.N
    if grid.dim == 1:
        W, B = hat_weights_1d(N, s)
        diag = 1.0 / s + 2.0 * near_weight(s)
        A = -scale * toeplitz(W[:N])
        A[np.diag_indices(N)] = scale * diag
        ext = C * exterior_tail_1d(grid, s)
        i = np.arange(N)
        tail = ext + scale * (B[i + 1] + B[N - i])
    else:
        I = _cell_integrals_2d(N, s)
        far_diag = _square_moment(0.5, -2.0 * s) / (2.0 * s)
        m2 = _square_moment(0.5, 2.0 - 2.0 * s) / (2.0 - 2.0 * s)
        W = I.copy()
        W[1, 0] += m2 / 4.0
        W[0, 1] += m2 / 4.0
        idx = np.arange(N)
        P = np.abs(idx[:, None] - idx[None, :])
        # node k = i*N + j; coupling depends on (|di|, |dj|)
        A = -scale * W[P[:, None, :, None], P[None, :, None, :]].reshape(N * N, N * N)
        A[np.diag_indices(N * N)] = scale * (far_diag + m2)
        pts = grid.points
        ext = C * _square_tail(pts, grid.L, s)
        strip = C * _square_tail(pts, grid.L - 0.5 * grid.h, s)
        ii, jj = np.divmod(np.arange(N * N), N)
        missing = (ii == 0).astype(int) + (ii == N - 1) + (jj == 0) + (jj == N - 1)
        tail = strip + scale * (m2 / 4.0) * missing
    A.setflags(write=False)
    return FracOp(grid, params, A, C, ext, tail)


def apply(op: FracOp, f) -> GridFunction:
    return GridFunction(op.grid, op.matrix @ as_values(f, op.grid))


def seminorm_hs(op: FracOp, f) -> float:
    """Discrete squared seminorm ``<f, A f> h^dim``."""
    v = as_values(f, op.grid)
    return float(v @ (op.matrix @ v) * op.grid.cell_volume)


def solve_dirichlet(op: FracOp, rhs, fixed_nodes=None, fixed_values=0.0) -> GridFunction:
    """Solve ``A f = rhs`` on the free nodes with ``f`` prescribed on ``fixed_nodes``.

    ``fixed_nodes`` is a boolean mask or an index array; prescribed values are
    moved to the right-hand side.
    """
    b = as_values(rhs, op.grid)
    if fixed_nodes is None:
        return GridFunction(op.grid, cho_solve(op._cho, b, check_finite=False))
    fixed = np.zeros(op.size, dtype=bool)
    fixed[np.asarray(fixed_nodes)] = True
    if fixed.all():
        out = np.broadcast_to(np.asarray(fixed_values, dtype=float), (op.size,)).copy()
        return GridFunction(op.grid, out)
    out = np.zeros(op.size)
    out[fixed] = np.broadcast_to(np.asarray(fixed_values, dtype=float), (op.size,))[fixed]
    free = ~fixed
    A = op.matrix
    rhs_free = b[free] - A[np.ix_(free, fixed)] @ out[fixed]
    try:
        cf = cho_factor(A[np.ix_(free, free)], check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    out[free] = cho_solve(cf, rhs_free, check_finite=False)
    return GridFunction(op.grid, out)


# ----------------------------------------------------------------------------
# binary dump / load

_MAGIC = b"FRLP"
_HEADER = struct.Struct("<4sIIdddd")  # magic, dim, N, L, m, sigma, constant


def dump(op: FracOp, path) -> None:
    """Write ``op`` as a small header followed by the row-major float64 matrix."""
    g, p = op.grid, op.params
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, g.dim, g.N, g.L, p.m, p.sigma, op.constant))
        fh.write(np.ascontiguousarray(op.matrix, dtype="<f8").tobytes())


def load(path) -> FracOp:
    with open(path, "rb") as fh:
        magic, dim, N, L, m, sigma, C = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a fractional-Laplacian dump")
        data = np.frombuffer(fh.read(), dtype="<f8")
    grid = make_grid(L, N, dim)
    params = make_params(m, sigma, dim)
    if data.size != grid.size**2:
        raise ValueError(f"{path}: truncated matrix ({data.size} of {grid.size**2} values)")
    ref = assemble(grid, params) if dim == 2 else None
    if ref is not None:
        ext, tail = ref.exterior_tail, ref.tail
    else:
        W, B = hat_weights_1d(N, sigma)
        ext = C * exterior_tail_1d(grid, sigma)
        i = np.arange(N)
        tail = ext + C * grid.h ** (-2 * sigma) * (B[i + 1] + B[N - i])
    A = data.reshape(grid.size, grid.size).copy()
    A.setflags(write=False)
    return FracOp(grid, params, A, C, ext, tail)
