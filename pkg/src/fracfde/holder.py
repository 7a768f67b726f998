"""Oscillation decay over intrinsically scaled cylinders.

For a recorded solution, ``w = M - v`` is sampled on cylinders
``B_r(x0) x (t0 - r^(2s) omega^(1/m - 1), t0]`` whose time depth depends on the
oscillation ``omega`` measured one level up.  Fitting ``log2 omega_k`` against
the level ``k`` gives the per-halving factor ``kappa`` and ``beta = -log2 kappa``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Grid, Params
from .errors import DegenerateOscillation, InsufficientSamples
from .evolution import Trajectory

MIN_TIME_SAMPLES = 4
DEGENERATE = 1e-10


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Nodal values ``v[k, i]`` at times ``times[k]`` and points ``points[i]``."""

    points: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def M(self) -> float:
        return float(self.v.max())


def field_from(traj: Trajectory, grid: Grid) -> SpaceTimeField:
    return SpaceTimeField(grid.points.reshape(grid.size, -1), traj.times, traj.v)


@dataclass(frozen=True)
class CylinderSpec:
    x0: float | tuple
    t0: float
    r: float
    omega: float
    m: float
    sigma: float

    def __post_init__(self):
        if not (self.r > 0 and self.omega > 0):
            raise ValueError("cylinder radius and oscillation scale must be positive")

    @property
    def depth(self) -> float:
        return self.r ** (2 * self.sigma) * self.omega ** (1.0 / self.m - 1.0)


def make_cylinder(x0, t0, r, omega, params: Params) -> CylinderSpec:
    return CylinderSpec(x0, float(t0), float(r), float(omega), params.m, params.sigma)


def _select(fld: SpaceTimeField, spec: CylinderSpec):
    x0 = np.atleast_1d(np.asarray(spec.x0, dtype=float))
    pts = fld.points
    space = np.max(np.abs(pts - x0[None, :]), axis=1) <= spec.r + 1e-12
    t_lo = spec.t0 - spec.depth
    if t_lo < fld.times[0] - 1e-12:
        raise InsufficientSamples(f"cylinder starts at t={t_lo:.4g}, before the record")
    if spec.t0 > fld.times[-1] + 1e-12:
        raise InsufficientSamples("cylinder ends after the record")
    time = (fld.times > t_lo - 1e-12) & (fld.times <= spec.t0 + 1e-12)
    if time.sum() < MIN_TIME_SAMPLES:
        raise InsufficientSamples(f"{int(time.sum())} time samples inside the cylinder (need {MIN_TIME_SAMPLES})")
    if not space.any():
        raise InsufficientSamples("no nodes inside the cylinder")
    return space, time


def oscillation(fld: SpaceTimeField, spec: CylinderSpec, M: float | None = None):
    """``(mu_plus, mu_minus, omega)`` of ``w = M - v`` over the cylinder."""
    space, time = _select(fld, spec)
    M = fld.M if M is None else M
    w = M - fld.v[np.ix_(time, space)]
    mu_p, mu_m = float(w.max()), float(w.min())
    return mu_p, mu_m, mu_p - mu_m


@dataclass
class HolderReport:
    radii: list
    omegas: list
    depths: list
    kappa: float
    beta: float
    fit_r2: float
    M: float
    ratios: list
    passed: bool
    degenerate: bool = False

    def rows(self):
        return [(k, r, w) for k, (r, w) in enumerate(zip(self.radii, self.omegas))]


def fit_beta(fld: SpaceTimeField, center, r0: float, levels: int, params: Params, *, kappa_max: float = 1.0,
             omega_start: float | None = None) -> HolderReport:
    """Oscillations on ``levels`` nested cylinders of radius ``r0 / 2^k`` and the fitted decay.

    The depth of level ``k`` uses ``omega_{k-1}`` (``omega_start`` for ``k = 0``,
    default: oscillation over the whole record).
    """
    if levels < 3:
        raise InsufficientSamples("need at least three levels")
    x0, t0 = center
    M = fld.M
    prev = float(fld.v.max() - fld.v.min()) if omega_start is None else float(omega_start)
    if prev < DEGENERATE:
        raise DegenerateOscillation("field is constant over the record")
    radii, omegas, depths = [], [], []
    for k in range(levels):
        spec = make_cylinder(x0, t0, r0 / 2**k, prev, params)
        _, _, om = oscillation(fld, spec, M)
        if om < DEGENERATE:
            raise DegenerateOscillation(f"oscillation {om:.2e} at level {k}: locally constant, trivially Holder")
        radii.append(spec.r)
        omegas.append(om)
        depths.append(spec.depth)
        prev = om
    k = np.arange(levels)
    y = np.log2(omegas)
    slope, icpt = np.polyfit(k, y, 1)
    resid = y - (slope * k + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    kappa = float(2.0**slope)
    ratios = [b / a for a, b in zip(omegas, omegas[1:])]
    passed = kappa < 1.0 and all(q <= kappa_max for q in ratios) and max(ratios) < 1.0
    return HolderReport(radii, omegas, depths, kappa, float(-slope), r2, M, ratios, bool(passed))
