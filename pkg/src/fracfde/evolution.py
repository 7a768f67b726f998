"""Implicit time stepping of ``(-Lap)^s v + (v^(1/m))_t = 0`` with zero exterior.

One backward-Euler step solves the nodally coupled system

    u+ + dt * A (u+)^m = u          (u = v^(1/m))

for ``v+ = (u+)^m``.  Written in ``v`` the residual ``G(v) = v^p + dt A v - u``
has the Jacobian ``diag(p v^(p-1)) + dt A``: a symmetric M-matrix for every
``v >= 0``, so Newton needs no clamping of a singular diffusion coefficient.
A lower floor on ``u`` (the regularization ladder) turns the step into a
complementarity problem ``min(v - floor, G(v)) = 0``, solved by semismooth
Newton with backtracking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solve
from scipy.optimize import minimize_scalar

from .core import Params, as_values
from .errors import NewtonDivergence, NoExtinction, StepCollapse
from .fraclap import FracOp

log = logging.getLogger(__name__)

NEWTON_MAX_ITER = 50
NEWTON_RTOL = 1e-10
EXTINCTION_THRESHOLD = 1e-8
DT_MIN = 1e-14
DT_GROW = 1.2
EASY_ITERS = 5


@dataclass(frozen=True, eq=False)
class State:
    t: float
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    eps: float = 0.0
    newton_iters: int = 0


def make_state(t, u, params: Params, eps: float = 0.0) -> State:
    u = np.maximum(np.asarray(u, dtype=float), eps)
    return State(float(t), u, u**params.m, float(eps))


def _newton(u, v0, dt, A, params: Params, vfloor: float, reaction: float = 0.0):
    """Solve ``(1 - dt*reaction) v^p + dt A v = u`` subject to ``v >= vfloor``."""
    p = params.p
    c = 1.0 - dt * reaction
    if c <= 0.0:
        raise NewtonDivergence(f"dt={dt} exceeds the reaction stability limit")
    scale = max(float(np.max(np.abs(u))), 1e-300)
    tol = NEWTON_RTOL * scale
    v = np.maximum(v0, vfloor)

    def residual(v):
        G = c * v**p + dt * (A @ v) - u
        return G, np.minimum(v - vfloor, G)

    G, phi = residual(v)
    merit = float(np.max(np.abs(phi)))
    for it in range(1, NEWTON_MAX_ITER + 1):
        if merit <= tol:
            return v, it - 1
        active = (v - vfloor) < G
        free = ~active
        delta = np.zeros_like(v)
        delta[active] = vfloor - v[active]
        if free.any():
            J = dt * A[np.ix_(free, free)]
            J[np.diag_indices_from(J)] += c * p * v[free] ** (p - 1.0)
            rhs = -G[free]
            if active.any():
                rhs -= dt * A[np.ix_(free, active)] @ delta[active]
            try:
                delta[free] = solve(J, rhs, assume_a="pos", check_finite=False)
            except (LinAlgError, ValueError) as exc:
                raise NewtonDivergence(str(exc)) from exc
        step = 1.0
        for _ in range(30):
            trial = np.maximum(v + step * delta, vfloor if vfloor > 0 else 0.0)
            G_t, phi_t = residual(trial)
            m_t = float(np.max(np.abs(phi_t)))
            if m_t < merit or m_t <= tol:
                break
            step *= 0.5
        else:
            raise NewtonDivergence(f"line search stalled at residual {merit:.3e}")
        v, G, merit = trial, G_t, m_t
    if merit <= tol:
        return v, NEWTON_MAX_ITER
    raise NewtonDivergence(f"no convergence in {NEWTON_MAX_ITER} iterations (residual {merit:.3e})")


def step(state: State, dt: float, op: FracOp, params: Params, reaction: float = 0.0) -> State:
    """One backward-Euler step of size ``dt``.

    ``reaction`` adds an implicit linear source ``reaction * u`` (used by the
    normalized flow).  Raises ``NewtonDivergence`` when ``dt`` is too large.
    """
    if not dt > 0:
        raise ValueError(f"dt={dt} must be positive")
    vfloor = state.eps**params.m if state.eps > 0 else 0.0
    v, iters = _newton(state.u, state.v, dt, op.matrix, params, vfloor, reaction)
    v = np.maximum(v, vfloor)
    u = v**params.p
    return State(state.t + dt, u, v, state.eps, iters)


# ----------------------------------------------------------------------------


@dataclass(eq=False)
class Trajectory:
    """Accepted states of one run with per-state diagnostics.

    ``dt[k]`` is the step that produced state ``k`` (zero for the initial state).
    """

    params: Params
    h: float
    dim: int
    eps: float
    times: np.ndarray
    u: np.ndarray = field(repr=False)
    dt: np.ndarray = field(repr=False)
    newton_iters: np.ndarray = field(repr=False)
    extinct: bool = False
    threshold: float = EXTINCTION_THRESHOLD
    mass: np.ndarray = field(init=False, repr=False)
    energy: np.ndarray = field(init=False, repr=False)
    seminorm: np.ndarray = field(init=False, repr=False)
    sup_v: np.ndarray = field(init=False, repr=False)
    sup_u: np.ndarray = field(init=False, repr=False)
    _A: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        vol = self.h**self.dim
        v = self.v
        self.mass = self.u.sum(axis=1) * vol
        self.energy = (self.u ** (1.0 + self.params.m)).sum(axis=1) * vol
        self.seminorm = np.einsum("ki,ki->k", v, v @ self._A) * vol
        self.sup_v = v.max(axis=1)
        self.sup_u = self.u.max(axis=1)
        self._A = None

    @property
    def v(self) -> np.ndarray:
        return self.u**self.params.m

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> State:
        return State(float(self.times[k]), self.u[k], self.u[k] ** self.params.m, self.eps)

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > rtol * max(1.0, abs(t)):
            raise KeyError(f"no recorded state at t={t}")
        return k

    def u_at(self, t: float) -> np.ndarray:
        """Nodal ``u`` at time ``t``, linear in time between recorded states."""
        times = self.times
        if t <= times[0]:
            return self.u[0].copy()
        if t >= times[-1]:
            return self.u[-1].copy()
        k = int(np.searchsorted(times, t)) - 1
        w = (t - times[k]) / (times[k + 1] - times[k])
        return (1.0 - w) * self.u[k] + w * self.u[k + 1]

    @property
    def extinction_time(self) -> float:
        """First recorded time with ``sup u`` below the threshold."""
        if not self.extinct:
            raise NoExtinction("trajectory never reached the extinction threshold")
        return float(self.times[np.argmax(self.sup_u < self.threshold)])


def _evolve(u0s, op: FracOp, params: Params, dt0: float, t_end, *, eps=0.0, threshold=EXTINCTION_THRESHOLD,
            checkpoints=(), reaction=0.0, max_steps=200_000, dt_first=None):
    """Advance several initial data in lockstep with one shared step sequence."""
    states = [make_state(0.0, as_values(u0, op.grid), params, eps) for u0 in u0s]
    stops = sorted(float(c) for c in checkpoints if c > 0)
    if t_end is not None:
        stops = [c for c in stops if c < t_end] + [float(t_end)]
    records = [[s.u.copy()] for s in states]
    times, dts, iters = [0.0], [0.0], [0]
    dt = min(dt0, dt_first) if dt_first else dt0
    extinct = all(s.u.max() < threshold for s in states)
    t = 0.0
    n = 0
    while not extinct:
        if t_end is not None and t >= t_end * (1 - 1e-14):
            break
        if n >= max_steps:
            log.warning("stopping after %d steps at t=%.6g", n, t)
            break
        stop = next((c for c in stops if c > t * (1 + 1e-14) + 1e-300), None)
        h = dt if stop is None else min(dt, stop - t)
        landing = stop is not None and h >= stop - t
        try:
            new = [step(s, h, op, params, reaction) for s in states]
        except NewtonDivergence:
            dt = 0.5 * h
            if dt < DT_MIN:
                raise StepCollapse(f"time step underflow at t={t:.6g}")
            continue
        states = new
        t = stop if landing else t + h
        states = [State(t, s.u, s.v, s.eps, s.newton_iters) for s in states]
        it = max(s.newton_iters for s in states)
        for rec, s in zip(records, states):
            rec.append(s.u)
        times.append(t)
        dts.append(h)
        iters.append(it)
        n += 1
        if it <= EASY_ITERS and not landing:
            dt = min(dt0, DT_GROW * h)
        elif landing:
            dt = max(dt, h)
        extinct = all(s.u.max() < threshold for s in states)
    trajs = []
    for rec in records:
        trajs.append(Trajectory(params, op.grid.h, op.grid.dim, eps, np.array(times), np.array(rec),
                                np.array(dts), np.array(iters), extinct, threshold, _A=op.matrix))
    return trajs


def run(u0, op: FracOp, params: Params, dt0: float, t_end: float | None = None, *, eps: float = 0.0,
        threshold: float = EXTINCTION_THRESHOLD, checkpoints=(), max_steps: int = 200_000,
        dt_first: float | None = None) -> Trajectory:
    """Evolve ``u0`` until ``t_end`` or until ``sup u`` drops below ``threshold``.

    The step size starts at ``dt_first`` (default ``dt0``), halves on Newton
    failure, grows by 1.2 after easy steps and never exceeds ``dt0``.  Steps are
    shortened to land exactly on every time in ``checkpoints``.
    """
    return _evolve([u0], op, params, dt0, t_end, eps=eps, threshold=threshold, checkpoints=checkpoints,
                   max_steps=max_steps, dt_first=dt_first)[0]


def run_coupled(u0s, op: FracOp, params: Params, dt0: float, t_end: float | None = None, **kw) -> list[Trajectory]:
    """Evolve several data with the same accepted step sequence."""
    return _evolve(list(u0s), op, params, dt0, t_end, **kw)


def regularization_ladder(v0, op: FracOp, params: Params, levels=(4, 8, 16, 32), *, t_end: float,
                          dt0: float, checkpoints=()) -> list[Trajectory]:
    """Runs from ``v0 + 1/n`` with ``v`` floored at ``1/n`` for each ``n`` in ``levels``.

    The exterior stays zero; only the interior data and the floor are lifted.
    """
    v0 = as_values(v0, op.grid)
    if np.any(v0 < 0):
        raise ValueError("v0 must be non-negative")
    out = []
    for n in levels:
        floor_v = 1.0 / n
        u0 = (v0 + floor_v) ** params.p
        out.append(run(u0, op, params, dt0, t_end, eps=floor_v**params.p, checkpoints=checkpoints))
    return out


def estimate_extinction(traj: Trajectory, params: Params, *, decade: float = 0.1) -> tuple[float, float]:
    """Fit ``sup u = K (T - t)^(1/(1-m))`` with the exponent fixed; return ``(T, r^2)``.

    Uses the samples above the threshold whose amplitude has dropped below
    ``decade * sup u(0)``; ``T`` maximizes the coefficient of determination of
    the log-log fit.
    """
    if not traj.extinct:
        raise NoExtinction("trajectory was cut off before extinction")
    return fit_extinction_time(traj.times, traj.sup_u, params.extinction_exp,
                               threshold=traj.threshold, decade=decade)


def fit_extinction_time(times, amp, exponent: float, *, threshold: float = 0.0,
                        decade: float = 0.1) -> tuple[float, float]:
    times = np.asarray(times, dtype=float)
    amp = np.asarray(amp, dtype=float)
    keep = (amp >= threshold) & (amp <= decade * amp[0]) & (amp > 0)
    if keep.sum() < 4:
        keep = amp > max(threshold, 0.0)
    t, y = times[keep], np.log(amp[keep])
    if len(t) < 3:
        raise NoExtinction("too few samples to fit the extinction time")
    span = t[-1] - t[0]
    ss_tot = float(np.sum((y - y.mean()) ** 2))

    def sse(T):
        r = y - exponent * np.log(T - t)
        return float(np.sum((r - r.mean()) ** 2))

    lo = t[-1] + 1e-12 * max(span, 1.0)
    hi = t[-1] + 2.0 * span
    res = minimize_scalar(sse, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14 * hi})
    T = float(res.x)
    r2 = 1.0 - sse(T) / ss_tot if ss_tot > 0 else 1.0
    return T, r2
