"""Named verification checks run on one configuration.

:func:`run_checks` evaluates a selection of checks against a shared
:class:`Context` (grid, operator, tent run, profile) and returns their reports
in a fixed order.  Random data come from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

import logging
from functools import cached_property

import numpy as np

from . import holder as hd
from . import profile as pf
from . import properties as pr
from .core import Grid, Params, make_grid, make_params, tent
from .errors import FracFDEError
from .evolution import EXTINCTION_THRESHOLD, estimate_extinction, run
from .fraclap import assemble
from .report import PropertyReport

log = logging.getLogger(__name__)

DEFAULT_DT0 = 2e-3


class Context:
    def __init__(self, params: Params, grid: Grid, *, dt0: float = DEFAULT_DT0, seed: int = 0,
                 threshold: float = EXTINCTION_THRESHOLD):
        self.params = params
        self.grid = grid
        self.dt0 = dt0
        self.seed = seed
        self.threshold = threshold

    @property
    def L(self) -> float:
        return self.grid.L

    @property
    def width(self) -> float:
        return 0.5 * self.grid.L

    def tent_func(self, x):
        return max(0.0, 1.0 - abs(x) / self.width)

    @cached_property
    def op(self):
        return assemble(self.grid, self.params)

    @cached_property
    def u0(self) -> np.ndarray:
        return tent(self.grid, self.width).values

    @cached_property
    def traj(self):
        return run(self.u0, self.op, self.params, self.dt0, threshold=self.threshold)

    @cached_property
    def T_star(self) -> float:
        return estimate_extinction(self.traj, self.params)[0]

    @cached_property
    def profile(self):
        return pf.solve_profile(self.op, self.params)

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


def _pairs(ctx: Context, n: int, salt: int, ordered: bool):
    rng = ctx.rng(salt)
    out = []
    for _ in range(n):
        a = pr.random_bumps(ctx.grid, rng)
        b = pr.random_bumps(ctx.grid, rng)
        out.append((a, a + b if ordered else b))
    return out


def _merge(name: str, reports, keys, ref: str, seed: int) -> PropertyReport:
    measured = {k: [r.measured[k] for r in reports] for k in keys}
    measured["pairs"] = len(reports)
    return PropertyReport(name, all(r.passed for r in reports), measured, reports[0].tolerance, ref, seed=seed)


def c_dtn(ctx):
    return pr.check_dtn(ctx.params, ctx.L)


def c_operator(ctx):
    return pr.check_operator(ctx.op)


def c_l1(ctx):
    reps = [pr.check_l1_contraction(a, b, ctx.op, ctx.params) for a, b in _pairs(ctx, 10, 1, False)]
    return _merge("l1_contraction", reps, ("max_step_increase_l1", "max_step_increase_plus"), "Lemma 2.2", ctx.seed)


def c_comparison(ctx):
    reps = [pr.check_comparison(a, b, ctx.op, ctx.params) for a, b in _pairs(ctx, 10, 2, True)]
    return _merge("comparison", reps, ("worst_violation",), "Lemma 3.2", ctx.seed)


def c_extinction(ctx):
    return pr.check_extinction(ctx.traj, ctx.params)


def c_bounds(ctx):
    return pr.check_extinction_bounds(ctx.traj, ctx.op, ctx.params, T_star=ctx.T_star)


def c_energy(ctx):
    return pr.check_energy_identity(ctx.u0, ctx.op, ctx.params)


def c_scaling(ctx):
    return pr.check_scaling(ctx.tent_func, ctx.params, 2.0, 1.0, L=ctx.L, N=ctx.grid.N)


def c_ladder(ctx):
    return pr.check_ladder(ctx.u0 ** ctx.params.m, ctx.op, ctx.params)


def c_smoothing(ctx):
    return pr.check_smoothing_exponent(ctx.params, ctx.op)


def c_barrier(ctx):
    return pr.check_barrier(ctx.params, ctx.op, T_star=ctx.T_star)


def c_weak(ctx):
    return pr.check_weak_residual(ctx.tent_func, ctx.params, L=ctx.L)


def c_sobolev(ctx):
    return pr.check_sobolev(ctx.op, ctx.params, seed=ctx.seed)


def c_profile(ctx):
    return pf.check_profile(ctx.op, ctx.params, u0=ctx.u0, T_guess=ctx.T_star, profile=ctx.profile)


def c_asymptotics(ctx):
    return pf.check_asymptotics(ctx.u0, ctx.op, ctx.params, profile=ctx.profile, traj=ctx.traj)


def c_separable(ctx, tol: float = 1e-6):
    u0 = pf.separable_data(ctx.profile, ctx.params, 1.0)
    rep = pf.check_asymptotics(u0, ctx.op, ctx.params, dt0=ctx.dt0, profile=ctx.profile)
    worst = max(rep.measured["e_k"])
    rep.name = "asymptotics_separable"
    rep.passed = bool(worst <= tol)
    rep.measured["e_k_max"] = worst
    rep.tolerance = {"e_k": tol}
    return rep


def c_positivity(ctx):
    return pf.check_positivity_lower_bound(ctx.u0, ctx.op, ctx.params, traj=ctx.traj)


def holder_point(ctx):
    """Default measurement point: off-center, ball of radius L/4 inside the domain."""
    return 0.25 * ctx.L, 0.5 * ctx.T_star, 0.25 * ctx.L


def jump_field(grid: Grid, x0: float, times) -> hd.SpaceTimeField:
    """Frozen step ``v = 1{x > x0}``."""
    pts = grid.points.reshape(grid.size, -1)
    v = np.tile((pts[:, 0] > x0).astype(float), (len(times), 1))
    return hd.SpaceTimeField(pts, np.asarray(times, dtype=float), v)


def holder_measurements(ctx, levels: int = 3):
    x0, t0, r0 = holder_point(ctx)
    base = hd.fit_beta(hd.field_from(ctx.traj, ctx.grid), (x0, t0), r0, levels, ctx.params)
    fine_grid = make_grid(ctx.L, 2 * ctx.grid.N)
    fine_op = assemble(fine_grid, ctx.params)
    fine_traj = run(tent(fine_grid, ctx.width).values, fine_op, ctx.params, ctx.dt0 / 2, threshold=ctx.threshold)
    t0f = 0.5 * estimate_extinction(fine_traj, ctx.params)[0]
    fine = hd.fit_beta(hd.field_from(fine_traj, fine_grid), (x0, t0f), r0, levels, ctx.params)
    jump = hd.fit_beta(jump_field(ctx.grid, x0 + 1e-3 * ctx.L, ctx.traj.times), (x0, t0), r0, levels, ctx.params)
    return base, fine, jump


def c_holder(ctx, stability: float = 0.1):
    base, fine, jump = holder_measurements(ctx)
    beta_ok = 0.0 < base.beta < 1.0
    stable = abs(base.beta - fine.beta) <= stability
    control = jump.kappa >= 1.0 and not jump.passed
    ok = base.passed and beta_ok and stable and control
    x0, t0, r0 = holder_point(ctx)
    return PropertyReport("holder", bool(ok),
                          {"kappa": base.kappa, "beta": base.beta, "fit_r2": base.fit_r2, "omega": base.omegas,
                           "radii": base.radii, "ratios": base.ratios, "kappa_ok": base.passed,
                           "beta_in_unit_interval": bool(beta_ok), "beta_refined": fine.beta,
                           "beta_change": abs(base.beta - fine.beta), "jump_kappa": jump.kappa,
                           "jump_flagged": bool(control), "x0": x0, "t0": t0, "r0": r0, "M": base.M},
                          {"kappa": "< 1", "beta": "(0, 1)", "beta_change": stability},
                          "Theorem 1.2", notes="intrinsic depth r^(2 sigma) omega^(1/m - 1), A = 1")


CHECKS = {
    "dtn": c_dtn,
    "operator": c_operator,
    "l1_contraction": c_l1,
    "comparison": c_comparison,
    "extinction": c_extinction,
    "extinction_bounds": c_bounds,
    "energy_identity": c_energy,
    "scaling": c_scaling,
    "regularization_ladder": c_ladder,
    "smoothing_exponent": c_smoothing,
    "barrier": c_barrier,
    "weak_residual": c_weak,
    "sobolev": c_sobolev,
    "profile": c_profile,
    "asymptotics": c_asymptotics,
    "asymptotics_separable": c_separable,
    "positivity_lower_bound": c_positivity,
    "holder": c_holder,
}

DIM1_ONLY = {"dtn", "scaling", "weak_residual", "sobolev", "holder"}


def run_checks(ctx: Context, names=None) -> list[PropertyReport]:
    """Reports in registry order; a check that raises becomes a failed report."""
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {', '.join(unknown)}")
    out = []
    for name in CHECKS:
        if name not in names:
            continue
        try:
            rep = CHECKS[name](ctx)
        except (FracFDEError, ValueError, ArithmeticError) as exc:
            log.warning("check %s raised %s", name, exc)
            rep = PropertyReport(name, False, {}, {}, notes=f"{type(exc).__name__}: {exc}", seed=ctx.seed)
        if rep.seed is None:
            rep.seed = ctx.seed
        out.append(rep)
    return out


def default_context(m: float = 0.5, sigma: float = 0.25, dim: int = 1, L: float = 1.0, N: int = 256, **kw) -> Context:
    return Context(make_params(m, sigma, dim), make_grid(L, N, dim), **kw)
