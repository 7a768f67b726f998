"""Acceptance criteria 1-17 at desk scale (dim 1, N = 256, sigma = 0.25, m = 0.5).

Each test records a one-line verdict in ``RESULTS``; the conftest prints them
after the run.  Run alone with ``python3 -m pytest tests/test_acceptance.py``.
"""

import os
import subprocess
import sys
import time

import pytest

from fracfde import harness

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


@pytest.fixture(scope="module")
def ctx():
    return harness.default_context(seed=0)


def timed(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t


def test_01_operator_cross_validation(ctx):
    rep, sec = timed(harness.c_dtn, ctx)
    e = rep.measured["rel_l2"]
    record(1, e[0] <= 3e-2 and e[1] < e[0] and sec <= 60,
           f"dtn vs A rel l2 {e[0]:.2e} -> {e[1]:.2e} (<= 3e-2, decreasing), {sec:.1f}s")


def test_02_monotone_structure(ctx):
    t = time.perf_counter()
    op = harness.assemble(ctx.grid, ctx.params)
    rep = harness.pr.check_operator(op)
    sec = time.perf_counter() - t
    m = rep.measured
    ok = m["max_offdiag"] <= 0 and m["row_identity_rel_err"] <= 1e-12 and m["min_eigenvalue"] > 0 and sec <= 10
    record(2, ok, f"max offdiag {m['max_offdiag']:.1e}, row identity {m['row_identity_rel_err']:.1e}, "
                  f"min eig {m['min_eigenvalue']:.3f}, {sec:.1f}s")


def test_03_l1_contraction(ctx):
    rep, sec = timed(harness.c_l1, ctx)
    worst = max(rep.measured["max_step_increase_l1"])
    record(3, rep.passed and rep.measured["pairs"] == 10 and worst <= 1e-8 and sec <= 60,
           f"10 pairs, worst per-step increase {worst:.1e} (<= 1e-8), {sec:.1f}s")


def test_04_comparison(ctx):
    rep = harness.c_comparison(ctx)
    worst = max(rep.measured["worst_violation"])
    record(4, worst <= 1e-9, f"{rep.measured['pairs']} ordered pairs, worst violation {worst:.1e} (<= 1e-9)")


def test_05_extinction(ctx):
    rep = harness.c_extinction(ctx)
    m = rep.measured
    ok = ctx.traj.extinct and ctx.traj.sup_u[-1] < 1e-8 and m["fit_r2"] >= 0.99 and m["exponent"] == 2.0
    record(5, ok, f"T*_est {m['T_star']:.4f}, r2 {m['fit_r2']:.4f} (>= 0.99), exponent {m['exponent']}")


def test_06_extinction_time_bound(ctx):
    rep = harness.c_bounds(ctx)
    m = rep.measured
    record(6, m["bound_ok"], f"C'_h {m['C_prime']:.4f}, min slack {m['min_slack']:.2e} "
                             f"(margin {m['margin']:.1e})")


def test_07_convexity_and_decay(ctx):
    rep = harness.c_bounds(ctx)
    m = rep.measured
    record(7, m["convexity_ok"] and m["decay_ok"],
           f"worst second difference {m['worst_second_difference']:.1e}, decay excess {m['decay_excess']:.1e}")


def test_08_energy_identity(ctx):
    rep = harness.c_energy(ctx)
    r = rep.measured["ratio"]
    record(8, rep.passed, f"defect ratio under dt halving {r:.3f} (<= 0.55)")


def test_09_scaling(ctx):
    rep = harness.c_scaling(ctx)
    d = rep.measured["discrepancy"]
    record(9, d[0] <= 5e-2 and d[1] < d[0], f"K {rep.measured['K']:.3f}, discrepancy {d[0]:.2e} -> {d[1]:.2e}")


def test_10_ladder(ctx):
    rep = harness.c_ladder(ctx)
    m = rep.measured
    g = m["l1_gaps"]
    ok = m["worst_increase"] <= 1e-9 and all(b < a for a, b in zip(g, g[1:]))
    record(10, ok, f"worst increase {m['worst_increase']:.2e}, L1 gaps {', '.join(f'{x:.3f}' for x in g)}")


def test_11_smoothing(ctx):
    rep = harness.c_smoothing(ctx)
    m = rep.measured
    record(11, rep.passed, f"slope {m['slope']:.3f} (>= {-m['exponent'] - 0.15}), C* spread {m['C_star_spread']:.2f} "
                           f"(<= 0.2)")


def test_12_barrier(ctx):
    rep = harness.c_barrier(ctx)
    m = rep.measured
    ok = rep.passed and abs(m["C"] - 0.0344) < 1e-4
    record(12, ok, f"C {m['C']:.5f}, min normalized defect {min(m['normalized_defect']):.3f} (>= -5e-2)")


def test_13_weak_residual(ctx):
    rep = harness.c_weak(ctx)
    record(13, rep.measured["gain"] >= 1.5, f"residual gain N 128 -> 256: {rep.measured['gain']:.2f} (>= 1.5)")


def test_14_profile(ctx):
    rep = harness.c_profile(ctx)
    m = rep.measured
    record(14, rep.passed, f"residual {m['residual']:.1e}, phi_min {m['phi_min']:.3f}, flow match "
                           f"{m['flow_match']:.1e}, g increase {m['g_max_increase']:.1e}")


def test_15_asymptotics(ctx):
    rep = harness.c_asymptotics(ctx)
    sep = harness.c_separable(ctx)
    e = rep.measured["e_k"]
    dec = len(e) >= 3 and all(b < a for a, b in zip(e, e[1:]))
    record(15, dec and sep.passed, f"tent e_k {', '.join(f'{x:.4f}' for x in e)}; separable max e_k "
                                   f"{sep.measured['e_k_max']:.1e} (<= 1e-6)")


def test_16_holder(ctx):
    rep = harness.c_holder(ctx)
    m = rep.measured
    record(16, rep.passed, f"kappa {m['kappa']:.3f}, beta {m['beta']:.3f} (in (0,1): {m['beta_in_unit_interval']}), "
                           f"beta change {m['beta_change']:.3f}, jump kappa {m['jump_kappa']:.2f}")


def test_17_reproducible_report(tmp_path):
    cmd = [sys.executable, "-m", "fracfde.cli", "properties", "--seed", "3"]
    env = {**os.environ, "FRACFDE_OUT": ""}
    for d in ("a", "b"):
        subprocess.run(cmd + ["--out", str(tmp_path / d)], env=env, capture_output=True, check=False)
    a = (tmp_path / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    record(17, a == b and len(a) > 0, f"two runs, report.json {len(a)} bytes, identical: {a == b}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
