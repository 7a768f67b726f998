import numpy as np
import pytest

from fracfde.core import tent
from fracfde.errors import NoExtinction
from fracfde.evolution import estimate_extinction, run
from fracfde.profile import (check_asymptotics, check_positivity_lower_bound, discrete_amplitude, functional_F,
                             nehari_scale, profile_residual, rescaled_flow, separable_data, solve_profile)


@pytest.fixture(scope="module")
def prof(small_op, params):
    return solve_profile(small_op, params)


def test_rescaling_constant(params):
    # c^(1-p) = lam with p = lam = 2
    c = params.lam ** (1 / (1 - params.p))
    assert c == 0.5


def test_profile_default(op, params):
    res = solve_profile(op, params)
    assert res.residual <= 1e-8
    assert res.iterations <= 200
    assert res.phi.min() > 0
    np.testing.assert_allclose(res.phi, res.phi[::-1], rtol=1e-9)
    assert res.phi.max() == pytest.approx(0.69996, rel=1e-4)
    assert profile_residual(res.phi, op, params) == res.residual


def test_homogeneity_of_residual(prof, small_op, params):
    # psi = phi / k solves A psi = lam k^(p-1) psi^p
    k = prof.phi.max()
    psi = prof.phi / k
    rhs = params.lam * k ** (params.p - 1) * psi**params.p
    np.testing.assert_allclose(small_op @ psi, rhs, rtol=1e-8)


def test_nehari_fixes_profile(prof, small_op, params):
    np.testing.assert_allclose(nehari_scale(3.0 * prof.phi, small_op, params), prof.phi, rtol=1e-6)


def test_functional(prof, small_op, params):
    assert functional_F(np.zeros(small_op.size), small_op, params) == 0.0
    cs = np.linspace(0.05, 3.0, 120)
    F = np.array([functional_F(c * prof.phi, small_op, params) for c in cs])
    k = int(np.argmax(F))
    assert 0 < k < len(cs) - 1
    assert np.all(np.diff(F[:k + 1]) > 0) and np.all(np.diff(F[k:]) < 0)
    assert cs[k] == pytest.approx(1.0, abs=0.03)


def test_stationary_flow(prof, small_op, params):
    f = prof.f(params)
    flow = rescaled_flow(f, small_op, params, 5.0, T_star=1.0, dtau=0.1)
    assert np.max(np.abs(flow.ubar - f)) <= 1e-6


def test_flow_from_tent(small_op, params, prof):
    u0 = tent(small_op.grid).values
    T, _ = estimate_extinction(run(u0, small_op, params, 2e-3), params)
    flow = rescaled_flow(u0, small_op, params, 8.0, T_star=T, dtau=0.1, shoot=True, phi_sup=prof.phi.max())
    g0 = abs(flow.g[0])
    assert np.max(np.diff(flow.g)) <= 1e-8 * g0
    dist = []
    for tau in (2.0, 4.0, 6.0):
        k = int(np.argmin(np.abs(flow.tau - tau)))
        dist.append(np.max(np.abs(flow.vbar[k] - prof.phi)))
    assert dist[0] > dist[1] > dist[2]
    lim = flow.limit_profile(small_op)
    assert np.linalg.norm(lim - prof.phi) / np.linalg.norm(prof.phi) <= 1e-3


def test_flow_dissipation_rate(prof, small_op, params):
    u0 = tent(small_op.grid).values
    flow = rescaled_flow(u0, small_op, params, 1.0, T_star=1.3, dtau=0.01)
    m, h = params.m, small_op.grid.h
    v = flow.vbar
    dg = np.diff(flow.g) / np.diff(flow.tau)
    vt = np.diff(v, axis=0) / np.diff(flow.tau)[:, None]
    vm = 0.5 * (v[1:] + v[:-1])
    rate = -(1 / m) * np.sum(vm ** ((1 - m) / m) * vt**2, axis=1) * h
    np.testing.assert_allclose(dg[10:], rate[10:], rtol=5e-2)


def test_discrete_amplitude_recursion(params):
    a = discrete_amplitude(2.0, [0.1, 0.05, 0.2], params)
    for k, dt in enumerate([0.1, 0.05, 0.2]):
        assert a[k + 1] + dt * params.lam * a[k + 1] ** params.m == pytest.approx(a[k], rel=1e-13)


def test_asymptotics_separable(prof, small_op, params):
    rep = check_asymptotics(separable_data(prof, params, 1.0), small_op, params, profile=prof)
    assert max(rep.measured["e_k"]) <= 1e-6


def test_asymptotics_tent(small_op, params, prof):
    rep = check_asymptotics(tent(small_op.grid).values, small_op, params, profile=prof)
    assert rep.passed and len(rep.measured["e_k"]) >= 3


def test_asymptotics_needs_extinction(small_op, params, prof):
    tr = run(tent(small_op.grid), small_op, params, 1e-2, 0.2)
    with pytest.raises(NoExtinction):
        check_asymptotics(tent(small_op.grid).values, small_op, params, profile=prof, traj=tr)


def test_positivity_bound_separable(prof, small_op, params):
    rep = check_positivity_lower_bound(separable_data(prof, params, 1.0), small_op, params)
    assert rep.passed
    assert rep.measured["precondition_Av0_nonneg"]
    assert rep.measured["C"] > 0 and 0 <= rep.measured["psi_min"] <= rep.measured["psi_max"] <= 1 + 1e-12


def test_positivity_tent_reports_sup(small_op, params):
    rep = check_positivity_lower_bound(tent(small_op.grid).values, small_op, params)
    assert rep.measured["c0"] > 0
