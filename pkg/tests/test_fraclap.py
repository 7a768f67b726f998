import numpy as np
import pytest

from fracfde.core import GridFunction, bump, make_grid, make_params, tent
from fracfde.errors import GridMismatch
from fracfde.fraclap import (apply, assemble, dump, exterior_tail_1d, load, normalization_constant, seminorm_hs,
                             solve_dirichlet)
from fracfde.properties import barrier_lower_bound, barrier_profile
from oracles import fraclap_at, seminorm_double, tent_fn


def test_normalization_constant_value():
    # 4^s Gamma(1/2+s) / (sqrt(pi) |Gamma(-s)|) at s = 1/4
    from math import gamma, pi, sqrt
    ref = 4**0.25 * gamma(0.75) / (sqrt(pi) * abs(gamma(-0.25)))
    assert normalization_constant(1, 0.25) == pytest.approx(ref, rel=1e-14)
    assert normalization_constant(1, 0.25) == pytest.approx(0.1995, abs=1e-4)


def test_structure(op):
    A = op.matrix
    assert np.array_equal(A, A.T)
    off = A - np.diag(np.diag(A))
    assert off.max() <= 0
    rows = A.sum(axis=1)
    np.testing.assert_allclose(rows, op.tail, rtol=1e-12)
    assert np.all(op.tail > 0)
    assert np.linalg.eigvalsh(A).min() > 0


def test_exterior_tail_closed_form(grid, params):
    C = normalization_constant(1, 0.25)
    x = grid.axis
    ref = C * ((1 - x) ** -0.5 + (1 + x) ** -0.5) / 0.5
    np.testing.assert_allclose(C * exterior_tail_1d(grid, 0.25), ref, rtol=1e-12)


def test_zero_and_linearity(op, grid):
    assert np.all(apply(op, grid.zeros()).values == 0)
    rng = np.random.default_rng(3)
    f, g = rng.random(grid.size), rng.random(grid.size)
    np.testing.assert_allclose(op @ (f + g), op @ f + op @ g, atol=1e-10)


def test_even_data_even_image(op, grid):
    Af = (op @ bump(grid, 0.0, 0.4)).copy()
    np.testing.assert_allclose(Af, Af[::-1], rtol=1e-12, atol=1e-12)


def test_grid_mismatch(op):
    with pytest.raises(GridMismatch):
        apply(op, GridFunction(make_grid(1.0, 32), np.zeros(32)))


def test_tent_against_quadrature_at_origin(params):
    # N = 255 puts a node on the kink at x = 0 (h = 2/256)
    g = make_grid(1.0, 255)
    A = assemble(g, params)
    Af = A @ tent(g)
    ref = fraclap_at(tent_fn(0.5), 0.0, 0.25, (-0.5, 0.5), kinks=(0.0,))
    assert Af[127] == pytest.approx(ref, rel=1e-2)


def test_tent_against_quadrature_other_nodes(params):
    g = make_grid(1.0, 255)
    Af = assemble(g, params) @ tent(g)
    for i in (20, 63, 100, 160, 191, 230):
        ref = fraclap_at(tent_fn(0.5), g.axis[i], 0.25, (-0.5, 0.5), kinks=(0.0,))
        assert Af[i] == pytest.approx(ref, rel=1e-2, abs=1e-3)


def test_convergence_order(params):
    f = lambda x: max(0.0, 1.0 - (x / 0.5) ** 2) ** 3
    ref = fraclap_at(f, 0.0, 0.25, (-0.5, 0.5))
    errs = []
    Ns = (63, 127, 255, 511)
    for N in Ns:
        g = make_grid(1.0, N)
        vals = np.array([f(x) for x in g.axis])
        errs.append(abs((assemble(g, params) @ vals)[N // 2] - ref))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0), orders


def test_seminorm_matches_double_integral(params):
    g = make_grid(1.0, 128)
    A = assemble(g, params)
    s = seminorm_hs(A, tent(g))
    ref = seminorm_double(tent_fn(0.5), 0.25, (-0.5, 0.5), kinks=(0.0,))
    assert s == pytest.approx(ref, rel=2e-2)


def test_seminorm_homogeneity(op, grid):
    f = bump(grid, 0.1, 0.5).values
    assert seminorm_hs(op, 3 * f) == pytest.approx(9 * seminorm_hs(op, f), rel=1e-12)
    assert seminorm_hs(op, grid.zeros()) == 0


def test_solve_inverse_consistency(op, grid):
    g = np.random.default_rng(1).random(grid.size)
    np.testing.assert_allclose(solve_dirichlet(op, op @ g).values, g, atol=1e-10)


def test_inverse_positivity(op, grid):
    rng = np.random.default_rng(2)
    for _ in range(5):
        assert solve_dirichlet(op, rng.random(grid.size)).values.min() >= 0


def test_fixed_nodes_maximum_principle(op, grid):
    core = np.abs(grid.axis) <= 0.2
    psi = solve_dirichlet(op, np.zeros(grid.size), core, 1.0).values
    assert np.all(psi[core] == 1.0)
    assert psi.min() >= 0 and psi.max() <= 1 + 1e-12


def test_barrier_profile_lower_bound(op, grid, params):
    X = barrier_profile(grid, params, 1.0)
    lb = barrier_lower_bound(params, 1.0)
    assert (op @ X**params.m).min() >= lb - 1e-2


def test_dump_load_roundtrip(tmp_path, op):
    path = tmp_path / "op.bin"
    dump(op, path)
    back = load(path)
    assert np.array_equal(back.matrix, op.matrix)
    np.testing.assert_allclose(back.tail, op.tail, rtol=1e-12)
    assert back.grid.same_as(op.grid)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(60))
    with pytest.raises(ValueError):
        load(path)


def test_two_dimensional_structure():
    p = make_params(0.8, 0.25, 2)
    g = make_grid(1.0, 12, 2)
    A = assemble(g, p).matrix
    assert np.array_equal(A, A.T)
    assert (A - np.diag(np.diag(A))).max() <= 0
    assert np.linalg.eigvalsh(A).min() > 0
    f = bump(g, (0.0, 0.0), 0.6).values
    Af = A @ f
    # four-fold symmetry of radial data
    sq = Af.reshape(12, 12)
    np.testing.assert_allclose(sq, sq.T, rtol=1e-10)
    np.testing.assert_allclose(sq, sq[::-1], rtol=1e-10)
