import math

import numpy as np
import pytest

from ckn_branches import continuation as cn
from ckn_branches.analytic import ParameterError, j_star, mu_fs

P, D = 2.8, 5
MFS = mu_fs(P, D)


def small_grid(mu, n_s=301, n_zeta=32):
    g = cn.default_cylinder_grid(P, D, mu)
    return cn.CylinderGrid(g.S, n_s, n_zeta)


def test_grid_validation():
    with pytest.raises(ParameterError):
        cn.CylinderGrid(10.0, 800, 32)
    with pytest.raises(ParameterError):
        cn.CylinderGrid(10.0, 801, 16)
    with pytest.raises(ParameterError):
        cn.CylinderGrid(-1.0, 801, 32)
    g = cn.CylinderGrid(10.0, 801, 32)
    assert g.m == 401 and g.s[-1] == pytest.approx(10.0)


def test_zonal_laplacian_on_harmonics():
    from ckn_branches.analytic import harmonic_f
    ops = cn.grid_operators(cn.CylinderGrid(5.0, 11, 40), D)
    for k in range(4):
        f = harmonic_f(k, D, ops.x)
        assert np.allclose(ops.Lz @ f, -k * (k + D - 2) * f, atol=1e-8)


def test_symmetric_energy_matches_closed_form_and_converges():
    mu = 3.0
    exact = float(j_star(mu, P, 1.0))
    errs = []
    for n_s in (201, 401):
        pt = cn.solve_symmetric(mu, P, D, small_grid(mu, n_s))
        assert pt.symmetric
        errs.append(abs(pt.q - exact))
    assert pt.tau == pytest.approx((P - 2) / (P + 2) * mu, rel=1e-4)
    assert errs[1] < 1e-5 * exact
    # fourth-order differences in s
    assert errs[0] / errs[1] > 12


def test_below_threshold_only_symmetric():
    mu = 0.9 * MFS
    pt = cn.descent_to_nonsymmetric(mu, P, D, small_grid(mu))
    assert pt.symmetric
    assert pt.q == pytest.approx(float(j_star(mu, P, 1.0)), rel=1e-4)


def test_descent_is_monotone_and_breaks_symmetry():
    mu = 1.3 * MFS
    g = small_grid(mu)
    ops = cn.grid_operators(g, D)
    u, _, _ = cn.symmetric_extremal(mu, P)
    us = u(g.s)
    seed = np.outer(us, np.ones(g.n_zeta)) + 0.3 * np.outer(us, ops.f1)
    A = ops.A(mu)
    hist = []
    v = cn._nehari(ops, A, np.maximum(seed, 0).ravel(), P)
    v, _ = cn._descent(ops, A, cn.splu(A), v, P, 200, hist)
    assert len(hist) > 5
    assert np.all(np.diff(hist) <= 1e-12 * hist[0])
    pt = cn.solve_el(mu, P, D, cn.CylinderField(g, v), g)
    assert not pt.symmetric
    assert pt.q < float(j_star(mu, P, 1.0))
    scale = max(1.0, pt.field.values.max() ** (P - 1))
    assert pt.residual_norm <= 1e-9 * scale


def test_branch_near_bifurcation():
    mus = tuple(MFS + dm for dm in (0.05, 0.1, 0.15))
    br = cn.continue_branch(mus[0], mus[-1], cn.StepPolicy(mu_values=mus), P, D)
    assert len(br.points) == 3 and not br.truncated
    assert all(not pt.symmetric for pt in br.points)
    assert br.mu_bifurcation_estimate == pytest.approx(MFS, rel=1e-2)
    # branch energy sits below the symmetric one
    for pt in br.points:
        assert pt.q < float(j_star(pt.mu, P, 1.0))
    delta = cn.tangency_check(br, 1.0)
    assert abs(delta) < 0.05


def test_continue_rejects_start_below_threshold():
    with pytest.raises(ParameterError):
        cn.continue_branch(MFS - 0.5, MFS + 1, None, P, D)


def test_reparametrize_theta_one_is_identity():
    mus = (MFS + 0.1,)
    br = cn.continue_branch(mus[0], mus[0], cn.StepPolicy(mu_values=mus), P, D)
    mu, lam, J = cn.reparametrize(br, 1.0)
    assert lam[0] == mu[0] and J[0] == pytest.approx(br.points[0].J1)
    with pytest.raises(ParameterError):
        cn.reparametrize(br, 0.5)


def test_dump_round_trip(tmp_path):
    g = small_grid(5.0, 21)
    rng = np.random.default_rng(0)
    fld = cn.CylinderField(g, rng.random((g.m, g.n_zeta)))
    b, j = cn.dump_field(fld, tmp_path / "f", mu=5.0, p=P, d=D)
    raw = np.fromfile(b, dtype="<f8")
    assert raw.size == g.n_s * g.n_zeta
    back = cn.load_field(tmp_path / "f")
    assert back.grid == g
    assert np.array_equal(back.values, fld.values)
    full = raw.reshape(g.n_s, g.n_zeta)
    assert np.array_equal(full[0], full[-1])


def test_regrid_preserves_smooth_field():
    mu = 5.0
    g1 = small_grid(mu, 201, 32)
    g2 = cn.CylinderGrid(g1.S * 1.1, 301, 40)
    sym = cn.symmetric_field(mu, P, g1)
    out = cn.regrid(sym, g2, D)
    ref = cn.symmetric_field(mu, P, g2)
    assert np.abs(out.values - ref.values).max() < 1e-3 * ref.values.max()


def test_concentrated_seed_energy_near_gn_limit():
    from ckn_branches.classify import asymptotic_constant, k_gn
    from ckn_branches.analytic import vartheta
    mu = 20 * MFS
    g = cn.default_cylinder_grid(P, D, mu)
    q = cn.q_energy(cn.concentrated_seed(mu, P, D, g), mu, P, D)
    lim = asymptotic_constant(1.0, P, D, k_gn(P, D))
    assert q * mu ** (vartheta(P, D) - 1) == pytest.approx(lim, rel=0.05)
