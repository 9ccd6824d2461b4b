import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ckn_branches import analytic as an


def sech_int(q):
    return 2 * quad(lambda s: (2 * np.exp(-s) / (1 + np.exp(-2 * s))) ** q, 0, np.inf,
                    epsabs=1e-14, epsrel=1e-13)[0]


def test_gamma_f_special_values():
    assert an.gamma_f(1.0) == pytest.approx(math.pi, abs=1e-14)
    assert an.gamma_f(2.0) == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(an.ParameterError):
        an.gamma_f(0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 12.0))
def test_gamma_f_matches_quadrature(q):
    assert an.gamma_f(q) == pytest.approx(sech_int(q), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(2.1, 5.9))
def test_gamma_integrals_against_quadrature(p):
    gi = an.gamma_integrals(p)
    k = 2 / (p - 2)
    w = lambda s: (2 * np.exp(-s) / (1 + np.exp(-2 * s))) ** k
    dw = lambda s: -k * np.tanh(s) * w(s)
    I2 = 2 * quad(lambda s: w(s) ** 2, 0, np.inf, epsrel=1e-12)[0]
    Ip = 2 * quad(lambda s: w(s) ** p, 0, np.inf, epsrel=1e-12)[0]
    J2 = 2 * quad(lambda s: dw(s) ** 2, 0, np.inf, epsrel=1e-12)[0]
    assert gi.I2 == pytest.approx(I2, rel=1e-9)
    assert gi.Ip == pytest.approx(Ip, rel=1e-9)
    assert gi.J2 == pytest.approx(J2, rel=1e-9)
    assert gi.Ip / gi.I2 == pytest.approx(4 / (p + 2), rel=1e-12)


def test_vartheta_values():
    assert an.vartheta(2.8, 5) == pytest.approx(0.7142857, abs=1e-6)
    assert an.vartheta(3.15, 5) == pytest.approx(0.91269841, abs=1e-6)
    assert an.vartheta(an.critical_exponent(5), 5) == pytest.approx(1.0)


def test_problem_params_validation():
    an.ProblemParams(5, 2.8, an.vartheta(2.8, 5))
    for bad in [dict(d=2, p=2.8), dict(d=5, p=2.0), dict(d=5, p=3.4), dict(d=5, p=2.8, theta=0.5),
                dict(d=5, p=2.8, theta=1.01)]:
        with pytest.raises(an.ParameterError):
            an.ProblemParams(**bad)
    with pytest.raises(an.ParameterError, match=r"\[0.714286, 1\]"):
        an.ProblemParams(5, 2.8, 0.6)


def test_ckn_to_cylinder_and_weights():
    with pytest.raises(an.ParameterError):
        an.CknWeights(a=2.0, b=0.5, d=5)  # a above a_c
    p, lam = an.ckn_to_cylinder(an.CknWeights(a=-1.0, b=-0.5, d=5))
    assert p == pytest.approx(2.5) and lam == pytest.approx(6.25)
    with pytest.raises(an.ParameterError):
        an.CknWeights(a=-1.0, b=0.5, d=5)


def test_mu_fs_and_lambda_fs():
    assert an.mu_fs(2.8, 5) == pytest.approx(16 / 3.84)
    assert an.mu_fs(2.8, 5) == pytest.approx(4.1667, abs=1e-4)
    assert an.lambda_fs(2.8, 1.0, 5) == pytest.approx(an.mu_fs(2.8, 5))


@settings(max_examples=30, deadline=None)
@given(st.floats(2.05, 3.3), st.floats(0.1, 40.0))
def test_symmetric_extremal_solves_ode(p, mu):
    u, alpha, beta = an.symmetric_extremal(mu, p)
    s = np.linspace(-3, 3, 61) / beta
    h = 1e-3 / beta
    upp = (u(s + h) - 2 * u(s) + u(s - h)) / h ** 2
    res = -upp + mu * u(s) - u(s) ** (p - 1)
    assert np.max(np.abs(res)) < 1e-4 * max(1.0, alpha ** (p - 1))
    # far tail must not overflow
    assert np.isfinite(u(np.array([1e4]))).all()


@settings(max_examples=30, deadline=None)
@given(st.floats(2.05, 3.3), st.floats(0.2, 30.0))
def test_symmetric_branch_closed_forms(p, mu):
    from scipy.integrate import simpson
    u, _, beta = an.symmetric_extremal(mu, p)
    s = np.linspace(-40, 40, 400001) / beta
    v = u(s)
    dv = np.gradient(v, s, edge_order=2)
    tau = simpson(dv ** 2, x=s) / simpson(v ** 2, x=s)
    nu = simpson(v ** 2, x=s) / simpson(v ** p, x=s) ** (2 / p)
    assert an.tau_star(mu, p) == pytest.approx(tau, rel=1e-5)
    assert an.nu_star(mu, p) == pytest.approx(nu, rel=1e-7)
    th = 0.5 * (an.vartheta(p, 5) + 1) if p < an.critical_exponent(5) else 1.0
    pt = an.symmetric_branch(mu, an.ProblemParams(5, p, th))
    assert pt.j_theta == pytest.approx(float(an.j_star(mu, p, th)), rel=1e-12)
    assert pt.lambda_theta == pytest.approx(float(an.lambda_star(mu, p, th)), rel=1e-12)
    assert float(an.mu_of_lambda(pt.lambda_theta, p, th)) == pytest.approx(mu, rel=1e-12)


def test_lambda1_vanishes_at_mu_fs():
    pp = an.ProblemParams(5, 2.8)
    assert an.lambda1(pp.mu_fs, pp) == pytest.approx(0.0, abs=1e-12)
    assert an.lambda1(pp.mu_fs * 0.9, pp) > 0 > an.lambda1(pp.mu_fs * 1.1, pp)


@pytest.mark.parametrize("d", [3, 4, 5, 7])
def test_harmonic_identities(d):
    x, w = an.sphere_weight_nodes(d, 40)
    hc = an.harmonic_constants(d)
    f = [an.harmonic_f(k, d, x) for k in range(4)]
    gram = np.array([[np.sum(w * a * b) for b in f] for a in f])
    assert np.allclose(gram, np.eye(4), atol=1e-12)
    assert np.max(np.abs(f[1] ** 2 - f[0] - hc.kappa_d * f[2])) < 1e-10
    assert np.sum(w * f[1] ** 4) == pytest.approx(hc.f1_fourth_moment, abs=1e-10)
    assert np.sum(w * f[1] ** 4) == pytest.approx(3 * d / (d + 2), abs=1e-10)


def test_harmonics_are_eigenfunctions():
    # Laplace-Beltrami on zonal functions: (1-x^2) f'' - (d-1) x f'
    d = 5
    x = np.linspace(-0.9, 0.9, 11)
    h = 1e-4
    for k in range(4):
        f = lambda t: an.harmonic_f(k, d, t)
        fpp = (f(x + h) - 2 * f(x) + f(x - h)) / h ** 2
        fp = (f(x + h) - f(x - h)) / (2 * h)
        lap = (1 - x * x) * fpp - (d - 1) * x * fp
        assert np.allclose(lap, -k * (k + d - 2) * f(x), atol=1e-5)


def test_symmetry_bounds_ordering():
    lo1, lo2, up = an.symmetry_bounds(2.8, 5)
    assert max(lo1, lo2) < up
