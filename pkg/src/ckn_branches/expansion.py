"""Bifurcation expansion of the non-symmetric branch at the Felli-Schneider point.

Near mu_FS the branch is u = u* + eps phi + eps^2 psi with eps^2 = c_{p,d} (mu - mu_FS).
This module assembles the order-four coefficients, c_{p,d}, the derived slopes
tau'(mu_FS), nu'(mu_FS), the exponent theta_2 and the curvature indicator xi^theta.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .analytic import (ParameterError, critical_exponent, gamma_integrals, harmonic_constants,
                       mu_fs, symmetric_extremal)
from .spectral import LineGrid, b22_upper_bound, default_line_grid, sigma, solve_chi

H_TOLERANCE = 1e-10


def _check_p(p: float, d: int):
    if not (2 < p < critical_exponent(d)):
        raise ParameterError(f"p must lie in (2, 2*) = (2, {critical_exponent(d):g}), got {p}")


def a0_ratio(p: float, d: int) -> float:
    """<u^{p-2} phi^2>/<u^p> at mu_FS for phi = u^{p/2} f1."""
    return p * p * mu_fs(p, d) / (3 * p - 2)


def quartic_ratio(p: float, d: int) -> float:
    """<u^{p-4} phi_1^4>/<u^p> at mu_FS."""
    m = mu_fs(p, d)
    return 2 * p ** 3 * (p - 1) * m * m / ((3 * p - 2) * (5 * p - 6))


def b_at_mu_fs(p: float, d: int) -> float:
    """Quartic coefficient b(mu_FS) of the energy expansion, closed form."""
    _check_p(p, d)
    num = 4 * (d - 1) ** 2 * p ** 3 * (p - 1) ** 2 * (2 * p * (5 * p - 6) - d * (p * p - 16 * p + 12))
    den = (d + 2) * (p + 2) ** 2 * (p - 2) * (3 * p - 2) ** 2 * (5 * p - 6)
    return num / den


def b_at_mu_fs_quadrature(p: float, d: int, n: int = 20001) -> float:
    """b(mu_FS) assembled from integrals of the explicit extremal, as an independent check."""
    m = mu_fs(p, d)
    u, _, beta = symmetric_extremal(m, p)
    S = math.acosh(1e-17 ** (-(p - 2) / 2)) / beta
    s = np.linspace(-S, S, n)
    us = u(s)
    Ip = simpson(us ** p, x=s)
    a0 = simpson(us ** (2 * p - 2), x=s) / Ip
    R = simpson(us ** (3 * p - 4), x=s) / Ip
    return (p - 1) * (p - 2) / 4 * ((p - 1) * a0 ** 2 - d * (p - 3) / (d + 2) * R)


@dataclass(frozen=True)
class BCoefficients:
    b01: float
    b0pm1: float
    b02pm3: float
    b22pm3: float
    b22pm3_coarse: float


def b_coefficients(p: float, d: int, grid: LineGrid | None = None) -> BCoefficients:
    """Integrals of the chi profiles against powers of w.

    b22 has no closed form; it is Richardson-extrapolated from `grid` and its refinement
    (the scheme is fourth order).
    """
    _check_p(p, d)
    grid = grid or default_line_grid(p)
    c0 = solve_chi("chi_0_2pm3", p, d, grid)
    b01 = c0.integrate_against(1.0)
    b0pm1 = c0.integrate_against(p - 1)
    b02pm3 = c0.integrate_against(2 * p - 3)
    coarse = solve_chi("chi_2_2pm3", p, d, grid).integrate_against(2 * p - 3)
    fine = solve_chi("chi_2_2pm3", p, d, grid.refined()).integrate_against(2 * p - 3)
    b22 = fine + (fine - coarse) / 15.0
    return BCoefficients(b01, b0pm1, b02pm3, b22, coarse)


def b22pm3(p: float, d: int, grid: LineGrid | None = None) -> float:
    grid = grid or default_line_grid(p)
    coarse = solve_chi("chi_2_2pm3", p, d, grid).integrate_against(2 * p - 3)
    fine = solve_chi("chi_2_2pm3", p, d, grid.refined()).integrate_against(2 * p - 3)
    return fine + (fine - coarse) / 15.0


def l_psi_from_y(p: float, d: int, y: float) -> float:
    pre = 4 * (d - 1) ** 2 * (p - 1) * p ** 3 / (p + 2) ** 2
    return pre * (p * (p - 2) / ((3 * p - 2) ** 2 * (5 * p - 6))
                  + 2 * (d - 1) / (d + 2) * (p - 1) / (p - 2) ** 2 * y)


def l_psi(p: float, d: int, b22: float) -> float:
    """Linear term L[psi] at the optimal psi, with y = b22/Ip."""
    return l_psi_from_y(p, d, b22 / gamma_integrals(p).Ip)


def y_approx(p: float, d: int) -> float:
    return b22_upper_bound(p, d) / gamma_integrals(p).Ip


def l_psi_approx(p: float, d: int) -> float:
    return l_psi_from_y(p, d, y_approx(p, d))


def _c_from(p: float, b: float, L: float) -> tuple[float, bool]:
    den = b - L / 2
    if abs(den) < H_TOLERANCE * max(abs(b), abs(L)):
        return float("nan"), False
    return (p * p - 4) / (8 * den), True


def c_pd(p: float, d: int, b22: float | None = None) -> tuple[float, bool]:
    """(c_{p,d}, hypothesis_H). When H fails, c is NaN and must not be used."""
    _check_p(p, d)
    if b22 is None:
        b22 = b22pm3(p, d)
    return _c_from(p, b_at_mu_fs(p, d), l_psi(p, d, b22))


def c_pd_approx(p: float, d: int) -> tuple[float, bool]:
    return _c_from(p, b_at_mu_fs(p, d), l_psi_approx(p, d))


def check_polynomial_coeffs(d: int) -> np.ndarray:
    """Coefficients (highest degree first) of a quartic in p whose sign is opposite to that
    of b(mu_FS) - L_approx/2, i.e. c_approx > 0 exactly where the quartic is negative.

    It is minus the numerator of b(mu_FS) - L_approx/2 once the positive factors are cleared.
    """
    return np.array([
        103 * d * d - 227 * d + 54,
        -(400 * d * d - 592 * d + 288),
        368 * d * d - 536 * d + 504,
        160 * d * d + 384 * d - 288,
        -240 * d * d - 240 * d,
    ], dtype=float)


def p_approx(d: int) -> float:
    """Largest root in (2, 2*) of the sufficient-condition quartic: c_approx > 0 below it."""
    if d < 3:
        raise ParameterError("d must be >= 3")
    roots = np.roots(check_polynomial_coeffs(d))
    real = sorted(r.real for r in roots if abs(r.imag) < 1e-9 and 2 < r.real < critical_exponent(d))
    if not real:
        raise RuntimeError(f"no root of the sufficient-condition quartic in (2, 2*) for d={d}")
    return float(real[-1])


def k_psi(p: float, d: int) -> float:
    return -2 * p * p * (p - 1) * (d - 1) / ((p - 2) * (p + 2) * (3 * p - 2))


def b0_over_alpha(p: float, mu: float) -> float:
    """B0/alpha with eps^2/(2 eta) = 1/2."""
    return (p - 1) * p * p * mu / (2 * (p - 2))


def a0_over_alpha(p: float, mu: float) -> float:
    """A0/alpha with eps^2/(2 eta) = 1/2 and the lambda_1 contribution dropped."""
    return p ** 3 * (p - 1) * mu / ((p - 2) * (3 * p - 2))


def b01_closed(p: float) -> float:
    """b01/I2."""
    return -p * (p - 2) / (2 * (p - 1) * (p + 2))


def tau_prime_fs(p: float, d: int, c: float, b01_over_I2: float | None = None) -> float:
    """Slope of tau along the branch at mu_FS."""
    if not c > 0:
        raise ValueError("tau'(mu_FS) needs c_{p,d} > 0")
    r = b01_closed(p) if b01_over_I2 is None else b01_over_I2
    g = 8 * p * (d - 1) / ((p - 2) * (p + 2) ** 2)
    return (p - 2) / (p + 2) - c * g * g * (1 + (p - 1) * p * (p + 2) / (2 * (p - 2)) * r)


def nu_prime_fs(p: float, d: int, c: float, b01_over_I2: float | None = None) -> float:
    """nu'(mu_FS)/nu*(mu_FS)."""
    if not c > 0:
        raise ValueError("nu'(mu_FS) needs c_{p,d} > 0")
    r = b01_closed(p) if b01_over_I2 is None else b01_over_I2
    m = mu_fs(p, d)
    bracket = (p * m * (2 / (p + 2) - p * (p - 1) / (3 * p - 2))
               + 2 * b0_over_alpha(p, m) * (r + (p - 2) / (3 * p - 2)))
    return -(p - 2) / (2 * p * m) + c * bracket


def theta2_from_tau_prime(tp: float) -> float:
    if not tp > 0:
        raise ValueError(f"theta_2 needs tau'(mu_FS) > 0, got {tp}")
    return tp / (1 + tp)


def theta2(p: float, d: int, c: float | None = None) -> float:
    if c is None:
        c, ok = c_pd(p, d)
        if not ok:
            raise ValueError("hypothesis H fails; c_{p,d} undefined")
    return theta2_from_tau_prime(tau_prime_fs(p, d, c))


def lambda_theta_slope(theta: float, tau_prime: float) -> float:
    """(Lambda^theta)'(mu_FS) along the branch."""
    return theta * (1 + tau_prime) - tau_prime


def xi_theta(theta: float, p: float, d: int, c: float, th2: float | None = None) -> float:
    """Relative curvature of the branch against the symmetric curve at the bifurcation point."""
    if not c > 0:
        raise ValueError("xi needs c_{p,d} > 0")
    lo = d * (p - 2) / (2 * p)
    if not (lo - 1e-12 <= theta <= 1 + 1e-12):
        raise ParameterError(f"theta must lie in [{lo:.6g}, 1]")
    t2 = theta2(p, d, c) if th2 is None else th2
    m = mu_fs(p, d)
    return (-(p * p - 4) * c / 4
            + (p + 2) / (4 * p * p * m * m) * (1 - theta) * (2 * p * t2 - (p - 2)) ** 2
            / ((1 - t2) ** 2 * (2 * p * theta - (p - 2))))


def rem2_identity_residual(p: float, d: int, c: float | None = None) -> float:
    """Residual of the first-order identity linking nu' and tau' at mu_FS.

    Both the symmetric combination nu*'/nu* + tau*'/(mu+tau*) and the branch
    combination nu'/nu* + tau'/(mu+tau*) vanish; the sum of absolute values is returned.
    """
    if c is None:
        c, ok = c_pd(p, d)
        if not ok:
            raise ValueError("hypothesis H fails")
    m = mu_fs(p, d)
    ts = (p - 2) / (p + 2) * m
    sym = -(p - 2) / (2 * p * m) + (p - 2) / (p + 2) / (m + ts)
    branch = nu_prime_fs(p, d, c) + tau_prime_fs(p, d, c) / (m + ts)
    return abs(sym) + abs(branch)


def energy_ratio_prediction(mu, p: float, d: int, c: float | None = None):
    """Predicted Q_mu[u_mu]/Q_mu[u_*] to second order in mu - mu_FS."""
    if c is None:
        c, ok = c_pd(p, d)
        if not ok:
            raise ValueError("hypothesis H fails")
    dm = np.asarray(mu, dtype=float) - mu_fs(p, d)
    if np.any(dm < 0):
        raise ValueError("prediction is one-sided: mu must be >= mu_FS")
    return 1 - (p * p - 4) * c * dm ** 2 / 8


@dataclass(frozen=True)
class AnsatzFunction:
    """u_(mu) = u* f0 + eps phi1 f1 + eps^2 (k_psi u* f0 + psi0 f0 + psi2 f2)."""
    mu: float
    p: float
    d: int
    eps: float
    k_psi: float
    A0: float
    B0: float
    B2: float
    u_star: Callable
    phi1: Callable
    psi0: Callable
    psi2: Callable

    def modes(self, s):
        """Coefficients of f0, f1, f2 at the points s."""
        us = self.u_star(s)
        e2 = self.eps ** 2
        c0 = us + e2 * (self.k_psi * us + self.psi0(s))
        c1 = self.eps * self.phi1(s)
        c2 = e2 * self.psi2(s)
        return c0, c1, c2

    def __call__(self, s, x):
        """Evaluate on the tensor grid s (line) x x=cos(zeta)."""
        from .analytic import harmonic_f
        c0, c1, c2 = self.modes(np.asarray(s, dtype=float))
        return (np.outer(c0, harmonic_f(0, self.d, x)) + np.outer(c1, harmonic_f(1, self.d, x))
                + np.outer(c2, harmonic_f(2, self.d, x)))


def build_ansatz(mu: float, p: float, d: int, c: float | None = None,
                 grid: LineGrid | None = None) -> AnsatzFunction:
    if c is None:
        c, ok = c_pd(p, d)
        if not ok:
            raise ValueError("hypothesis H fails; no ansatz")
    if not c > 0:
        raise ValueError("ansatz needs c_{p,d} > 0")
    m = mu_fs(p, d)
    if mu < m:
        raise ValueError(f"ansatz is one-sided: mu = {mu} < mu_FS = {m}")
    eps = math.sqrt(c * (mu - m))
    u, alpha, beta = symmetric_extremal(mu, p)
    kd = harmonic_constants(d).kappa_d
    A0 = alpha * a0_over_alpha(p, mu)
    B0 = alpha * b0_over_alpha(p, mu)
    B2 = kd * B0
    grid = grid or default_line_grid(p)
    chi_a = solve_chi("chi_0_pm1", p, d, grid).interpolant()
    chi_b = solve_chi("chi_0_2pm3", p, d, grid).interpolant()
    chi_2 = solve_chi("chi_2_2pm3", p, d, grid).interpolant()

    def phi1(s):
        return u(s) ** (p / 2)

    def psi0(s):
        x = beta * np.asarray(s, dtype=float)
        return A0 * chi_a(x) + B0 * chi_b(x)

    def psi2(s):
        return B2 * chi_2(beta * np.asarray(s, dtype=float))

    kpsi = -(p - 1) * p * p * mu / (2 * (3 * p - 2))
    return AnsatzFunction(mu, p, d, eps, kpsi, A0, B0, B2, u, phi1, psi0, psi2)


@dataclass(frozen=True)
class ExpansionReport:
    p: float
    d: int
    b_mu_fs: float
    b01: float
    b0pm1: float
    b02pm3: float
    b22pm3: float
    a0: float
    sigma: float
    L_psi: float
    L_psi_approx: float
    c_pd: float
    c_pd_approx: float
    hypothesis_H: bool
    k_psi: float
    tau_prime: float
    nu_prime_ratio: float
    theta2: float

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        return json.dumps({k: clean(v) for k, v in asdict(self).items()}, indent=2)


def expansion_report(p: float, d: int, grid: LineGrid | None = None) -> ExpansionReport:
    bc = b_coefficients(p, d, grid)
    gi = gamma_integrals(p)
    b = b_at_mu_fs(p, d)
    L = l_psi(p, d, bc.b22pm3)
    c, ok = _c_from(p, b, L)
    ca, _ = c_pd_approx(p, d)
    nan = float("nan")
    if ok and c > 0:
        r = bc.b01 / gi.I2
        tp = tau_prime_fs(p, d, c, r)
        npr = nu_prime_fs(p, d, c, r)
        t2 = theta2_from_tau_prime(tp) if tp > 0 else nan
    else:
        tp = npr = t2 = nan
    return ExpansionReport(
        p=p, d=d, b_mu_fs=b, b01=bc.b01, b0pm1=bc.b0pm1, b02pm3=bc.b02pm3, b22pm3=bc.b22pm3,
        a0=a0_ratio(p, d), sigma=sigma(p, d), L_psi=L, L_psi_approx=l_psi_approx(p, d),
        c_pd=c, c_pd_approx=ca, hypothesis_H=ok, k_psi=k_psi(p, d), tau_prime=tp,
        nu_prime_ratio=npr, theta2=t2)

