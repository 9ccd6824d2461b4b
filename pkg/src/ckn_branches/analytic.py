"""Closed-form quantities for the symmetric branch of the CKN problem on the cylinder.

Everything here is exact up to floating point: the critical exponents, the
Felli-Schneider threshold, the Gamma-function integrals of powers of sech and
the explicit symmetric extremal together with its energies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln


class ParameterError(ValueError):
    """Raised when a parameter lies outside the admissible range."""


def critical_exponent(d: int) -> float:
    """2* = 2d/(d-2)."""
    if d < 3:
        raise ParameterError(f"d must be >= 3, got {d}")
    return 2.0 * d / (d - 2)


def vartheta(p: float, d: int) -> float:
    """Smallest admissible interpolation exponent d(p-2)/(2p)."""
    if not p > 2:
        raise ParameterError(f"p must exceed 2, got {p}")
    return d * (p - 2) / (2.0 * p)


@dataclass(frozen=True)
class ProblemParams:
    d: int
    p: float
    theta: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ParameterError(f"d must be an integer >= 3, got {self.d}")
        pc = critical_exponent(self.d)
        if not (2 < self.p <= pc * (1 + 1e-14)):
            raise ParameterError(f"p must lie in (2, {pc:g}], got {self.p}")
        lo = self.vartheta
        # tiny slack so theta = vartheta(p, d) computed elsewhere is accepted
        if not (lo - 1e-12 <= self.theta <= 1.0):
            raise ParameterError(
                f"theta must lie in [{lo:.6g}, 1] for p={self.p}, d={self.d}, got {self.theta}")

    @property
    def vartheta(self) -> float:
        return vartheta(self.p, self.d)

    @property
    def p_crit(self) -> float:
        return critical_exponent(self.d)

    @property
    def a_c(self) -> float:
        return (self.d - 2) / 2.0

    @property
    def mu_fs(self) -> float:
        return mu_fs(self.p, self.d)


@dataclass(frozen=True)
class CknWeights:
    a: float
    b: float
    d: int

    def __post_init__(self):
        ac = (self.d - 2) / 2.0
        if self.d < 3:
            raise ParameterError("d must be >= 3")
        if not self.a < ac:
            raise ParameterError(f"a must be below a_c = {ac}, got {self.a}")
        if not (self.a <= self.b <= self.a + 1):
            raise ParameterError(f"b must lie in [a, a+1] = [{self.a}, {self.a + 1}], got {self.b}")


def ckn_to_cylinder(w: CknWeights) -> tuple[float, float]:
    """Emden-Fowler change of variables: (a, b) -> (p, Lambda)."""
    d = w.d
    p = 2.0 * d / (d - 2 + 2 * (w.b - w.a))
    if not p > 2:
        raise ParameterError(f"b - a = 1 gives p = 2, which is excluded (a={w.a}, b={w.b})")
    lam = (w.a - (d - 2) / 2.0) ** 2
    return p, lam


def mu_fs(p: float, d: int) -> float:
    """Felli-Schneider threshold 4(d-1)/(p^2-4)."""
    if not p > 2:
        raise ParameterError(f"p must exceed 2, got {p}")
    return 4.0 * (d - 1) / (p * p - 4)


def lambda_fs(p: float, theta: float, d: int) -> float:
    return mu_fs(p, d) * ((2 * theta - 1) * p + 2) / (p + 2)


def gamma_f(q):
    """f(q) = sqrt(pi) Gamma(q/2) / Gamma((q+1)/2), which is the integral of sech^q over R."""
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise ParameterError("gamma_f needs q > 0")
    out = math.sqrt(math.pi) * np.exp(gammaln(q / 2) - gammaln((q + 1) / 2))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GammaIntegrals:
    p: float
    I2: float
    Ip: float
    J2: float


def gamma_integrals(p: float) -> GammaIntegrals:
    """Integrals of w^2, w^p and w'^2 for w = cosh^{-2/(p-2)}."""
    if not p > 2:
        raise ParameterError(f"p must exceed 2, got {p}")
    I2 = gamma_f(4.0 / (p - 2))
    return GammaIntegrals(p, I2, 4 * I2 / (p + 2), 4 * I2 / ((p + 2) * (p - 2)))


def symmetric_extremal(mu: float, p: float) -> tuple[Callable, float, float]:
    """Return (u, alpha, beta) with u(s) = alpha cosh(beta s)^{-2/(p-2)}."""
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    alpha = (p * mu / 2) ** (1 / (p - 2))
    beta = (p - 2) / 2 * math.sqrt(mu)

    def u(s):
        s = np.asarray(s, dtype=float)
        # cosh^{-k} written through exp to avoid overflow far in the tails
        x = beta * np.abs(s)
        return alpha * (2.0 / (1 + np.exp(-2 * x))) ** (2 / (p - 2)) * np.exp(-2 * x / (p - 2))

    return u, alpha, beta


def kappa_p(p: float) -> float:
    gi = gamma_integrals(p)
    return ((p + 2) / 4) ** (2 / p) * (2 * gi.I2 / (p - 2)) ** ((p - 2) / p)


def tau_star(mu, p: float):
    return (p - 2) / (p + 2) * np.asarray(mu, dtype=float) if np.ndim(mu) else (p - 2) / (p + 2) * mu


def nu_star(mu, p: float):
    return kappa_p(p) * np.asarray(mu, dtype=float) ** (-(p - 2) / (2 * p))


@dataclass(frozen=True)
class SymmetricBranchPoint:
    mu: float
    tau_star: float
    nu_star: float
    lambda_theta: float
    j_theta: float


def symmetric_branch(mu: float, params: ProblemParams) -> SymmetricBranchPoint:
    p, th = params.p, params.theta
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    if 2 * p * th - (p - 2) <= 0:
        raise ParameterError("theta must exceed (p-2)/(2p)")
    tau = (p - 2) / (p + 2) * mu
    nu = float(nu_star(mu, p))
    lam = th * mu - (1 - th) * tau
    j = th ** th * (mu + tau) ** th * nu
    return SymmetricBranchPoint(mu, tau, nu, lam, j)


def j_star(mu, p: float, theta: float):
    """J*^theta(mu) = kappa_p (2p theta/(p+2))^theta mu^{theta-(p-2)/(2p)}, vectorized in mu."""
    mu = np.asarray(mu, dtype=float)
    return kappa_p(p) * (2 * p * theta / (p + 2)) ** theta * mu ** (theta - (p - 2) / (2 * p))


def lambda_star(mu, p: float, theta: float):
    mu = np.asarray(mu, dtype=float)
    return mu * (2 * p * theta - (p - 2)) / (p + 2)


def mu_of_lambda(lam, p: float, theta: float):
    """Inverse of the linear map mu -> Lambda*^theta(mu)."""
    den = 2 * p * theta - (p - 2)
    if den <= 0:
        raise ParameterError("theta must exceed (p-2)/(2p)")
    return (p + 2) * np.asarray(lam, dtype=float) / den


def k_star_ckn(theta: float, lam, p: float):
    """Best constant among symmetric functions, 1/J*^theta(mu(Lambda))."""
    return 1.0 / j_star(mu_of_lambda(lam, p, theta), p, theta)


def lambda1(mu, params: ProblemParams):
    """Lowest eigenvalue of the linearized operator restricted to the f1 mode."""
    d, p = params.d, params.p
    return d - 1 + np.asarray(mu, dtype=float) * (1 - p * p / 4)


def eta_symmetric(lam: float, params: ProblemParams) -> tuple[float, float]:
    """Scaling parameter eta and t[u*] of the symmetric optimizer at given Lambda."""
    p, th = params.p, params.theta
    den = (2 * th - 1) * p + 2
    if not lam > 0:
        raise ParameterError("Lambda must be positive")
    if den <= 0:
        raise ParameterError("(2 theta - 1) p + 2 must be positive")
    return (p + 2) * th * lam / den, (p - 2) * lam / den


# spherical harmonics depending on the azimuthal angle only

def harmonic_f(k: int, d: int, x):
    """Normalized zonal harmonic of degree k <= 3 evaluated at x = cos(zeta)."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.ones_like(x)
    if k == 1:
        return math.sqrt(d) * x
    if k == 2:
        return math.sqrt((d + 2) / (2.0 * (d - 1))) * (d * x * x - 1)
    if k == 3:
        c = math.sqrt(d * (d + 4) / (6.0 * (d - 1)))
        return c * ((d + 2) * x ** 3 - 3 * x)
    raise ValueError("only degrees 0..3 are tabulated")


def sphere_weight_nodes(d: int, n: int):
    """Gauss nodes x = cos(zeta) and weights for the probability measure on the sphere."""
    from scipy.special import roots_jacobi
    a = (d - 3) / 2.0
    x, w = roots_jacobi(n, a, a)
    return x, w / w.sum()


@dataclass(frozen=True)
class HarmonicConstants:
    d: int
    kappa_d: float
    f1_fourth_moment: float
    eigenvalues: tuple = field(default_factory=tuple)

    def f(self, k, x):
        return harmonic_f(k, self.d, x)


def harmonic_constants(d: int) -> HarmonicConstants:
    if d < 2:
        raise ParameterError("d must be >= 2")
    return HarmonicConstants(
        d=d,
        kappa_d=math.sqrt(2.0 * (d - 1) / (d + 2)),
        f1_fourth_moment=3.0 * d / (d + 2),
        eigenvalues=tuple(k * (k + d - 2) for k in range(4)),
    )


def symmetry_bounds(p: float, d: int) -> tuple[float, float, float]:
    """Known lower bounds and the linear-instability upper bound on the symmetry curve at theta = 1."""
    if not (2 < p < critical_exponent(d)):
        raise ParameterError("need 2 < p < 2*")
    return (d - 1) * (6 - p) / (4 * (p - 2)), d * d / (p * p), lambda_fs(p, 1.0, d)
