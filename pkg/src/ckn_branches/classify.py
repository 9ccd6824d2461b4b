"""Gagliardo-Nirenberg thresholds, the large-Lambda asymptotic law of the branch
and the Scenario 1 / Scenario 2 decision in the critical case theta = vartheta.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .analytic import (ParameterError, critical_exponent, j_star, k_star_ckn, lambda_fs, lambda_star,
                       mu_fs, mu_of_lambda, vartheta)
from .spectral import ground_state_shoot

TIE_TOL = 1e-6


def asymptote_prefactor(theta: float, p: float, d: int, K_GN: float) -> float:
    """theta^theta / (vartheta^vartheta (theta-vartheta)^(theta-vartheta) K_GN)."""
    th = vartheta(p, d)
    if theta <= th:
        raise ParameterError("the asymptotic law needs theta > vartheta(p, d)")
    return theta ** theta / (th ** th * (theta - th) ** (theta - th)) / K_GN


def asymptote(theta: float, p: float, d: int, K_GN: float):
    """Lambda -> asymptote_prefactor * Lambda^(theta-vartheta)."""
    th = vartheta(p, d)
    pre = asymptote_prefactor(theta, p, d, K_GN)

    def J(lam):
        return pre * np.asarray(lam, dtype=float) ** (theta - th)
    return J


def asymptotic_constant(theta: float, p: float, d: int, K_GN: float) -> float:
    """lim mu^{vartheta-theta} J^theta(mu); for theta = 1 this is S_p = 1/(th^th (1-th)^(1-th) K_GN)."""
    th = vartheta(p, d)
    return theta ** theta * th ** (-th) * (1 - th) ** (th - theta) / K_GN


def k_gn(p: float, d: int, resolution: int = 20001) -> float:
    return ground_state_shoot(p, d, resolution).K_GN


def k_star_at_fs(p: float, d: int) -> float:
    """K*_CKN(vartheta, Lambda_FS(p, vartheta), p) = 1/J*^vartheta(mu_FS)."""
    return 1.0 / float(j_star(mu_fs(p, d), p, vartheta(p, d)))


def gn_threshold(p: float, d: int, K: float | None = None):
    """(Lambda*_GN, mu_GN) where the symmetric constant at theta = vartheta meets K_GN,
    or None when that crossing does not lie below Lambda_FS(p, vartheta)."""
    th = vartheta(p, d)
    K = k_gn(p, d) if K is None else K
    lfs = lambda_fs(p, th, d)

    def gap(lam):
        return float(k_star_ckn(th, lam, p)) - K

    # K* decreases in Lambda, from +inf at 0 to 0 at infinity
    lo, hi = lfs * 1e-6, lfs
    while gap(hi) > 0:
        hi *= 2
        if hi > 1e12:
            raise RuntimeError("could not bracket the Gagliardo-Nirenberg threshold")
    if gap(lo) < 0:
        raise RuntimeError("could not bracket the Gagliardo-Nirenberg threshold")
    lam = brentq(gap, lo, hi, xtol=1e-10, rtol=4 * np.finfo(float).eps)
    if lam >= lfs:
        return None
    return lam, float(mu_of_lambda(lam, p, th))


def p_star(d: int, xtol: float = 1e-4, samples: int = 8):
    """Root in p of K_GN(p, d) - K*_CKN at the bifurcation point; returns (p_star, bracket) or None."""
    pc = critical_exponent(d)
    ps = 2 + (pc - 2) * np.linspace(0.15, 0.92, samples)
    vals = [k_gn(p, d) - k_star_at_fs(p, d) for p in ps]
    for a, b, fa, fb in zip(ps[:-1], ps[1:], vals[:-1], vals[1:]):
        if fa == 0:
            return float(a), (float(a), float(a))
        if fa * fb < 0:
            r = brentq(lambda p: k_gn(p, d) - k_star_at_fs(p, d), a, b, xtol=xtol)
            return float(r), (float(r - xtol), float(r + xtol))
    return None


@dataclass(frozen=True)
class ScenarioReport:
    p: float
    d: int
    K_GN: float
    K_star_at_FS: float
    scenario: str
    tie: bool
    Lambda_GN_star: float | None
    mu_GN: float | None
    flat_region_mu_from: float | None
    p_star_bracket: tuple | None
    theta2: float | None
    theta1_label: str = "vartheta_1 (observed equal to theta2)"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def classify_scenario(p: float, d: int, with_p_star: bool = False) -> ScenarioReport:
    from .expansion import c_pd, theta2
    if not (2 < p < critical_exponent(d)):
        raise ParameterError(f"p must lie in (2, 2*), got {p}")
    K = k_gn(p, d)
    Ks = k_star_at_fs(p, d)
    two = K > Ks
    tie = abs(K - Ks) <= TIE_TOL * Ks
    lam = mu_gn = None
    if two:
        res = gn_threshold(p, d, K)
        if res is not None:
            lam, mu_gn = res
    c, ok = c_pd(p, d)
    t2 = theta2(p, d, c) if ok and c > 0 else None
    bracket = None
    if with_p_star:
        ps = p_star(d)
        bracket = ps[1] if ps else None
    return ScenarioReport(p=p, d=d, K_GN=K, K_star_at_FS=Ks, scenario="two" if two else "one", tie=tie,
                          Lambda_GN_star=lam, mu_GN=mu_gn, flat_region_mu_from=mu_gn,
                          p_star_bracket=bracket, theta2=t2)


def write_comparison_csv(p: float, d: int, path, n: int = 200) -> Path:
    """Table of (Lambda, K*_CKN(vartheta, Lambda), K_GN) on (0, 2 Lambda_FS]."""
    th = vartheta(p, d)
    K = k_gn(p, d)
    lam = np.linspace(2 * lambda_fs(p, th, d) / n, 2 * lambda_fs(p, th, d), n)
    ks = k_star_ckn(th, lam, p)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Lambda", "K_star_CKN", "K_GN"])
        for a, b in zip(lam, ks):
            w.writerow([f"{a:.17g}", f"{b:.17g}", f"{K:.17g}"])
    return path


def symmetric_energy_at(mu, p: float, theta: float):
    """(Lambda*, J*) on the symmetric branch, convenience for comparisons."""
    return lambda_star(mu, p, theta), j_star(mu, p, theta)


def relative_gap_to_limit(J1: float, mu: float, p: float, d: int, K: float) -> float:
    """(limit constant - J^1 mu^{vartheta-1}) / limit constant."""
    lim = asymptotic_constant(1.0, p, d, K)
    return (lim - J1 * mu ** (vartheta(p, d) - 1)) / lim

