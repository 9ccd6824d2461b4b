"""One-dimensional kernels: line quadrature, the Poschl-Teller boundary value
problems satisfied by the chi profiles, and the radial ground state of the
Gagliardo-Nirenberg problem obtained by shooting.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded, eigh_tridiagonal

from .analytic import ParameterError, critical_exponent, mu_fs, vartheta

CHI_KINDS = ("chi_0_pm1", "chi_0_2pm3", "chi_2_2pm3")


@dataclass(frozen=True)
class LineGrid:
    half_width: float
    n: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ParameterError("half_width must be positive")
        if self.n < 3 or self.n % 2 == 0:
            raise ParameterError(f"n must be odd and >= 3, got {self.n}")

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)

    @property
    def half_nodes(self) -> np.ndarray:
        """Nodes s >= 0, starting at the center."""
        return self.nodes[self.n // 2:]

    def refined(self) -> "LineGrid":
        return LineGrid(self.half_width, 2 * self.n - 1)


def default_line_grid(p: float, n: int = 4001, floor: float = 1e-17) -> LineGrid:
    """Grid in the rescaled variable on which w = cosh^{-2/(p-2)} drops to `floor` at the ends."""
    S = math.acosh(floor ** (-(p - 2) / 2))
    return LineGrid(S, n)


def quadrature(samples, grid: LineGrid) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} samples, got shape {samples.shape}")
    return float(simpson(samples, dx=grid.spacing))


def w_profile(s, p: float):
    """w(s) = cosh(s)^{-2/(p-2)}, evaluated without overflow."""
    x = np.abs(np.asarray(s, dtype=float))
    return (2.0 / (1 + np.exp(-2 * x))) ** (2 / (p - 2)) * np.exp(-2 * x / (p - 2))


def sech2(s):
    x = np.abs(np.asarray(s, dtype=float))
    e = np.exp(-2 * x)
    return 4 * e / (1 + e) ** 2


def _even_banded(h: float, potential: np.ndarray) -> np.ndarray:
    """Banded form of -d^2/ds^2 + V on s >= 0 for even functions, fourth order,
    with zero values beyond the last node."""
    m = potential.size
    c = 1.0 / (12 * h * h)
    ab = np.zeros((5, m))
    # row i holds c*(u_{i-2} - 16 u_{i-1} + 30 u_i - 16 u_{i+1} + u_{i+2})
    ab[0, 2:] = c
    ab[1, 1:] = -16 * c
    ab[2, :] = 30 * c + potential
    ab[3, :-1] = -16 * c
    ab[4, :-2] = c
    # mirror u_{-1} = u_1, u_{-2} = u_2 into rows 0 and 1
    ab[1, 1] = -32 * c     # row 0, col 1
    ab[0, 2] = 2 * c       # row 0, col 2
    ab[2, 1] = 31 * c + potential[1]  # row 1, col 1
    return ab


def _banded_matvec(ab: np.ndarray, u: np.ndarray) -> np.ndarray:
    m = u.size
    out = ab[2] * u
    out[:-1] += ab[1, 1:] * u[1:]
    out[:-2] += ab[0, 2:] * u[2:]
    out[1:] += ab[3, :-1] * u[:-1]
    out[2:] += ab[4, :-2] * u[:-2]
    return out


def pt_coupling(p: float) -> float:
    """U0(p) = 2p(p-1)/(p-2)^2, the depth of the sech^2 well in the rescaled linearization."""
    return 2 * p * (p - 1) / (p - 2) ** 2


def chi_mass(kind: str, p: float, d: int) -> float:
    """Constant term k of -chi'' + k chi - U0 sech^2 chi."""
    k0 = 4.0 / (p - 2) ** 2
    if kind == "chi_2_2pm3":
        m = mu_fs(p, d)
        return k0 * (m + 2 * d) / m
    return k0


@dataclass(frozen=True)
class ChiProfile:
    kind: str
    p: float
    d: int
    grid: LineGrid
    values: np.ndarray
    residual: float

    def integrate_against(self, power: float) -> float:
        """Integral of chi * w^power over the line."""
        return quadrature(self.values * w_profile(self.grid.nodes, self.p) ** power, self.grid)

    def interpolant(self):
        """Even cubic spline of chi on the half-line, zero beyond the grid."""
        s = self.grid.half_nodes
        v = self.values[self.grid.n // 2:]
        cs = CubicSpline(s, v, bc_type=((1, 0.0), "not-a-knot"))
        S = self.grid.half_width

        def f(x):
            x = np.abs(np.asarray(x, dtype=float))
            return np.where(x <= S, cs(np.minimum(x, S)), 0.0)
        return f


def solve_chi(kind: str, p: float, d: int, grid: LineGrid | None = None) -> ChiProfile:
    """Solve one equation of the linear system for the second-order corrections.

    All three share -chi'' + k chi - U0 sech^2(s) chi = g with decay at infinity;
    g = -w^{p-1} for chi_0_pm1 and g = w^{2p-3} otherwise.
    """
    if kind not in CHI_KINDS:
        raise ValueError(f"unknown chi kind {kind!r}; expected one of {CHI_KINDS}")
    if not (2 < p < critical_exponent(d)):
        raise ParameterError(f"p must lie in (2, 2*) for chi profiles, got {p}")
    grid = grid or default_line_grid(p)
    s = grid.half_nodes
    w = w_profile(s, p)
    rhs = -w ** (p - 1) if kind == "chi_0_pm1" else w ** (2 * p - 3)
    V = chi_mass(kind, p, d) - pt_coupling(p) * sech2(s)
    ab = _even_banded(grid.spacing, V)
    try:
        half = solve_banded((2, 2), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"singular chi system for p={p}; refine the grid") from exc
    res = np.abs(_banded_matvec(ab, half) - rhs).max() / np.abs(rhs).max()
    if not np.all(np.isfinite(half)):
        raise RuntimeError("chi solve produced non-finite values")
    full = np.concatenate([half[:0:-1], half])
    return ChiProfile(kind, p, d, grid, full, float(res))


def chi_closed_form(kind: str, p: float, s):
    w = w_profile(s, p)
    if kind == "chi_0_pm1":
        return (p - 2) / (2 * p) * w
    if kind == "chi_0_2pm3":
        return -(p - 2) * (2 * w - w ** (p - 1)) / (4 * (p - 1))
    raise ValueError("no closed form for chi_2_2pm3")


def pt_ground_energy(U0: float) -> float:
    """Lowest eigenvalue of -d^2/ds^2 - U0 sech^2 s on the line."""
    if not U0 > 0:
        raise ParameterError("U0 must be positive")
    return 0.5 * math.sqrt(1 + 4 * U0) - 0.5 - U0


def pt_ground_energy_numeric(U0: float, grid: LineGrid) -> float:
    """Same eigenvalue from a second-order finite-difference discretization."""
    h = grid.spacing
    s = grid.nodes
    diag = 2 / h ** 2 - U0 * sech2(s)
    off = np.full(grid.n - 1, -1 / h ** 2)
    return float(eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)[0])


def sigma(p: float, d: int) -> float:
    """Spectral gap factor bounding the f2 correction from above."""
    if not (p > 2 and d >= 2):
        raise ParameterError("need p > 2 and d >= 2")
    m = mu_fs(p, d)
    return pt_ground_energy(pt_coupling(p)) + 4 * (m + 2 * d) / (m * (p - 2) ** 2)


def b22_upper_bound(p: float, d: int) -> float:
    from .analytic import gamma_integrals
    Ip = gamma_integrals(p).Ip
    return Ip * 16 * p * (p - 1) * (3 * p - 4) / ((3 * p - 2) * (5 * p - 6) * (7 * p - 10)) / sigma(p, d)


def psi1_diagnostic(p: float, d: int, grid: LineGrid | None = None) -> dict:
    """Check that the f1 component of the correction vanishes at the threshold.

    In the rescaled variable the f1 operator is -d^2 + 4(mu+d-1)/(mu(p-2)^2) - U0 sech^2
    and phi_1 is w^{p/2}. The bordered system [H phi; phi^T 0] has zero data once the
    Lagrange multiplier is accounted for, so its solution must be zero. The lowest
    eigenvalue of H is reported too: it should vanish at mu_FS.
    """
    grid = grid or default_line_grid(p, 2001)
    s = grid.nodes
    m = mu_fs(p, d)
    k1 = 4 * (m + d - 1) / (m * (p - 2) ** 2)
    h = grid.spacing
    diag = 2 / h ** 2 + k1 - pt_coupling(p) * sech2(s)
    off = np.full(grid.n - 1, -1 / h ** 2)
    lam = float(eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)[0])
    H = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    phi = w_profile(s, p) ** (p / 2)
    n = grid.n
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = H
    K[:n, n] = phi
    K[n, :n] = phi
    sol = np.linalg.solve(K, np.zeros(n + 1))
    return {"psi1_sup": float(np.abs(sol[:n]).max()), "multiplier": float(sol[n]),
            "lowest_eigenvalue": lam}


# ground state of -u'' - (d-1)/r u' + u = u^{p-1}

@dataclass(frozen=True)
class GroundState:
    p: float
    d: int
    u0: float
    r: np.ndarray
    u: np.ndarray
    S_p: float
    K_GN: float
    K_GN_direct: float
    pohozaev_residual: float
    nehari_residual: float


def _shoot(u0: float, p: float, d: int, rmax: float, rtol: float):
    r0 = 1e-6
    a = (u0 - u0 ** (p - 1)) / (2 * d)
    y0 = [u0 + a * r0 ** 2, 2 * a * r0]

    def rhs(r, y):
        return [y[1], -(d - 1) / r * y[1] + y[0] - abs(y[0]) ** (p - 2) * y[0]]

    def crossing(r, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1

    def turning(r, y):
        return y[1]
    turning.terminal = True
    turning.direction = 1
    sol = solve_ivp(rhs, (r0, rmax), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-2,
                    events=(crossing, turning), dense_output=True)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


@functools.lru_cache(maxsize=256)
def ground_state_shoot(p: float, d: int, resolution: int = 20001, rtol: float = 1e-12) -> GroundState:
    """Radial ground state by bisection on u(0): overshoot crosses zero, undershoot turns back up."""
    if not (2 < p < critical_exponent(d)):
        raise ParameterError(f"ground state needs 2 < p < 2* strictly, got p={p}")
    rmax = 80.0
    lo, hi = 1.0, 2.0
    for _ in range(200):
        if _shoot(hi, p, d, rmax, rtol)[0] > 0:
            break
        hi *= 2
    else:
        raise RuntimeError("could not bracket the ground state from above")
    for _ in range(200):
        if _shoot(lo, p, d, rmax, rtol)[0] < 0:
            break
        lo /= 2
    else:
        raise RuntimeError("could not bracket the ground state from below")
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if _shoot(mid, p, d, rmax, rtol)[0] > 0:
            hi = mid
        else:
            lo = mid
    _, sol = _shoot(lo, p, d, rmax, rtol)
    R = sol.t[-1]
    r = np.linspace(sol.t[0], R, resolution)
    u, up = sol.sol(r)
    u = np.maximum(u, 0.0)
    G = simpson(r ** (d - 1) * up ** 2, x=r)
    M = simpson(r ** (d - 1) * u ** 2, x=r)
    P = simpson(r ** (d - 1) * u ** p, x=r)
    th = vartheta(p, d)
    S_p = (G + M) / P ** (2 / p)
    K1 = 1.0 / (th ** th * (1 - th) ** (1 - th) * S_p)
    K2 = P ** (2 / p) / (G ** th * M ** (1 - th))
    return GroundState(p=p, d=d, u0=lo, r=r, u=u, S_p=float(S_p), K_GN=float(K1),
                       K_GN_direct=float(K2),
                       pohozaev_residual=float(G / M - th / (1 - th)),
                       nehari_residual=float((G + M - P) / P))
