"""Euler-Lagrange solver on the cylinder R x S^{d-1} for functions of (s, zeta)
and continuation of the non-symmetric branch in mu.

Discretization: fourth-order finite differences in s on the half-line s >= 0
(solutions are even in s, which also removes the translation mode), and
Gegenbauer collocation in x = cos(zeta) at Gauss-Jacobi nodes, whose quadrature
weights are those of the uniform probability measure on the sphere.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sps
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu
from scipy.special import eval_gegenbauer

from .analytic import ParameterError, harmonic_f, mu_fs, sphere_weight_nodes, symmetric_extremal

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Newton/descent failure or collapse to the zero solution."""


@dataclass(frozen=True)
class CylinderGrid:
    S: float
    n_s: int = 801
    n_zeta: int = 32

    def __post_init__(self):
        if not self.S > 0:
            raise ParameterError("S must be positive")
        if self.n_s < 5 or self.n_s % 2 == 0:
            raise ParameterError(f"n_s must be odd and >= 5, got {self.n_s}")
        if self.n_zeta < 32:
            raise ParameterError(f"n_zeta must be >= 32, got {self.n_zeta}")

    @property
    def m(self) -> int:
        """Number of stored nodes s_i = i h, i = 0..m-1."""
        return (self.n_s + 1) // 2

    @property
    def h(self) -> float:
        return 2 * self.S / (self.n_s - 1)

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.m) * self.h


class GridOperators:
    """Matrices attached to a grid for a given dimension d; build once, reuse for every mu."""

    def __init__(self, grid: CylinderGrid, d: int):
        self.grid, self.d = grid, d
        m, nz, h = grid.m, grid.n_zeta, grid.h
        self.x, self.wz = sphere_weight_nodes(d, nz)
        self.zeta = np.arccos(self.x)
        self.ws = np.full(m, 2 * h)
        self.ws[0] = h
        self.W = np.outer(self.ws, self.wz).ravel()
        # second derivative in s for even functions, zero beyond S
        c = 1.0 / (12 * h * h)
        rows, cols, vals = [], [], []
        for i in range(m):
            for off, cf in ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)):
                j = abs(i + off)
                if j < m:
                    rows.append(i)
                    cols.append(j)
                    vals.append(cf * c)
        self.Dss = sps.csr_matrix((vals, (rows, cols)), shape=(m, m))
        lam = (d - 2) / 2.0
        k = np.arange(nz)
        V = np.stack([eval_gegenbauer(j, lam, self.x) for j in k], axis=1)
        V /= np.sqrt((V ** 2 * self.wz[:, None]).sum(axis=0))
        self.V = V
        self.eig = k * (k + d - 2.0)
        # spherical Laplacian (zonal part) in collocation form
        self.Lz = (V * -self.eig) @ (V.T * self.wz)
        self.K = (-sps.kron(self.Dss, sps.eye(nz)) - sps.kron(sps.eye(m), sps.csr_matrix(self.Lz))).tocsr()
        self.f1 = harmonic_f(1, d, self.x)

    def A(self, mu: float):
        return (self.K + mu * sps.eye(self.K.shape[0])).tocsc()

    def inner(self, u, v) -> float:
        return float((self.W * u * v).sum())

    def dirichlet(self, u) -> float:
        return self.inner(u, self.K @ u)

    def lp(self, u, p) -> float:
        return float((self.W * np.abs(u) ** p).sum())

    def mode(self, u, k: int) -> np.ndarray:
        """Coefficient of the k-th zonal harmonic as a function of s."""
        U = u.reshape(self.grid.m, self.grid.n_zeta)
        return U @ (self.V[:, k] * self.wz)


_OPS_CACHE: dict = {}


def grid_operators(grid: CylinderGrid, d: int) -> GridOperators:
    key = (grid, d)
    if key not in _OPS_CACHE:
        if len(_OPS_CACHE) > 8:
            _OPS_CACHE.clear()
        _OPS_CACHE[key] = GridOperators(grid, d)
    return _OPS_CACHE[key]


def default_cylinder_grid(p: float, d: int, mu: float, n_s: int = 801) -> CylinderGrid:
    """S = 20/beta; zeta nodes follow the concentration scale sqrt(tau), with tau/mu -> th/(1-th)."""
    beta = (p - 2) / 2 * math.sqrt(mu)
    th = d * (p - 2) / (2 * p)
    nz = int(min(128, max(32, math.ceil(4.3 * math.sqrt(mu * th / (1 - th))))))
    return CylinderGrid(20.0 / beta, n_s, nz)


@dataclass
class CylinderField:
    grid: CylinderGrid
    values: np.ndarray  # shape (m, n_zeta), s >= 0 half-grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.m, self.grid.n_zeta)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def full(self) -> np.ndarray:
        """Values on the whole s grid (n_s x n_zeta), using evenness."""
        return np.concatenate([self.values[:0:-1], self.values], axis=0)


def q_energy(fld: CylinderField, mu: float, p: float, d: int) -> float:
    """(int |grad u|^2 + mu int u^2)/||u||_p^2 in the measure ds x dnu."""
    ops = grid_operators(fld.grid, d)
    u = fld.flat
    P = ops.lp(u, p)
    if P == 0:
        raise ValueError("zero field")
    return (ops.dirichlet(u) + mu * ops.inner(u, u)) / P ** (2 / p)


def field_stats(fld: CylinderField, p: float, d: int) -> dict:
    ops = grid_operators(fld.grid, d)
    u = fld.flat
    M = ops.inner(u, u)
    G = ops.dirichlet(u)
    P = ops.lp(u, p)
    a1 = ops.mode(u, 1)
    f1_amp = math.sqrt(float((ops.ws * a1 ** 2).sum()) / M)
    return {"tau": G / M, "nu": M / P ** (2 / p), "f1_amplitude": f1_amp, "mass": M}


def symmetric_field(mu: float, p: float, grid: CylinderGrid) -> CylinderField:
    u, _, _ = symmetric_extremal(mu, p)
    return CylinderField(grid, np.outer(u(grid.s), np.ones(grid.n_zeta)))


def ansatz_field(ans, grid: CylinderGrid, d: int) -> CylinderField:
    ops = grid_operators(grid, d)
    return CylinderField(grid, ans(grid.s, ops.x))


def concentrated_seed(mu: float, p: float, d: int, grid: CylinderGrid) -> CylinderField:
    """Rescaled Gagliardo-Nirenberg ground state centered at the pole zeta = 0."""
    from .spectral import ground_state_shoot
    gs = ground_state_shoot(p, d)
    prof = CubicSpline(gs.r, gs.u)
    ops = grid_operators(grid, d)
    rho = np.sqrt(grid.s[:, None] ** 2 + ops.zeta[None, :] ** 2) * math.sqrt(mu)
    vals = np.where(rho < gs.r[-1], prof(np.minimum(rho, gs.r[-1])), 0.0)
    return CylinderField(grid, mu ** (1 / (p - 2)) * np.maximum(vals, 0.0))


def regrid(fld: CylinderField, new: CylinderGrid, d: int) -> CylinderField:
    """Interpolate a field onto another grid: splines in s, Gegenbauer expansion in zeta."""
    old = grid_operators(fld.grid, d)
    nops = grid_operators(new, d)
    coef = fld.values @ (old.V * old.wz[:, None])         # modal coefficients in zeta
    lam = (d - 2) / 2.0
    kmax = min(fld.grid.n_zeta, new.n_zeta)
    raw_old = np.stack([eval_gegenbauer(j, lam, old.x) for j in range(kmax)], axis=1)
    norms = np.sqrt((raw_old ** 2 * old.wz[:, None]).sum(axis=0))
    Vn = np.stack([eval_gegenbauer(j, lam, nops.x) for j in range(kmax)], axis=1) / norms
    vals_z = coef[:, :kmax] @ Vn.T
    cs = CubicSpline(fld.grid.s, vals_z, axis=0, bc_type=((1, np.zeros(new.n_zeta)), "not-a-knot"))
    s = new.s
    inside = s <= fld.grid.s[-1]
    out = np.zeros((new.m, new.n_zeta))
    out[inside] = cs(s[inside])
    return CylinderField(new, np.maximum(out, 0.0))


@dataclass
class BranchPoint:
    mu: float
    field: CylinderField
    tau: float
    nu: float
    residual_norm: float
    symmetric: bool
    q: float = float("nan")
    f1_amplitude: float = 0.0
    clipped: int = 0
    iterations: int = 0
    descent_steps: int = 0
    q_history: list = field(default_factory=list)

    @property
    def J1(self) -> float:
        return self.nu * (self.mu + self.tau)


SYMMETRY_TOL = 1e-6
NEGATIVE_TOL = 1e-6


def _residual(ops, A, u, p):
    return A @ u - np.abs(u) ** (p - 2) * u


def _nehari(ops, A, u, p):
    N = ops.inner(u, A @ u)
    P = ops.lp(u, p)
    if N <= 0 or P <= 0:
        raise SolverError("seed has no positive energy")
    return u * (N / P) ** (1 / (p - 2))


def _descent(ops, A, lu, u, p, steps, q_hist):
    """Preconditioned gradient descent on Q with Armijo backtracking; Q never increases.

    The search direction g = u - (N/P) A^{-1} u^{p-1} is the gradient of Q in the
    inner product <A., .>, so the slope along -g is -2<g, Ag>/P^{2/p}.
    """
    def Q(v):
        return ops.inner(v, A @ v) / ops.lp(v, p) ** (2 / p)
    q = Q(u)
    for k in range(steps):
        N = ops.inner(u, A @ u)
        P = ops.lp(u, p)
        g = u - (N / P) * lu.solve(np.abs(u) ** (p - 2) * u)
        if np.abs(g).max() < 1e-7 * np.abs(u).max():
            return u, k
        slope = 2 * ops.inner(g, A @ g) / P ** (2 / p)
        t = 1.0
        while True:
            v = np.maximum(u - t * g, 0.0)
            qv = Q(v)
            if qv <= q - 1e-4 * t * slope:
                break
            t /= 2
            if t < 1e-8:
                return u, k
        u = _nehari(ops, A, v, p)
        q = qv
        q_hist.append(q)
    return u, steps


def solve_el(mu: float, p: float, d: int, seed: CylinderField, grid: CylinderGrid | None = None,
             tol: float = 1e-9, maxit: int = 40, descent_steps: int = 400,
             use_descent: bool = True) -> BranchPoint:
    """Solve -Delta u + mu u = u^{p-1} by damped Newton, with descent on Q as a fallback.

    Convergence is declared when sup|F| <= tol * max(1, sup u^{p-1}).
    """
    if not mu > 0:
        raise ParameterError("mu must be positive")
    grid = grid or seed.grid
    if seed.grid != grid:
        seed = regrid(seed, grid, d)
    ops = grid_operators(grid, d)
    A = ops.A(mu)
    u = np.maximum(seed.flat.copy(), 0.0)
    if not np.any(u > 0):
        raise SolverError("seed vanishes identically")
    u = _nehari(ops, A, u, p)
    clipped = 0
    q_hist: list = []
    total_it = 0
    used_descent = 0

    def newton(u):
        nonlocal clipped, total_it
        f = _residual(ops, A, u, p)
        r = np.linalg.norm(f)
        for it in range(maxit):
            scale = max(1.0, np.abs(u).max() ** (p - 1))
            if np.abs(f).max() <= tol * scale:
                return u, True
            J = A - sps.diags((p - 1) * np.abs(u) ** (p - 2))
            du = splu(J.tocsc()).solve(f)
            t = 1.0
            while True:
                un = u - t * du
                fn = _residual(ops, A, un, p)
                rn = np.linalg.norm(fn)
                if rn < (1 - 1e-4 * t) * r:
                    break
                t /= 2
                if t < 1e-4:
                    log.debug("line search failed at mu=%g, |F|=%.3e", mu, r)
                    return u, False
            total_it += 1
            log.debug("newton mu=%g it=%d t=%g |F|=%.3e sup|F|=%.3e sup u=%.4g", mu, it, t, rn, np.abs(fn).max(), np.abs(un).max())
            # negative lobes at the discretization level are left alone; clipping them
            # would keep the residual above the tolerance forever
            if un.min() < -NEGATIVE_TOL * np.abs(un).max():
                clipped += 1
                un = np.maximum(un, 0.0)
                fn = _residual(ops, A, un, p)
                rn = np.linalg.norm(fn)
            u, f, r = un, fn, rn
        scale = max(1.0, np.abs(u).max() ** (p - 1))
        return u, bool(np.abs(f).max() <= tol * scale)

    u_new, ok = newton(u)
    if not ok and use_descent:
        log.info("Newton stalled at mu=%g; switching to descent", mu)
        lu = splu(A)
        u_d, used_descent = _descent(ops, A, lu, u, p, descent_steps, q_hist)
        u_new, ok = newton(u_d)
    if not ok:
        raise SolverError(f"no convergence at mu={mu}")
    if np.sqrt(ops.inner(u_new, u_new)) < 1e-8:
        raise SolverError("converged to the zero solution")
    if clipped:
        log.warning("clipped negative values %d times at mu=%g", clipped, mu)
    fld = CylinderField(grid, u_new)
    st = field_stats(fld, p, d)
    res = float(np.abs(_residual(ops, A, u_new, p)).max())
    return BranchPoint(mu=mu, field=fld, tau=st["tau"], nu=st["nu"], residual_norm=res,
                       symmetric=st["f1_amplitude"] < SYMMETRY_TOL, q=st["nu"] * (mu + st["tau"]),
                       f1_amplitude=st["f1_amplitude"], clipped=clipped, iterations=total_it,
                       descent_steps=used_descent, q_history=q_hist)


def solve_symmetric(mu: float, p: float, d: int, grid: CylinderGrid) -> BranchPoint:
    return solve_el(mu, p, d, symmetric_field(mu, p, grid), grid)


def descent_to_nonsymmetric(mu: float, p: float, d: int, grid: CylinderGrid, amplitude: float = 0.3) -> BranchPoint:
    """Perturb the symmetric extremal along f1 and let descent find the lower-energy state."""
    ops = grid_operators(grid, d)
    u, _, _ = symmetric_extremal(mu, p)
    us = u(grid.s)
    vals = np.outer(us, np.ones(grid.n_zeta)) + amplitude * np.outer(us ** (p / 2) / us.max() ** (p / 2 - 1), ops.f1)
    seed = CylinderField(grid, np.maximum(vals, 0))
    A = ops.A(mu)
    lu = splu(A)
    v = _nehari(ops, A, seed.flat, p)
    hist: list = []
    v, _ = _descent(ops, A, lu, v, p, 2000, hist)
    return solve_el(mu, p, d, CylinderField(grid, v), grid)


@dataclass
class StepPolicy:
    step: float = 0.05
    min_step: float = 1e-4
    max_step: float = 1.0
    growth: float = 1.5
    mu_values: tuple | None = None   # explicit list overrides the adaptive stepping


@dataclass
class Branch:
    p: float
    d: int
    points: list
    mu_bifurcation_estimate: float = float("nan")
    diagnostics: list = field(default_factory=list)
    truncated: bool = False

    @property
    def mu(self):
        return np.array([pt.mu for pt in self.points])

    @property
    def tau(self):
        return np.array([pt.tau for pt in self.points])

    @property
    def nu(self):
        return np.array([pt.nu for pt in self.points])


def estimate_bifurcation(points) -> float:
    """Extrapolate the squared f1 amplitude, which is linear in mu near the threshold, to zero."""
    ns = [pt for pt in points if not pt.symmetric]
    if len(ns) < 2:
        return float("nan")
    ns = ns[:3]
    mu = np.array([pt.mu for pt in ns])
    a2 = np.array([pt.f1_amplitude ** 2 for pt in ns])
    k, b = np.polyfit(mu, a2, 1)
    return float(-b / k)


def continue_branch(mu_start: float, mu_end: float, step_policy: StepPolicy | None, p: float, d: int,
                    grid: CylinderGrid | None = None, c: float | None = None,
                    regrid_factor: float = 1.5) -> Branch:
    """Follow the non-symmetric branch from mu_start to mu_end.

    The first point (and any point within a small window above mu_FS) is seeded by the
    bifurcation ansatz; later points use a secant predictor from the last two solutions.
    Failed steps are halved; below min_step the branch is returned truncated.
    When `grid` is None the grid follows mu: S is rebuilt whenever mu has grown by
    `regrid_factor` and n_zeta is raised as soon as the default for mu exceeds it.
    """
    from .expansion import build_ansatz, c_pd
    pol = step_policy or StepPolicy()
    mfs = mu_fs(p, d)
    if mu_start < mfs - 1e-12:
        raise ParameterError(f"mu_start={mu_start} lies below mu_FS={mfs}: no non-symmetric branch there")
    if c is None:
        c, ok = c_pd(p, d)
        if not ok or not c > 0:
            raise SolverError("c_{p,d} is not positive; the ansatz seed is unavailable")
    adaptive_grid = grid is None
    cur_grid = grid or default_cylinder_grid(p, d, mu_start)
    grid_mu = mu_start
    branch = Branch(p, d, [])

    def ansatz_seed(mu, g):
        return ansatz_field(build_ansatz(max(mu, mfs), p, d, c), g, d)

    if pol.mu_values is not None:
        targets = list(pol.mu_values)
    else:
        targets = None
    mu = mu_start
    step = pol.step
    fails = 0
    while True:
        if targets is not None:
            if not targets:
                break
            mu = targets[0]
        if (targets is None and mu > mu_end and branch.points
                and branch.points[-1].mu < mu_end * (1 - 1e-9)):
            mu = mu_end          # land exactly on the requested end point
        if mu > mu_end * (1 + 1e-12):
            break
        if adaptive_grid:
            # tau converges more slowly in n_zeta than Q, so keep zeta resolution in step with mu
            g = default_cylinder_grid(p, d, mu)
            if mu > grid_mu * regrid_factor:
                cur_grid, grid_mu = g, mu
            elif g.n_zeta > cur_grid.n_zeta:
                cur_grid = CylinderGrid(cur_grid.S, cur_grid.n_s, g.n_zeta)
        pts = branch.points
        if len(pts) >= 2 and pts[-1].field.grid == cur_grid and pts[-2].field.grid == cur_grid:
            r = (mu - pts[-1].mu) / (pts[-1].mu - pts[-2].mu)
            seed = CylinderField(cur_grid, np.maximum(pts[-1].field.values
                                                      + r * (pts[-1].field.values - pts[-2].field.values), 0))
        elif pts:
            seed = regrid(pts[-1].field, cur_grid, d) if pts[-1].field.grid != cur_grid else pts[-1].field
        else:
            seed = ansatz_seed(mu, cur_grid)
        try:
            pt = solve_el(mu, p, d, seed, cur_grid)
            if pt.symmetric and mu > mfs:
                pt = solve_el(mu, p, d, ansatz_seed(mu, cur_grid), cur_grid)
            if pt.symmetric and mu > mfs:
                pt = descent_to_nonsymmetric(mu, p, d, cur_grid)
            if pt.symmetric and mu > mfs:
                raise SolverError(f"only the symmetric solution was found at mu={mu}")
        except SolverError as exc:
            fails += 1
            branch.diagnostics.append(f"mu={mu:.6g}: {exc}")
            if targets is not None:
                targets.pop(0)
                continue
            prev = pts[-1].mu if pts else mu_start
            step /= 2
            if step < pol.min_step or fails > 20:
                branch.truncated = True
                branch.diagnostics.append(f"branch lost after mu={prev:.6g}")
                break
            mu = prev + step if pts else mu_start + step
            continue
        branch.points.append(pt)
        if targets is not None:
            targets.pop(0)
        else:
            step = min(step * pol.growth, pol.max_step)
            mu = pt.mu + step
    branch.mu_bifurcation_estimate = estimate_bifurcation(branch.points)
    return branch


def reparametrize(branch: Branch, theta: float):
    """(mu, Lambda^theta, J^theta) along a branch using the solver tau and nu."""
    from .analytic import vartheta
    lo = vartheta(branch.p, branch.d)
    if not (lo - 1e-12 <= theta <= 1):
        raise ParameterError(f"theta must lie in [{lo:.6g}, 1]")
    mu, tau, nu = branch.mu, branch.tau, branch.nu
    lam = theta * mu - (1 - theta) * tau
    J = theta ** theta * (mu + tau) ** theta * nu
    return mu, lam, J


def tangency_check(branch: Branch, theta: float, npts: int = 3) -> float:
    """delta^theta = (J)'/(Lambda)' - (J*)'/(Lambda*)' extrapolated linearly to mu_FS."""
    from .analytic import j_star
    if len(branch.points) < npts:
        raise ValueError("tangency check needs at least %d branch points" % npts)
    p, d = branch.p, branch.d
    mu, lam, J = reparametrize(branch, theta)
    dJ = np.gradient(J, mu)
    dL = np.gradient(lam, mu)
    sym = j_star(mu, p, theta) * (p + 2) / (2 * p * mu)
    delta = dJ / dL - sym
    k = min(npts, len(mu))
    coef = np.polyfit(mu[1:k + 1] if len(mu) > k else mu[:k], delta[1:k + 1] if len(mu) > k else delta[:k], 1)
    return float(np.polyval(coef, mu_fs(p, d)))


def dump_field(fld: CylinderField, path, mu: float | None = None, p: float | None = None,
               d: int | None = None) -> tuple[Path, Path]:
    """Write <path>.bin (little-endian float64, row-major (s, zeta), full s grid) and <path>.json."""
    path = Path(path)
    data = fld.full().astype("<f8")
    g = fld.grid
    header = {"S": g.S, "n_s": g.n_s, "n_zeta": g.n_zeta, "shape": list(data.shape),
              "dtype": "float64", "endianness": "little", "order": "row-major (s, zeta)",
              "s_range": [-g.S, g.S], "zeta_nodes": "Gauss-Jacobi in cos(zeta), alpha=beta=(d-3)/2",
              "mu": mu, "p": p, "d": d}
    if d is not None:
        header["zeta"] = grid_operators(g, d).zeta.tolist()
    bin_path = path.with_suffix(".bin")
    json_path = path.with_suffix(".json")
    try:
        data.tofile(bin_path)
        json_path.write_text(json.dumps(header, indent=2))
    except OSError as exc:
        raise OSError(f"cannot write field dump to {path}: {exc}") from exc
    return bin_path, json_path


def load_field(path) -> CylinderField:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    grid = CylinderGrid(header["S"], header["n_s"], header["n_zeta"])
    data = np.fromfile(path.with_suffix(".bin"), dtype="<f8").reshape(header["shape"])
    return CylinderField(grid, data[grid.m - 1:])
