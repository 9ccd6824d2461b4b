"""Large-mu behaviour of the branch at theta = 1: J^1(mu) mu^(vartheta-1) tends to S_p.

Solutions concentrate near a pole of the sphere, so each point is seeded by a rescaled
Gagliardo-Nirenberg ground state rather than by continuation.
"""
from ckn_branches import analytic as an
from ckn_branches.classify import asymptotic_constant, k_gn
from ckn_branches.continuation import concentrated_seed, default_cylinder_grid, solve_el

p, d = 2.8, 5
th = an.vartheta(p, d)
limit = asymptotic_constant(1.0, p, d, k_gn(p, d))
print(f"limit S_p = {limit:.5f}")
for k in (5, 10, 20, 50):
    mu = k * an.mu_fs(p, d)
    g = default_cylinder_grid(p, d, mu)
    pt = solve_el(mu, p, d, concentrated_seed(mu, p, d, g), g)
    print(f"mu = {k:3d} mu_FS  n_zeta = {g.n_zeta:3d}  J^1 mu^(vartheta-1) = {pt.J1 * mu ** (th - 1):.5f}"
          f"  ratio {pt.J1 * mu ** (th - 1) / limit:.4f}  tau/mu = {pt.tau / mu:.3f} (limit {th / (1 - th):.3f})")
