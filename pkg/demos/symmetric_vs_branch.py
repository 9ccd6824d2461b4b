"""Follow the non-symmetric branch for p = 2.8, d = 5 and compare it with the symmetric one.

Near mu_FS the energy gap follows the second-order prediction 1 - (p^2-4) c (mu-mu_FS)^2 / 8.
"""
import numpy as np

from ckn_branches import analytic as an
from ckn_branches import expansion as ex
from ckn_branches.continuation import StepPolicy, continue_branch, solve_el, symmetric_field

p, d = 2.8, 5
mfs = an.mu_fs(p, d)
mus = mfs + np.array([0.05, 0.1, 0.2, 0.4, 0.8])
br = continue_branch(mus[0], mus[-1], StepPolicy(mu_values=tuple(mus)), p, d)
print(f"mu_FS = {mfs:.6f}, bifurcation estimated from the branch at {br.mu_bifurcation_estimate:.6f}")
print(f"{'mu-mu_FS':>9} {'Q/Q*':>12} {'predicted':>12} {'f1 amplitude':>13} {'tau':>9} {'tau*':>9}")
for pt in br.points:
    g = pt.field.grid
    sym = solve_el(pt.mu, p, d, symmetric_field(pt.mu, p, g), g)
    pred = ex.energy_ratio_prediction(pt.mu, p, d)
    print(f"{pt.mu - mfs:9.3f} {pt.q / sym.q:12.8f} {float(pred):12.8f} {pt.f1_amplitude:13.5f} "
          f"{pt.tau:9.5f} {float(an.tau_star(pt.mu, p)):9.5f}")
