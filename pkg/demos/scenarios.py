"""Scenario classification in the critical case theta = vartheta, d = 5.

Scenario two: the symmetric constant at the bifurcation point is below K_GN, so the
branch sits above the level 1/K_GN. Scenario one: the branch starts below that level.
"""
import numpy as np

from ckn_branches import analytic as an
from ckn_branches import expansion as ex
from ckn_branches.classify import classify_scenario, p_star

d = 5
for p in (2.5, 2.8, 3.0, 3.1, 3.15, 3.25):
    r = classify_scenario(p, d)
    print(f"p = {p:4.2f}  scenario {r.scenario:>3}  K_GN = {r.K_GN:.5f}  K*(FS) = {r.K_star_at_FS:.5f}  "
          f"theta2 - vartheta = {r.theta2 - an.vartheta(p, d):+.5f}")

ps = p_star(d)
print(f"\nK_GN = K*(FS) at p_star = {ps[0]:.4f}")
grid = np.linspace(2.9, 3.1, 2001)
gap = np.array([ex.theta2(p, d) - an.vartheta(p, d) for p in grid])
print(f"theta2 = vartheta at p = {grid[np.argmin(np.abs(gap))]:.4f}")
