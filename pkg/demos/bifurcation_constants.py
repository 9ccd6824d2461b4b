"""Local constants of the non-symmetric branch at the first bifurcation point.

For a few exponents p in dimension d = 5 this prints c_{p,d}, the slope tau'(mu_FS)
of the branch, and the exponent theta2 at which the branch is tangent to the symmetric one.
"""
from ckn_branches import analytic as an
from ckn_branches import expansion as ex

d = 5
print(f"d = {d}, p_approx(d) = {ex.p_approx(d):.5f}")
print(f"{'p':>5} {'vartheta':>9} {'mu_FS':>8} {'c_pd':>10} {'c_approx':>10} {'tau_prime':>10} {'theta2':>8}")
for p in (2.2, 2.5, 2.8, 3.0, 3.15, 3.3):
    c, ok = ex.c_pd(p, d)
    ca, _ = ex.c_pd_approx(p, d)
    tp = ex.tau_prime_fs(p, d, c)
    print(f"{p:5.2f} {an.vartheta(p, d):9.5f} {an.mu_fs(p, d):8.4f} {c:10.6f} {ca:10.6f} {tp:10.5f} {ex.theta2(p, d, c):8.5f}"
          + ("" if ok else "  (H fails)"))

# theta2 > vartheta means the branch starts below the symmetric curve at theta = vartheta
rep = ex.expansion_report(2.8, d)
print()
print(rep.to_json())
