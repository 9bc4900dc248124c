"""Projected lattice points equidistribute on the unit c-sphere.

Scaling the c-sphere of radius lam by lam^(-1/c) puts its lattice points on
the unit c-sphere.  Averages of a test function over them approach its
integral against the normalised surface measure, and cap counts approach
r times the cap measure.
"""
import numpy as np

from csphere.equidist import discrepancy_decay, project, weyl_sum, weyl_trig

c = "21/20"

cloud = project(2000, c)
print(f"lam=2000: {cloud.count} points")
res = weyl_sum(cloud, lambda p: np.exp(-np.sum(p * p, axis=1)))
print(f"  Gaussian average {res.value.real:.6f}, surface average {res.limit.real:.6f}")

print("\nAverage of e(x.(1,2,3)) over the sphere:")
for k in range(8, 17, 2):
    r = weyl_trig(c, 2 ** k, [1, 2, 3])
    print(f"  lam=2^{k:<2}  gap {r.gap:.2e}")

print("\nNormalised cap discrepancy, mean over 4 directions:")
rep = discrepancy_decay(c, [2 ** k for k in range(7, 13)], n_directions=4, seed=0)
for lam, m in zip(rep.lams, rep.mean_normalized):
    print(f"  lam={lam:>5}  D/r = {m:.2e}")
print(f"log-log slope {rep.slope:.3f}")
