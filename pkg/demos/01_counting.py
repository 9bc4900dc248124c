"""Counting lattice points on c-spheres.

A c-sphere of radius lam is the set of x in Z^3 with
floor(|x1|^c) + floor(|x2|^c) + floor(|x3|^c) = lam.  This demo counts
them with the convolution engine, checks the counts against brute force,
and compares them with the smooth main term.
"""
import numpy as np

from csphere.counting import asymptotic_report, count_c_sphere, first_full_radius
from csphere.oracles import brute_table

c = "21/20"

print("Counts for c = 21/20 at small radii:")
table = count_c_sphere(c, 2000)
print("  r(0..10) =", table.counts[:11].tolist())

ref = brute_table(c, 2000).value
print("  identical to brute force up to 2000:", np.array_equal(table.counts, ref))

print("\nThe Euclidean case c = 2 has Legendre's empty spheres:")
euclid = count_c_sphere(2, 60).counts
print("  empty radii up to 60:", np.flatnonzero(euclid == 0).tolist())

print("\nFor c slightly above 1 no sphere is empty:")
big = count_c_sphere(c, 10 ** 5)
print("  last empty radius + 1 below 1e5:", first_full_radius(big))

rep = asymptotic_report(big, c)
print("\nMean of r / main term over dyadic windows:")
for lo, hi, mean in rep.windows[-5:]:
    print(f"  [{lo:>6}, {hi:>6}]  {mean:.5f}")
print(f"cumulative count vs ball volume: relative error {rep.cumulative_relerr:.2e}")
