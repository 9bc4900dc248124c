"""Splitting the sphere indicator into major and minor arc kernels.

The indicator sigma_lam of the lattice sphere is written as the integral of
its exponential sum over the circle.  A bump psi localised near t = 0 splits
that integral into a smooth major part and an oscillating minor part.
"""
import numpy as np

from csphere.averages import domination, k_mass, kernel_field, minor_norms, omega_ratio

c = "21/20"
for lam in (50, 200, 500):
    fld = kernel_field(lam, c)
    print(f"lam={lam:>3}  max |major + minor - sigma| = {fld.partition_error:.1e}")

fld = kernel_field(200, c)
pts = np.array([[0, 0, 155], [0, 0, 156], [0, 0, 157], [10, 20, 30]])
print("\nkernels at a few points, lam = 200:")
for kind in ("sigma", "major", "minor"):
    print(f"  {kind:>5}", np.round(fld.evaluate(pts, kind), 6).tolist())

s, sM, sm = minor_norms(200, c)
print(f"\nl2 norms: sigma {s:.2f}  major {sM:.2f}  minor {sm:.2f}")

print("\nComparisons with the model kernel K_lam:")
for lam in (32, 512, 4096):
    d = domination(lam, c)
    print(f"  lam={lam:>4}  sup major/K = {d.realized:.2e}  |K|_1 = {k_mass(lam, 1.05):.3f}  "
          f"omega ratio = {omega_ratio(lam, 1.05, samples=20_000):.1f}")
