"""The surface measure of the unit c-sphere and its Fourier transform.

The measure mu_c has a closed-form total mass.  Its Fourier transform
decays like 1/R on shells of radius R, and for c = 2 it reduces to the
classical 2 sin(2 pi R) / R.
"""
import numpy as np

from csphere.oracles import classical_sphere_ft
from csphere.surface import CapSpec, SurfaceQuadrature, cap_measure, decay_profile, fourier_mu, \
    surface_integral, surface_mass

for c in (1.05, 1.5, 2.0):
    q = SurfaceQuadrature(c, 128)
    val = surface_integral(lambda p: np.ones(len(p)), q)
    print(f"c={c:<5} mass by quadrature {val:.15f}  closed form {surface_mass(c):.15f}")

print("\nc = 2 against the classical transform:")
for R in (1, 2, 5):
    print(f"  R={R}  {fourier_mu([R, 0, 0], 2.0):+.12f}  {classical_sphere_ft(R):+.12f}")

print("\nR |F mu| on shells, c = 1.05 (max over 16 directions):")
prof = decay_profile(1.05, [2, 4, 8, 16, 32, 64], samples=16, seed=0)
for R, v in zip(prof.radii, prof.max_scaled):
    print(f"  R={R:>4.0f}  {v:.4f}")

print("\nNormalised cap measures along (1, 2, 3), c = 1.05:")
xi = np.array([1.0, 2.0, 3.0]) / np.sqrt(14)
for a in (-0.5, 0.0, 0.5, 0.9):
    print(f"  a={a:+.1f}  nu = {cap_measure(CapSpec(tuple(xi), a), 1.05):.10f}")
