"""Spherical averages, torus rotations and r-variation.

Discrete averages convolve a function on Z^3 with the normalised sphere
indicator.  On the torus the averages of e(m.x) act by a multiplier that
tends to 0 for irrational rotations.  The r-variation seminorm measures
how much a sequence of averages oscillates.
"""
import math

import numpy as np

from csphere.averages import discrete_average, maximal_profile, torus_ergodic_run, \
    variation_seminorm

c = "21/20"
f = np.zeros((21, 21, 21), dtype=np.int64)
f[10, 10, 10] = 1
f[5:8, 5:8, 5:8] = 1
avg = discrete_average(f, 40, c)
print(f"average at lam=40: total mass {avg.values.sum():.6f}, max {avg.values.max():.4f}")

vals, origin, used = maximal_profile(f, [4, 8, 16, 32], c)
print("pointwise maximal function at the centre:", float(vals[tuple(origin)]))

g = (math.sqrt(5) - 1) / 2
run = torus_ergodic_run([g, g, g], [1, 1, 1], [2 ** k for k in range(4, 14)], c)
print("\n|multiplier| for the golden rotation:")
for lam, m in zip(run.lams, run.multipliers):
    print(f"  lam={lam:>5}  {abs(m):.2e}")

seq = np.abs(np.array(run.multipliers))
print(f"\n2-variation of that sequence: {variation_seminorm(seq, 2.0):.4f}")
print(f"1-variation (total variation): {variation_seminorm(seq, 1.0):.4f}")
