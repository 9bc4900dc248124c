"""Slow, definition-level reference computations.

Nothing here imports the counting, quadrature or kernel code of the package;
floors are recomputed with a bisection integer root so that agreement with
the production paths is a genuine cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

__all__ = [
    "OracleResult",
    "naive_floor_pow",
    "brute_count",
    "brute_table",
    "brute_cloud",
    "brute_discrepancy",
    "classical_sphere_ft",
    "gamma_hp",
    "brute_variation",
    "spherical_mean_gaussian",
]

HORIZON_GUARD = 20_000


@dataclass
class OracleResult:
    value: object
    method: str
    cost: dict = field(default_factory=dict)


def _exponent(c) -> Fraction:
    c = Fraction(c) if not isinstance(c, str) else Fraction(c)
    if c <= 0:
        raise ValueError("exponent must be positive")
    return c


def naive_floor_pow(m: int, c) -> int:
    """floor(m^c) by bisection on k^q <= m^p."""
    c = _exponent(c)
    p, q = c.numerator, c.denominator
    target = m ** p
    lo, hi = 0, 1
    while hi ** q <= target:
        hi *= 2
    # invariant lo^q <= target < hi^q
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid ** q <= target:
            lo = mid
        else:
            hi = mid
    return lo


def _floor_table(c, lam: int) -> np.ndarray:
    vals = []
    m = 0
    while True:
        v = naive_floor_pow(m, c)
        if v > lam:
            break
        vals.append(v)
        m += 1
    return np.array(vals, dtype=np.int64)


def _guard(lam: int):
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam > HORIZON_GUARD:
        raise ValueError(f"brute force refused above lambda = {HORIZON_GUARD}")


def brute_table(c, lam_max: int, domain: str = "Z3") -> OracleResult:
    """Histogram of Q(x) <= lam_max over every lattice point.

    Loops over the first coordinate, then over the second; the third runs
    as a vector.  In Z^3 each nonzero coordinate carries weight 2 (its sign).
    """
    _guard(lam_max)
    f = _floor_table(c, lam_max)
    if domain == "Z3":
        w = np.where(np.arange(f.size) == 0, 1, 2).astype(np.int64)
        start = 0
    elif domain == "Z+3":
        w = np.ones(f.size, dtype=np.int64)
        start = 1
    else:
        raise ValueError("domain must be 'Z3' or 'Z+3'")
    counts = np.zeros(lam_max + 1, dtype=np.int64)
    visits = 0
    for m1 in range(start, f.size):
        for m2 in range(start, f.size):
            s = f[m1] + f[m2]
            if s > lam_max:
                break
            tot = s + f[start:]
            keep = tot <= lam_max
            visits += int(keep.sum())
            np.add.at(counts, tot[keep], w[m1] * w[m2] * w[start:][keep])
    return OracleResult(counts, "brute-triple-loop", {"visited": visits})


def brute_count(c, lam: int) -> int:
    """r_c(lam) from the definition."""
    _guard(lam)
    f = _floor_table(c, lam)
    w = np.where(np.arange(f.size) == 0, 1, 2)
    total = 0
    for m1 in range(f.size):
        for m2 in range(f.size):
            rest = lam - f[m1] - f[m2]
            if rest < 0:
                break
            total += int(w[m1] * w[m2] * np.sum(w[f == rest]))
    return total


def brute_cloud(c, lam: int) -> np.ndarray:
    """All x in Z^3 with sum floor(|x_i|^c) = lam, lexicographically sorted."""
    _guard(lam)
    f = _floor_table(c, lam)
    R = f.size - 1
    xs = np.arange(-R, R + 1)
    fx = f[np.abs(xs)]
    pts = []
    for i, x1 in enumerate(xs):
        for j, x2 in enumerate(xs):
            rest = lam - fx[i] - fx[j]
            if rest < 0:
                continue
            for x3 in xs[fx == rest]:
                pts.append((x1, x2, x3))
    return np.array(pts, dtype=np.int64).reshape(-1, 3)


def brute_discrepancy(c, lam: int, xi, a_values,
                      measure: Callable[[float], float] | None = None) -> OracleResult:
    """Cap counts #{x : x.xi >= a lam^(1/c)} by direct enumeration.

    Returns the counts for each ``a``; with a cap ``measure`` also the signed
    discrepancy and its sup over the supplied thresholds.
    """
    pts = brute_cloud(c, lam)
    xi = np.asarray(xi, dtype=float)
    scale = float(lam) ** (1.0 / float(_exponent(c)))
    proj = pts @ xi / scale
    a_values = np.asarray(a_values, dtype=float)
    counts = np.array([int(np.sum(proj >= a)) for a in a_values])
    out = {"counts": counts, "r": len(pts)}
    if measure is not None:
        d = counts - len(pts) * np.array([measure(a) for a in a_values])
        out["D"] = d
        out["sup"] = float(np.max(np.abs(d)))
    return OracleResult(out, "brute-triple-loop", {"points": len(pts)})


def classical_sphere_ft(R: float) -> float:
    """Fourier transform of surface measure on the unit Euclidean sphere at |xi| = R."""
    if R == 0:
        return 4 * np.pi
    return 2.0 * np.sin(2 * np.pi * R) / R


def gamma_hp(x, dps: int = 50):
    """Gamma(x) at ``dps`` decimal digits (an mpmath number)."""
    with mpmath.workdps(dps):
        if isinstance(x, Fraction):
            x = mpmath.mpf(x.numerator) / x.denominator
        return +mpmath.gamma(x)


def brute_variation(seq, r: float) -> float:
    """V^r by exhaustive search over all subsequences (length <= 16)."""
    a = list(seq)
    n = len(a)
    if n > 16:
        raise ValueError("exhaustive variation limited to 16 terms")
    best = 0.0
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        s = sum(abs(a[idx[k + 1]] - a[idx[k]]) ** r for k in range(len(idx) - 1))
        best = max(best, s)
    return best ** (1.0 / r)


def spherical_mean_gaussian(x, t: float, s: float) -> float:
    """Integral of exp(-|x - t theta|^2 / (2 s^2)) over the unit Euclidean sphere.

    Closed form 4 pi exp(-(|x|^2 + t^2) / (2 s^2)) sinh(b) / b with b = |x| t / s^2.
    """
    x = np.asarray(x, dtype=float)
    rho = float(np.sqrt(np.sum(x * x)))
    b = rho * t / s ** 2
    shape = 1.0 if b == 0 else float(np.sinh(b) / b)
    return 4 * np.pi * float(np.exp(-(rho ** 2 + t ** 2) / (2 * s ** 2))) * shape
