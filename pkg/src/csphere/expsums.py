"""Exponential sums over floor-value sets and their bounds.

F_lam(t) = sum_{N0 <= n <= lam} phi'(n) e(nt) and G_lam(t) = sum over
n in N_h, n <= lam, of e(nt).  On the uniform grid t_j = -1/2 + j/M both
are one inverse FFT each, so grid suprema cost O(M log M).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .regvar import RationalExponent, RegVarFunction, floor_pow_array, floor_set, invert, phi_deriv

__all__ = [
    "e",
    "e_int_times",
    "TGrid",
    "ExpSumBoundSpec",
    "kappa",
    "f_sum",
    "g_sum",
    "f_coefficients",
    "g_coefficients",
    "grid_values",
    "fg_gap",
    "FGGap",
    "SandwichError",
    "vdc_check",
    "u_sum",
    "v_sum",
    "pi_sum",
    "minor_arc_scan",
]


def e(x):
    """e(x) = exp(2 pi i x) with the integer part removed first."""
    x = np.asarray(x, dtype=float)
    return np.exp(2j * np.pi * (x - np.rint(x)))


def _two_prod(a, b):
    # Dekker product: a*b = p + err exactly
    p = a * b
    split = 134217729.0  # 2^27 + 1
    a1 = a * split
    ah = a1 - (a1 - a)
    al = a - ah
    b1 = b * split
    bh = b1 - (b1 - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def e_int_times(k, t):
    """e(k t) for integer k, reducing k t modulo 1 with a compensated product."""
    k = np.asarray(k, dtype=float)
    t = np.asarray(t, dtype=float)
    p, err = _two_prod(k, t)
    frac = (p - np.rint(p)) + err
    return np.exp(2j * np.pi * frac)


def kappa(c) -> float:
    """kappa = 3/(4c) - 1; lies in (-5/8, -1/4) for c in (1, 2)."""
    return 3.0 / (4.0 * float(c)) - 1.0


@dataclass(frozen=True)
class TGrid:
    """Nodes t_j = -1/2 + j/M, j = 0..M-1 (t = 1/2 is the same point as -1/2)."""

    M: int
    minor_from: float | None = None

    @property
    def nodes(self) -> np.ndarray:
        t = -0.5 + np.arange(self.M) / self.M
        if self.minor_from is not None:
            t = t[np.abs(t) >= self.minor_from]
        return t


@dataclass(frozen=True)
class ExpSumBoundSpec:
    """Exponent chi for the F - G comparison, with 4(1 - 1/c) + 5 chi < 1."""

    c: float
    chi: float

    def __post_init__(self):
        g = 1.0 / self.c
        if not (self.chi > 0 and 4 * (1 - g) + 5 * self.chi < 1):
            raise ValueError(f"chi={self.chi} outside (0, (1 - 4(1 - 1/c))/5)")
        k = kappa(self.c)
        if not -1 < k < 0:
            raise ValueError("kappa must lie in (-1, 0)")

    @classmethod
    def default(cls, c: float) -> "ExpSumBoundSpec":
        g = 1.0 / c
        return cls(c, (1 - 4 * (1 - g)) / 5 - 0.01)

    @property
    def kappa(self) -> float:
        return kappa(self.c)

    def N_c(self, N: float) -> float:
        return (2 * self.c) ** -1 * (2 * N) ** self.kappa


# ---------------------------------------------------------------------------
# F and G


def f_coefficients(h: RegVarFunction, lam: int) -> np.ndarray:
    """a_n = phi'(n) for N0 <= n <= lam, zero otherwise (length lam + 1)."""
    a = np.zeros(lam + 1)
    if lam >= h.N0:
        a[h.N0:] = phi_deriv(h, np.arange(h.N0, lam + 1, dtype=float), 1)
    return a


def g_coefficients(h: RegVarFunction, lam: int) -> np.ndarray:
    b = np.zeros(lam + 1)
    b[floor_set(h, lam).elements] = 1.0
    return b


def _trig_sum(coef: np.ndarray, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = np.nonzero(coef)[0]
    out = np.empty(t.size, dtype=complex)
    for i, ti in enumerate(t):
        # numpy's sum is pairwise for contiguous arrays
        out[i] = np.sum(coef[n] * e_int_times(n, ti))
    return out


def f_sum(h: RegVarFunction, lam: int, t):
    """F_lam(t) at one or more t."""
    out = _trig_sum(f_coefficients(h, lam), t)
    return out[0] if np.ndim(t) == 0 else out


def g_sum(h: RegVarFunction, lam: int, t):
    """G_lam(t) at one or more t."""
    out = _trig_sum(g_coefficients(h, lam), t)
    return out[0] if np.ndim(t) == 0 else out


def grid_values(coef: np.ndarray, M: int) -> np.ndarray:
    """sum_n coef[n] e(n t_j) for t_j = -1/2 + j/M, by one FFT (M > len(coef))."""
    if M < coef.size:
        raise ValueError("grid must have more nodes than coefficients")
    n = np.arange(coef.size)
    shifted = coef * np.where(n % 2 == 0, 1.0, -1.0)  # e(-n/2)
    return np.fft.ifft(shifted, M) * M


@dataclass
class FGGap:
    lam: int
    sup: float
    argmax_t: float
    bound: float
    fitted_C: float
    lipschitz_slack: float
    M: int


def fg_gap(h: RegVarFunction, lam: int, spec: ExpSumBoundSpec | None = None,
           oversample: int = 8) -> FGGap:
    """Grid sup of |F_lam - G_lam| with resolution at least ``oversample * lam``.

    The grid value bounds the true sup from below; ``lipschitz_slack`` bounds
    how much larger the sup can be between nodes.
    """
    spec = spec or ExpSumBoundSpec.default(h.c)
    d = f_coefficients(h, lam) - g_coefficients(h, lam)
    M = 1 << int(math.ceil(math.log2(oversample * max(lam, 1) + 1)))
    vals = np.abs(grid_values(d, M))
    j = int(np.argmax(vals))
    sup = float(vals[j])
    bound = float(invert(h, float(lam))) * lam ** (-spec.chi)
    slack = math.pi * float(np.sum(np.arange(d.size) * np.abs(d))) / M
    return FGGap(lam, sup, -0.5 + j / M, bound, sup / bound, slack, M)


# ---------------------------------------------------------------------------
# Van der Corput


class SandwichError(ValueError):
    """The supplied eta, r do not bracket |F''| on the interval."""


@dataclass
class VdcResult:
    lhs: float
    rhs: float
    passed: bool


def vdc_check(F: Callable, Fpp: Callable, interval: tuple, eta: float, r: float,
              C0: float = 10.0, mesh: int = 1000) -> VdcResult:
    """|sum_{k in I} e(F(k))| against C0 (r |I| eta^(1/2) + eta^(-1/2)).

    ``Fpp`` is the second derivative; eta <= |F''| <= r eta is checked on a
    mesh of the interval before the sum is taken.
    """
    a, b = int(interval[0]), int(interval[1])
    if b < a:
        raise ValueError("empty interval")
    if not eta > 0 or r < 1:
        raise SandwichError("need eta > 0 and r >= 1")
    xs = np.linspace(a, b, mesh)
    f2 = np.abs(np.asarray(Fpp(xs), dtype=float))
    tol = 1e-12 * eta
    if np.any(f2 < eta - tol) or np.any(f2 > r * eta + tol):
        raise SandwichError("second derivative leaves [eta, r eta] on the interval")
    k = np.arange(a, b + 1, dtype=float)
    lhs = float(abs(np.sum(e(np.asarray(F(k), dtype=float)))))
    length = b - a + 1
    rhs = C0 * (r * length * math.sqrt(eta) + 1 / math.sqrt(eta))
    return VdcResult(lhs, rhs, lhs <= rhs)


# ---------------------------------------------------------------------------
# the sums U, V and Pi


@dataclass
class SumWithBound:
    value: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.value / self.bound if self.bound > 0 else math.inf


def _frac_power(n: np.ndarray, c) -> np.ndarray:
    """Fractional part of n^c, exact integer part removed via floor_pow."""
    c = RationalExponent.parse(c)
    fl = floor_pow_array(n, c)
    return n.astype(float) ** c.value - fl.astype(float), fl


def u_sum(P: int, P2: int, t: float, xi: float, c) -> SumWithBound:
    """|sum_{P <= n <= P2} e(n^c t + n xi)| with the bound P^(c/2)|t|^(1/2) + P^(1-c/2)|t|^(-1/2)."""
    if not 1 <= P <= P2 <= 2 * P:
        raise ValueError("need 1 <= P <= P2 <= 2P")
    cc = RationalExponent.parse(c)
    n = np.arange(P, P2 + 1, dtype=np.int64)
    frac, fl = _frac_power(n, cc)
    phase = e_int_times(fl, t) * e(frac * t) * e_int_times(n, xi)
    val = float(abs(np.sum(phase)))
    c_ = cc.value
    bound = P ** (c_ / 2) * abs(t) ** 0.5 + P ** (1 - c_ / 2) * abs(t) ** -0.5 if t != 0 else math.inf
    return SumWithBound(val, bound)


def v_sum(P: int, P2: int, M: float, c) -> SumWithBound:
    """sum min(1, 1/(M ||n^c||)) with the bound (1 + log M)(P/M + P^(c/2) M^(1/2))."""
    if not 1 <= P <= P2 <= 2 * P:
        raise ValueError("need 1 <= P <= P2 <= 2P")
    if M < 1:
        raise ValueError("M must be at least 1")
    cc = RationalExponent.parse(c)
    n = np.arange(P, P2 + 1, dtype=np.int64)
    frac, _ = _frac_power(n, cc)
    dist = np.minimum(frac, 1 - frac)
    with np.errstate(divide="ignore"):
        terms = np.minimum(1.0, 1.0 / (M * dist))
    val = float(np.sum(terms))
    bound = (1 + math.log(M)) * (P / M + P ** (cc.value / 2) * M ** 0.5)
    return SumWithBound(val, bound)


def pi_sum(g: Callable, support: float, t: float, s: float, xi: float, c) -> complex:
    """sum_n e(floor(|n|^c) t + n xi) g(n / s^(1/c)) for a bump g supported in [-support, support]."""
    cc = RationalExponent.parse(c)
    if s < 1:
        raise ValueError("s must be at least 1")
    scale = s ** (1.0 / cc.value)
    R = int(math.floor(support * scale))
    n = np.arange(-R, R + 1, dtype=np.int64)
    fl = floor_pow_array(np.abs(n), cc)
    w = g(n / scale)
    return complex(np.sum(w * e_int_times(fl, t) * e_int_times(n, xi)))


@dataclass
class MinorArcScan:
    N: int
    max_abs: float
    argmax: tuple
    bound: float
    fitted_C: float


def minor_arc_scan(g: Callable, support: float, N: int, c, samples: int = 64,
                   seed: int = 0) -> MinorArcScan:
    """max |Pi_{t,s}(xi)| over seeded (s, xi, t) with s in [N, 2N] and |t| in [N_c, 1/2]."""
    cc = RationalExponent.parse(c)
    spec_k = kappa(cc.value)
    Nc = (2 * cc.value) ** -1 * (2 * N) ** spec_k
    rng = np.random.default_rng(seed)
    best, arg = 0.0, None
    for _ in range(samples):
        s = rng.uniform(N, 2 * N)
        xi = rng.uniform(-0.5, 0.5)
        t = rng.uniform(Nc, 0.5) * rng.choice([-1, 1])
        v = abs(pi_sum(g, support, t, s, xi, cc))
        if v > best:
            best, arg = v, (s, xi, t)
    bound = N ** (1 / 3 + 1 / (3 * cc.value)) * math.log(N + 1)
    return MinorArcScan(N, best, arg, bound, best / bound)
