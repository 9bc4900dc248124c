"""Exact representation counts and their asymptotic main terms.

For h_1, h_2, h_3 in the catalog the positive count is

    r(lam) = #{(n1, n2, n3) in N_h1 x N_h2 x N_h3 : n1 + n2 + n3 = lam},

a triple convolution of floor-set indicators.  Floating FFT output is
accepted only when every bin is within 0.25 of an integer; otherwise the
exact modular transform takes over.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .ntt import convolve_exact
from .regvar import (RationalExponent, RegVarFunction, floor_h_array, floor_set,
                     invert, phi_deriv)

__all__ = [
    "CountTable",
    "MarginError",
    "AsymptoticSpec",
    "indicator",
    "convolve_counts",
    "count_positive_range",
    "decompose_signs",
    "count_c_sphere",
    "main_term_3",
    "main_term_c",
    "ball_volume",
    "beta_constant",
    "j2",
    "j3",
    "j2_series",
    "asymptotic_report",
    "first_full_radius",
    "condition_39",
]

MARGIN = 0.25


class MarginError(ArithmeticError):
    """A floating FFT bin was farther than the margin from an integer."""


@dataclass
class CountTable:
    """Counts r(lam) for lam = 0..horizon."""

    counts: np.ndarray
    method: str
    functions: tuple
    N0: tuple
    domain: str = "Z+3"
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.counts.size - 1

    def __getitem__(self, lam):
        return self.counts[lam]

    def __eq__(self, other):
        return isinstance(other, CountTable) and np.array_equal(self.counts, other.counts)

    def header(self) -> dict:
        return {"functions": list(self.functions), "N0": list(self.N0), "method": self.method,
                "domain": self.domain, "horizon": self.horizon, **self.meta}

    def to_csv(self, path, c=None):
        """Write ``lambda,count,main_term,ratio`` preceded by a JSON header line."""
        lam = np.arange(self.counts.size)
        if c is not None:
            main = np.where(lam > 0, main_term_c(c, np.maximum(lam, 1)), np.nan)
            if self.domain == "Z+3":
                main = main / 8.0
        else:
            main = np.full(lam.size, np.nan)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = self.counts / main
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            fh.write("lambda,count,main_term,ratio\n")
            for i in range(lam.size):
                fh.write(f"{i},{int(self.counts[i])},{main[i]:.17g},{ratio[i]:.17g}\n")


# ---------------------------------------------------------------------------
# indicators and convolution


def indicator(h: RegVarFunction, horizon: int, readmit: bool = False) -> np.ndarray:
    """Multiplicity vector of floor values in [0, horizon].

    With ``readmit`` the integers 1 <= m < N0 in the domain are counted as
    well (possibly with repeated floors), which gives the variant of the
    count that ignores the validity threshold.
    """
    out = np.zeros(horizon + 1, dtype=np.int64)
    out[floor_set(h, horizon).elements] = 1
    if readmit and h.N0 > math.ceil(h.x0):
        ms = np.arange(math.ceil(h.x0), h.N0, dtype=np.int64)
        vals = floor_h_array(h, ms)
        vals = vals[vals <= horizon]
        np.add.at(out, vals, 1)
    return out


def convolve_counts(a: np.ndarray, b: np.ndarray, length: int | None = None,
                    exact_only: bool = False) -> np.ndarray:
    """Exact integer convolution truncated to ``length`` entries."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = a.size + b.size - 1
    length = n if length is None else min(length, n)
    bound = float(a.sum()) * float(b.sum())
    if not exact_only and bound < 2.0 ** 50:
        try:
            return _fft_convolve_checked(a, b)[:length]
        except MarginError:
            pass
    return convolve_exact(a, b)[:length]


def _fft_convolve_checked(a, b) -> np.ndarray:
    n = a.size + b.size - 1
    size = 1 << (n - 1).bit_length()
    raw = np.fft.irfft(np.fft.rfft(a.astype(float), size) * np.fft.rfft(b.astype(float), size),
                       size)[:n]
    rounded = np.rint(raw)
    if np.max(np.abs(raw - rounded), initial=0.0) > MARGIN:
        raise MarginError("FFT output left the half-integer margin")
    return rounded.astype(np.int64)


def _pair_histogram(i1: np.ndarray, i2: np.ndarray, horizon: int) -> np.ndarray:
    e1 = np.repeat(np.arange(i1.size), i1)
    e2 = np.repeat(np.arange(i2.size), i2)
    out = np.zeros(horizon + 1, dtype=np.int64)
    for n1 in e1:
        lim = horizon - n1
        sel = e2[e2 <= lim]
        out += np.bincount(sel + n1, minlength=horizon + 1)[:horizon + 1]
    return out


def _shift_add(pairs: np.ndarray, i3: np.ndarray, horizon: int) -> np.ndarray:
    out = np.zeros(horizon + 1, dtype=np.int64)
    for n3 in np.flatnonzero(i3):
        out[n3:] += i3[n3] * pairs[:horizon + 1 - n3]
    return out


def count_positive_range(h1: RegVarFunction, h2: RegVarFunction, h3: RegVarFunction,
                         horizon: int, method: str = "fft",
                         readmit: bool = False) -> CountTable:
    """Positive counts r_{h1,h2,h3}(lam) for every lam <= horizon.

    ``method="enum"`` builds the pair-sum histogram and shifts it along the
    third set; ``method="fft"`` convolves the three indicators.
    """
    hs = (h1, h2, h3)
    floor_min = max(int(floor_h_array(h, [h.N0])[0]) for h in hs)
    if horizon < 3 * floor_min:
        raise ValueError(f"horizon {horizon} below 3*max floor(h(N0)) = {3 * floor_min}")
    ind = [indicator(h, horizon, readmit) for h in hs]
    if method == "enum":
        counts = _shift_add(_pair_histogram(ind[0], ind[1], horizon), ind[2], horizon)
    elif method == "fft":
        counts = convolve_counts(convolve_counts(ind[0], ind[1], horizon + 1), ind[2],
                                 horizon + 1)
    else:
        raise ValueError(f"unknown counting method {method!r}")
    return CountTable(counts, method, tuple(h.spec_string() for h in hs),
                      tuple(h.N0 for h in hs), "Z+3", {"readmit": readmit})


def decompose_signs(r1, r2, r3) -> np.ndarray:
    """Z^3 counts from positive counts in one, two and three variables.

    A lattice point has k nonzero coordinates, each carrying a sign, and
    3, 3, 1 ways of choosing which coordinates vanish for k = 1, 2, 3.
    """
    r1, r2, r3 = (np.asarray(r, dtype=np.int64) for r in (r1, r2, r3))
    out = 8 * r3 + 12 * r2 + 6 * r1
    out[0] += 1
    return out


def count_c_sphere(c, horizon: int, method: str = "fft") -> CountTable:
    """r_c(lam) = #{x in Z^3 : sum floor(|x_i|^c) = lam} for lam <= horizon."""
    c = RationalExponent.parse(c)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    h = RegVarFunction.power(c)
    if h.N0 != 1:
        raise ValueError("the Z^3 decomposition needs N0 = 1")
    ind = indicator(h, horizon)
    if method == "enum":
        r2 = _pair_histogram(ind, ind, horizon)
        r3 = _shift_add(r2, ind, horizon)
    elif method == "fft":
        r2 = convolve_counts(ind, ind, horizon + 1)
        r3 = convolve_counts(r2, ind, horizon + 1)
    else:
        raise ValueError(f"unknown counting method {method!r}")
    counts = decompose_signs(ind, r2, r3)
    return CountTable(counts, method, (h.spec_string(),) * 3, (1, 1, 1), "Z3", {"c": str(c)})


# ---------------------------------------------------------------------------
# main terms


@dataclass(frozen=True)
class AsymptoticSpec:
    """Main term of the three-function count for (h1, h2, h3)."""

    functions: tuple

    @property
    def gammas(self) -> tuple:
        return tuple(1.0 / h.c for h in self.functions)

    def __call__(self, lam):
        return main_term_3(self, lam)


def beta_constant(*gammas: float) -> float:
    """Gamma(g1)...Gamma(gk) / Gamma(g1 + ... + gk)."""
    return math.exp(sum(math.lgamma(g) for g in gammas) - math.lgamma(sum(gammas)))


def main_term_3(spec: AsymptoticSpec, lam):
    lam = np.asarray(lam, dtype=float)
    prod = np.ones_like(lam)
    for h in spec.functions:
        prod = prod * phi_deriv(h, lam, 1)
    return beta_constant(*spec.gammas) * lam ** 2 * prod


def main_term_c(c, lam):
    """8 Gamma(1+1/c)^3 / Gamma(3/c) * lam^(3/c - 1)."""
    c = float(RationalExponent.parse(c)) if not isinstance(c, float) else c
    lam = np.asarray(lam, dtype=float)
    const = 8.0 * math.exp(3 * special.gammaln(1 + 1 / c) - special.gammaln(3 / c))
    return const * lam ** (3 / c - 1)


def ball_volume(c) -> float:
    """Volume of the unit c-ball, (2 Gamma(1+1/c))^3 / Gamma(1+3/c)."""
    c = float(RationalExponent.parse(c)) if not isinstance(c, float) else c
    return math.exp(3 * math.log(2) + 3 * math.lgamma(1 + 1 / c) - math.lgamma(1 + 3 / c))


def condition_39(gammas: Sequence[float]) -> bool:
    """4(1 - g1) + 5(1 - g2)/2 + 5(1 - g3)/2 < 1 for some ordering."""
    g = sorted(gammas)
    return 4 * (1 - g[0]) + 2.5 * (1 - g[1]) + 2.5 * (1 - g[2]) < 1


# ---------------------------------------------------------------------------
# J-functions


def _dphi_vector(h: RegVarFunction, lam: int) -> np.ndarray:
    """phi'(m) for m = 0..lam, zero below N0."""
    out = np.zeros(lam + 1)
    if lam >= h.N0:
        m = np.arange(h.N0, lam + 1, dtype=float)
        out[h.N0:] = phi_deriv(h, m, 1)
    return out


def j2_series(h1: RegVarFunction, h2: RegVarFunction, lam_max: int) -> np.ndarray:
    """J_{phi1', phi2'}(lam) for lam = 0..lam_max, as one floating convolution.

    The admissible range m in [N0, lam - N0] of the defining sum is enforced
    by zeroing phi' below each N0.
    """
    a = _dphi_vector(h1, lam_max)
    b = _dphi_vector(h2, lam_max)
    size = 1 << (2 * lam_max + 1).bit_length()
    return np.fft.irfft(np.fft.rfft(a, size) * np.fft.rfft(b, size), size)[:lam_max + 1]


def j2(h1: RegVarFunction, h2: RegVarFunction, lam: int) -> float:
    """sum_{m = N0}^{lam - N0} phi1'(m) phi2'(lam - m), summed directly."""
    lam = int(lam)
    if lam < h1.N0 + h2.N0:
        raise ValueError("j2 needs lam >= N0(h1) + N0(h2)")
    m = np.arange(h1.N0, lam - h2.N0 + 1, dtype=float)
    terms = phi_deriv(h1, m, 1) * phi_deriv(h2, lam - m, 1)
    return float(math.fsum(terms))


def j3(h1: RegVarFunction, h2: RegVarFunction, h3: RegVarFunction, lam: int) -> float:
    """sum_{n1} phi1'(n1) J_{phi2', phi3'}(lam - n1) with the inner J cached."""
    lam = int(lam)
    if lam < h1.N0 + h2.N0 + h3.N0:
        raise ValueError("j3 needs lam >= N0(h1) + N0(h2) + N0(h3)")
    lo = h2.N0 + h3.N0
    inner = j2_series(h2, h3, lam)
    n1 = np.arange(h1.N0, lam - lo + 1)
    return float(math.fsum(phi_deriv(h1, n1.astype(float), 1) * inner[lam - n1]))


# ---------------------------------------------------------------------------
# reports


@dataclass
class AsymptoticReport:
    lam: np.ndarray
    counts: np.ndarray
    main: np.ndarray
    ratio: np.ndarray
    windows: list          # (lo, hi, mean ratio)
    cumulative: int
    cumulative_main: float
    cumulative_relerr: float

    def window_deviation(self) -> np.ndarray:
        return np.array([abs(w[2] - 1.0) for w in self.windows])


def asymptotic_report(table: CountTable, c) -> AsymptoticReport:
    """Per-lam ratios, dyadic-window mean ratios and the cumulative check."""
    if table.domain != "Z3":
        raise ValueError("asymptotic_report expects a Z^3 table")
    lam = np.arange(1, table.counts.size)
    counts = table.counts[1:]
    main = main_term_c(c, lam)
    ratio = counts / main
    windows = []
    k = 0
    while (1 << (k + 1)) <= table.horizon + 1:
        lo, hi = 1 << k, (1 << (k + 1)) - 1
        windows.append((lo, hi, float(ratio[lo - 1:hi].mean())))
        k += 1
    cum = int(table.counts.sum())
    cmain = ball_volume(c) * table.horizon ** (3.0 / float(RationalExponent.parse(c))
                                               if not isinstance(c, float) else 3.0 / c)
    return AsymptoticReport(lam, counts, main, ratio, windows, cum, cmain,
                            abs(cum - cmain) / cmain)


def first_full_radius(table: CountTable) -> int:
    """Largest lam <= horizon with no representation, plus one.

    Only a lower bound for the true threshold: gaps beyond the horizon are
    invisible.
    """
    zeros = np.flatnonzero(table.counts == 0)
    return int(zeros[-1]) + 1 if zeros.size else 0
