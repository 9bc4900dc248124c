"""Projected clouds, Weyl sums and cap discrepancy.

Small spheres are enumerated point by point.  Large spheres are never
materialised: trigonometric averages factor through per-coordinate weight
vectors (one convolution), and cap counts are streamed into fine histograms
of x.xi by a compiled kernel.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .counting import count_c_sphere
from .regvar import RationalExponent, floor_pow_array
from .surface import CapTable, SurfaceQuadrature, _required_nodes, fourier_mu, random_directions, surface_integral, surface_mass

__all__ = [
    "ProjectedCloud",
    "EmptySphereError",
    "project",
    "weyl_sum",
    "trig_average",
    "weyl_trig",
    "DiscrepancyConfig",
    "discrepancy",
    "discrepancy_profile",
    "discrepancy_stream",
    "discrepancy_decay",
]


class EmptySphereError(ValueError):
    """The requested sphere has no lattice points."""


def _tables(c: RationalExponent, lam: int):
    """floors f[m] for 0 <= m <= R and the inverse map n -> m (or -1)."""
    R = int(lam ** (1.0 / c.value)) + 2
    while int(floor_pow_array([R], c)[0]) > lam:
        R -= 1
    m = np.arange(R + 1, dtype=np.int64)
    f = floor_pow_array(m, c).astype(np.int64)
    inv = np.full(lam + 1, -1, dtype=np.int64)
    inv[f] = m
    return f, inv


# ---------------------------------------------------------------------------
# clouds


@dataclass
class ProjectedCloud:
    """Lattice points of the c-sphere of radius lam and their projections."""

    lam: int
    c: RationalExponent
    lattice: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.lattice / float(self.lam) ** (1.0 / self.c.value)

    def along(self, xi) -> np.ndarray:
        """Projections x.xi of the scaled points, rounded once after the lattice dot product."""
        return self.lattice @ np.asarray(xi, dtype=float) / float(self.lam) ** (1.0 / self.c.value)

    @property
    def count(self) -> int:
        return len(self.lattice)


@numba.njit(cache=True)
def _enumerate(f, inv, lam, out):
    R = f.size - 1
    k = 0
    for a1 in range(-R, R + 1):
        n1 = f[abs(a1)]
        for a2 in range(-R, R + 1):
            n2 = f[abs(a2)]
            rest = lam - n1 - n2
            if rest < 0:
                continue
            m = inv[rest]
            if m < 0:
                continue
            if m == 0:
                if out.shape[0] > 0:
                    out[k, 0], out[k, 1], out[k, 2] = a1, a2, 0
                k += 1
            else:
                if out.shape[0] > 0:
                    out[k, 0], out[k, 1], out[k, 2] = a1, a2, -m
                    out[k + 1, 0], out[k + 1, 1], out[k + 1, 2] = a1, a2, m
                k += 2
    return k


def project(lam: int, c) -> ProjectedCloud:
    """All x in Z^3 with sum floor(|x_i|^c) = lam, scaled by lam^(-1/c)."""
    c = RationalExponent.parse(c)
    lam = int(lam)
    if lam < 1:
        raise ValueError("project needs lam >= 1")
    f, inv = _tables(c, lam)
    n = _enumerate(f, inv, lam, np.zeros((0, 3), dtype=np.int64))
    pts = np.zeros((n, 3), dtype=np.int64)
    _enumerate(f, inv, lam, pts)
    if n == 0:
        raise EmptySphereError(f"the sphere of radius {lam} is empty for c={c}")
    q = np.sum(floor_pow_array(np.abs(pts), c), axis=1)
    assert np.all(q == lam)
    dev = np.sum(np.abs(pts).astype(float) ** c.value, axis=1) - lam
    assert np.all((dev >= -1e-9 * lam) & (dev < 3))
    return ProjectedCloud(lam, c, pts)


# ---------------------------------------------------------------------------
# Weyl sums


@dataclass
class WeylResult:
    value: complex
    limit: complex
    gap: float


def weyl_sum(cloud: ProjectedCloud, phi: Callable, quad: SurfaceQuadrature | None = None,
             limit: complex | None = None) -> WeylResult:
    """Average of phi over the cloud against its integral for nu_c."""
    vals = phi(cloud.points)
    value = np.mean(vals)
    if limit is None:
        quad = quad or SurfaceQuadrature(cloud.c.value, 128)
        # normalising by the rule's own mass makes constants exact
        limit = surface_integral(phi, quad) / surface_integral(lambda p: np.ones(len(p)), quad)
    return WeylResult(complex(value), complex(limit), float(abs(value - limit)))


def trig_average(c, lam: int, alpha) -> float:
    """(1/r) sum over the sphere of e(x . alpha), without listing the points.

    Per coordinate, w_j[n] = sum_{floor(|x|^c) = n} e(alpha_j x) is 1 at
    n = 0 and 2 cos(2 pi alpha_j m) at n = floor(m^c); the sphere sum is
    the lam-th entry of w_1 * w_2 * w_3.
    """
    c = RationalExponent.parse(c)
    f, inv = _tables(c, lam)
    m = np.arange(f.size)
    alpha = np.asarray(alpha, dtype=float)
    # half-integer frequencies give integer weights and an exact total
    integral = bool(np.all(2 * alpha == np.rint(2 * alpha)))
    ws = []
    for a in alpha:
        w = np.zeros(lam + 1)
        if integral:
            w[f] = np.where((int(np.rint(2 * a)) * m) % 2 == 0, 2.0, -2.0)
        else:
            w[f] = 2 * np.cos(2 * np.pi * a * m)
        w[0] = 1.0
        ws.append(w)
    size = 1 << (2 * lam + 1).bit_length()
    w12 = np.fft.irfft(np.fft.rfft(ws[0], size) * np.fft.rfft(ws[1], size), size)[:lam + 1]
    total = float(np.dot(w12, ws[2][::-1]))
    if integral:
        total = float(np.rint(total))
    r = int(count_c_sphere(c, lam).counts[lam])
    if r == 0:
        raise EmptySphereError(f"the sphere of radius {lam} is empty for c={c}")
    return total / r


def weyl_trig(c, lam: int, m) -> WeylResult:
    """Weyl sum for phi(x) = e(m . x) on the projected cloud."""
    c = RationalExponent.parse(c)
    m = np.asarray(m, dtype=float)
    value = trig_average(c, lam, m / float(lam) ** (1.0 / c.value))
    n_q = max(_required_nodes(m), 64)
    limit = fourier_mu(m, c.value, n_q) / fourier_mu(np.zeros(3), c.value, n_q)
    return WeylResult(complex(value), complex(limit), float(abs(value - limit)))


# ---------------------------------------------------------------------------
# discrepancy


@dataclass
class DiscrepancyConfig:
    """Directions, cap tables and streaming resolution."""

    directions: np.ndarray
    c: float
    n_a: int = 1025
    step: float = 0.2
    nbins: int = 1 << 18
    tables: list = field(default_factory=list)

    def __post_init__(self):
        self.directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        norms = np.linalg.norm(self.directions, axis=1)
        if np.any(np.abs(norms - 1) > 1e-12):
            raise ValueError("directions must be Euclidean unit vectors")
        if not self.tables:
            self.tables = [CapTable(d, self.c, self.n_a, self.step) for d in self.directions]

    @classmethod
    def seeded(cls, c: float, n: int, seed: int, **kw) -> "DiscrepancyConfig":
        return cls(random_directions(n, seed), c, **kw)


@dataclass
class DiscrepancyResult:
    lam: int
    xi: np.ndarray
    D: float
    argmax_a: float
    r: int
    upper: float | None = None

    @property
    def normalized(self) -> float:
        return self.D / self.r


def discrepancy_profile(proj: np.ndarray, a_values, measure: Callable, r: int) -> np.ndarray:
    """D(a) = #{proj >= a} - r nu(a) at given thresholds."""
    s = np.sort(proj)
    a_values = np.asarray(a_values, dtype=float)
    counts = s.size - np.searchsorted(s, a_values, side="left")
    return counts - r * measure(a_values)


def _sup_over_jumps(proj: np.ndarray, measure: Callable, r: int):
    """Exact sup over a > 0 of |#{proj >= a} - r nu(a)|.

    On (u_{i-1}, u_i] between consecutive positive jump points the count is
    constant and r nu is monotone, so the extremes are the value at u_i and
    the one-sided limit at u_{i-1}.
    """
    u = np.unique(proj[proj > 0])
    left = np.concatenate([[0.0], u])  # lower ends u_{i-1}, with u_0 = 0+
    s = np.sort(proj)
    # N_i = #{proj >= u_i} for each jump, and 0 beyond the last one
    N = s.size - np.searchsorted(s, u, side="left")
    N = np.concatenate([N, [0]])
    right = np.concatenate([u, [np.nan]])
    nu_left = measure(left)
    cand_left = np.abs(N - r * nu_left)
    nu_right = measure(np.where(np.isnan(right), 0.0, right))
    cand_right = np.where(np.isnan(right), 0.0, np.abs(N - r * nu_right))
    i1, i2 = int(np.argmax(cand_left)), int(np.argmax(cand_right))
    if cand_left[i1] >= cand_right[i2]:
        return float(cand_left[i1]), float(left[i1])
    return float(cand_right[i2]), float(right[i2])


def discrepancy(cloud: ProjectedCloud, xi, measure: Callable | None = None) -> DiscrepancyResult:
    """D_c(lam, xi) = sup_{a > 0} |#(cloud in cap) - r nu_c(cap)| by the jump grid."""
    xi = np.asarray(xi, dtype=float)
    proj = cloud.along(xi)
    # the cap's upper constraint x.xi <= 100 never binds
    assert np.all(np.abs(proj) < 100)
    if measure is None:
        measure = CapTable(xi, cloud.c.value)
    D, a = _sup_over_jumps(proj, measure, cloud.count)
    return DiscrepancyResult(cloud.lam, xi, D, a, cloud.count)


@numba.njit(cache=True)
def _stream_half(f, inv, lam, X, lo, inv_w, hist):
    # one point of each pair +-x: a1 > 0, or a1 = 0 < a2, or a1 = a2 = 0 < a3
    R = f.size - 1
    nd = X.shape[0]
    total = 0
    for a1 in range(0, R + 1):
        n1 = f[a1]
        a2lo = -R if a1 > 0 else 0
        for a2 in range(a2lo, R + 1):
            rest = lam - n1 - f[abs(a2)]
            if rest < 0:
                continue
            m = inv[rest]
            if m < 0:
                continue
            if a1 == 0 and a2 == 0:
                if m > 0:
                    for d in range(nd):
                        hist[d, int((m * X[d, 2] - lo) * inv_w)] += 1
                    total += 1
                continue
            if m == 0:
                for d in range(nd):
                    hist[d, int((a1 * X[d, 0] + a2 * X[d, 1] - lo) * inv_w)] += 1
                total += 1
            else:
                for d in range(nd):
                    b = a1 * X[d, 0] + a2 * X[d, 1] - lo
                    t = m * X[d, 2]
                    hist[d, int((b + t) * inv_w)] += 1
                    hist[d, int((b - t) * inv_w)] += 1
                total += 2
    return total


def discrepancy_stream(c, lam: int, cfg: DiscrepancyConfig) -> list:
    """Streaming discrepancy for every configured direction.

    Half of the cloud (one point of each antipodal pair) is binned on a
    grid symmetric about 0 and the histogram is mirrored.  At bin edges the
    count term is exact up to the rounding of the projections, which gives a
    lower bound for the sup; monotonicity of both terms inside a bin gives
    the reported upper bound.
    """
    c = RationalExponent.parse(c)
    f, inv = _tables(c, lam)
    nb = cfg.nbins
    if nb % 2:
        raise ValueError("the number of bins must be even")
    # |x.xi| <= |x|_2 <= sqrt(3) |x|_c and |x|_c^c < lam + 3 on the sphere
    hi = math.sqrt(3) * (1 + 3 / lam) ** (1 / c.value) + 0.01
    lo = -hi
    width = (hi - lo) / nb
    half = np.zeros((len(cfg.directions), nb), dtype=np.int32)
    scale = 1.0 / float(lam) ** (1.0 / c.value)
    r = 2 * _stream_half(f, inv, lam, cfg.directions * scale, lo, 1.0 / width, half)
    hist = half.astype(np.int64) + half[:, ::-1]
    edges = lo + width * np.arange(nb + 1)
    out = []
    pos = edges > 0
    for d, xi in enumerate(cfg.directions):
        # tail[k] = #{proj >= edges[k]}
        tail = np.concatenate([np.cumsum(hist[d][::-1])[::-1], [0]])
        nu = cfg.tables[d](edges)
        Dk = tail - r * nu
        k = int(np.argmax(np.where(pos, np.abs(Dk), -1)))
        lower = float(abs(Dk[k]))
        # inside (e_k, e_k+1]: count in [tail[k+1], tail[k]], nu in [nu[k+1], nu[k]]
        up = np.maximum(tail[:-1] - r * nu[1:], r * nu[:-1] - tail[1:])
        upper = float(np.max(np.where(pos[1:], up, 0.0)))
        out.append(DiscrepancyResult(lam, xi, lower, float(edges[k]), int(r), max(upper, lower)))
    return out


@dataclass
class DecayReport:
    lams: list
    mean_normalized: list
    max_normalized: list
    slope: float
    target_exponent: float
    seconds: list
    complete: bool


def discrepancy_decay(c, lams: Sequence[int], n_directions: int = 16, seed: int = 0,
                      budget: float | None = None, exact_below: int = 2_000_000) -> DecayReport:
    """D/r over dyadic lam, its mean and max over seeded directions and a log-log slope.

    Radii are processed in increasing order; with a time ``budget`` (seconds)
    the run stops before a radius whose projected cost would exceed it, and
    the report says so.
    """
    c = RationalExponent.parse(c)
    cfg = DiscrepancyConfig.seeded(c.value, n_directions, seed)
    done, means, maxes, secs = [], [], [], []
    t0 = time.perf_counter()
    complete = True
    for k, lam in enumerate(sorted(lams)):
        if budget is not None and secs:
            growth = secs[-1] * (lam / done[-1]) ** (3 / c.value - 1) if secs[-1] > 0 else 0
            if time.perf_counter() - t0 + growth > budget:
                complete = False
                break
        t1 = time.perf_counter()
        r = int(count_c_sphere(c, lam).counts[lam])
        if r == 0:
            continue
        if r <= exact_below:
            cloud = project(lam, c)
            res = [discrepancy(cloud, xi, tab) for xi, tab in zip(cfg.directions, cfg.tables)]
        else:
            res = discrepancy_stream(c, lam, cfg)
        nd = np.array([x.normalized for x in res])
        done.append(lam)
        means.append(float(nd.mean()))
        maxes.append(float(nd.max()))
        secs.append(time.perf_counter() - t1)
    slope = float(np.polyfit(np.log(done), np.log(means), 1)[0]) if len(done) > 1 else math.nan
    return DecayReport(done, means, maxes, slope, -(9 - 8 * c.value) / (5 * c.value), secs,
                       complete and len(done) == len(lams))
