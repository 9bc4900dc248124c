"""Quadrature for the surface measure mu_c on the unit c-sphere.

On the positive octant write u_i = |x_i|^c, so that (u_1, u_2, u_3) lives on
the standard simplex and x_i = u_i^(1/c).  In these coordinates

    d mu_c = c^-2 (u_1 u_2 u_3)^(1/c - 1) du_1 du_2,

i.e. mu_c restricted to an octant is a multiple of the Dirichlet(g, g, g)
law with g = 1/c.  With u_1 = s v, u_2 = s (1 - v), u_3 = 1 - s the weight
factorises into s^(2g-1) (1-s)^(g-1) and v^(g-1) (1-v)^(g-1), both of
which are absorbed exactly by Gauss-Jacobi rules, so no node ever sees the
endpoint singularity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .bumps import smooth_step

__all__ = [
    "ResolutionError",
    "SurfaceQuadrature",
    "CapSpec",
    "c_norm",
    "surface_mass",
    "surface_integral",
    "polar_check",
    "fourier_mu",
    "fourier_mu_grad",
    "decay_profile",
    "random_directions",
    "smooth_step",
    "cap_measure",
    "cap_measure_smooth",
    "CapTable",
    "SIGNS",
]


class ResolutionError(ValueError):
    """The quadrature cannot resolve the oscillation of the integrand."""


SIGNS = np.array([[s1, s2, s3] for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)],
                 dtype=float)


def c_norm(x, c: float):
    """|x|_c = (sum |x_i|^c)^(1/c) along the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sum(np.abs(x) ** c, axis=-1) ** (1.0 / c)


def surface_mass(c: float) -> float:
    """mu_c(S_c^2) = 8 Gamma(1/c)^3 / (c^2 Gamma(3/c))."""
    c = float(c)
    return 8.0 * math.exp(3 * math.lgamma(1 / c) - math.lgamma(3 / c)) / c ** 2


@lru_cache(maxsize=64)
def _jacobi01(n: int, a: float, b: float):
    """Nodes/weights on [0, 1] for the weight s^a (1 - s)^b."""
    x, w = special.roots_jacobi(n, b, a)
    return (x + 1) / 2, w / 2 ** (a + b + 1)


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Tensor Gauss-Jacobi rule for mu_c on one octant, mirrored to all eight.

    Parameters
    ----------
    c : float
        Exponent of the norm, 1 <= c <= 2.
    n_q : int
        Nodes per parameter axis.
    """

    c: float
    n_q: int = 64

    def __post_init__(self):
        if not (1.0 <= self.c <= 2.0):
            raise ValueError("c must lie in [1, 2]")
        if self.n_q < 2:
            raise ValueError("need at least two nodes per axis")

    @property
    def gamma(self) -> float:
        return 1.0 / self.c

    def octant(self):
        """Points of the positive octant (N x 3) and their weights."""
        return _octant_rule(self.c, self.n_q)

    def nodes(self):
        """All 8 N points and weights; weights sum to the surface mass."""
        pts, w = self.octant()
        allp = (SIGNS[:, None, :] * pts[None, :, :]).reshape(-1, 3)
        return allp, np.tile(w, 8)

    def refine(self) -> "SurfaceQuadrature":
        return SurfaceQuadrature(self.c, 2 * self.n_q)


@lru_cache(maxsize=16)
def _octant_rule(c: float, n: int):
    g = 1.0 / c
    s, ws = _jacobi01(n, 2 * g - 1, g - 1)
    v, wv = _jacobi01(n, g - 1, g - 1)
    S, V = np.meshgrid(s, v, indexing="ij")
    u1, u2, u3 = S * V, S * (1 - V), np.broadcast_to(1 - s[:, None], S.shape)
    pts = np.stack([u1 ** g, u2 ** g, u3 ** g], axis=-1).reshape(-1, 3)
    w = (np.outer(ws, wv) / c ** 2).reshape(-1)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def surface_integral(f: Callable, quad: SurfaceQuadrature, error: bool = False):
    """Integral of f over the c-sphere against mu_c.

    ``f`` receives an (N, 3) array of points and returns N values.  With
    ``error=True`` the rule is doubled and ``(value, estimate)`` is returned;
    a warning is issued when doubling fails to contract the difference.
    """
    pts, w = quad.nodes()
    val = np.dot(w, f(pts))
    if not error:
        return val
    fine = quad.refine()
    pts2, w2 = fine.nodes()
    val2 = np.dot(w2, f(pts2))
    pts4, w4 = fine.refine().nodes()
    val4 = np.dot(w4, f(pts4))
    d1, d2 = abs(val2 - val), abs(val4 - val2)
    if d2 > 0 and d1 < 4 * d2 and d2 > 1e-13 * max(1.0, abs(val4)):
        warnings.warn("surface quadrature: doubling did not contract the error by 4x",
                      RuntimeWarning, stacklevel=2)
    return val4, d2


def polar_check(f: Callable, c: float, R_max: float = 12.0, n_r: int = 200,
                n_box: int = 96, half_width: float | None = None, n_q: int = 96):
    """Compare a 3-D integral with its polar decomposition.

    Returns ``(lhs, rhs, relerr)`` where ``lhs`` is a tensor Gauss-Legendre
    integral over a box and ``rhs = int_0^R r^2 int f(r y) dmu_c(y) dr``.
    """
    half_width = R_max if half_width is None else half_width
    x, wx = np.polynomial.legendre.leggauss(n_box)
    x, wx = x * half_width, wx * half_width
    lhs = 0.0
    for i in range(n_box):
        X2, X3 = np.meshgrid(x, x, indexing="ij")
        pts = np.stack([np.full(X2.shape, x[i]), X2, X3], axis=-1).reshape(-1, 3)
        lhs += wx[i] * np.dot(np.outer(wx, wx).reshape(-1), f(pts))
    r, wr = np.polynomial.legendre.leggauss(n_r)
    r, wr = (r + 1) * R_max / 2, wr * R_max / 2
    pts, w = SurfaceQuadrature(c, n_q).nodes()
    rhs = 0.0
    for rk, wk in zip(r, wr):
        rhs += wk * rk ** 2 * np.dot(w, f(rk * pts))
    return lhs, rhs, abs(lhs - rhs) / abs(lhs)


# ---------------------------------------------------------------------------
# Fourier transform


MAX_NODES = 32768


def _required_nodes(xi) -> int:
    return int(math.ceil(10 * np.sum(np.abs(xi)))) + 32


def fourier_mu(xi, c: float, n_q: int | None = None) -> float:
    """F mu_c(xi) = int e(-w.xi) d mu_c(w).

    Sign symmetry makes the transform real: it is the octant integral of
    8 prod cos(2 pi xi_i w_i).  ``n_q`` defaults to ten nodes per oscillation;
    a smaller explicit ``n_q`` raises :class:`ResolutionError`, as does a
    frequency needing more than ``MAX_NODES`` nodes.
    """
    xi = np.asarray(xi, dtype=float)
    need = _required_nodes(xi)
    if need > MAX_NODES:
        raise ResolutionError(f"|xi|_1={np.sum(np.abs(xi)):.3g} needs {need} nodes, "
                              f"above the {MAX_NODES} node limit")
    if n_q is None:
        n_q = max(need, 64)
    elif n_q < need:
        raise ResolutionError(f"n_q={n_q} below the {need} nodes needed at |xi|_1="
                              f"{np.sum(np.abs(xi)):.3g}")
    g = 1.0 / c
    s, ws = _jacobi01(n_q, 2 * g - 1, g - 1)
    v, wv = _jacobi01(n_q, g - 1, g - 1)
    vg, wg = v ** g, (1 - v) ** g
    total = 0.0
    # chunk over s to bound memory at large n_q
    step = max(1, 4_000_000 // n_q)
    for lo in range(0, n_q, step):
        sg = s[lo:lo + step, None] ** g
        f3 = np.cos(2 * np.pi * xi[2] * (1 - s[lo:lo + step]) ** g)
        inner = np.cos(2 * np.pi * xi[0] * sg * vg) * np.cos(2 * np.pi * xi[1] * sg * wg)
        total += np.dot(ws[lo:lo + step] * f3, inner @ wv)
    return 8.0 * total / c ** 2


def fourier_mu_grad(xi, c: float, n_q: int | None = None) -> np.ndarray:
    """Central finite-difference gradient of F mu_c, step 1e-3 / (1 + |xi|)."""
    xi = np.asarray(xi, dtype=float)
    h = 1e-3 / (1 + np.linalg.norm(xi))
    out = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out[i] = (fourier_mu(xi + e, c, n_q) - fourier_mu(xi - e, c, n_q)) / (2 * h)
    return out


def random_directions(n: int, seed: int) -> np.ndarray:
    """n seeded uniform directions on the Euclidean unit sphere."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class DecayProfile:
    radii: np.ndarray
    max_scaled: np.ndarray
    argmax: np.ndarray
    c: float
    seed: int


def decay_profile(c: float, radii, samples: int = 64, seed: int = 0) -> DecayProfile:
    """Per shell |xi| = R, the max of R |F mu_c(xi)| over seeded directions."""
    radii = np.asarray(radii, dtype=float)
    dirs = random_directions(samples, seed)
    best = np.zeros(radii.size)
    arg = np.zeros((radii.size, 3))
    for k, R in enumerate(radii):
        vals = np.array([R * abs(fourier_mu(R * d, c)) for d in dirs])
        j = int(np.argmax(vals))
        best[k], arg[k] = vals[j], dirs[j]
    return DecayProfile(radii, best, arg, c, seed)


# ---------------------------------------------------------------------------
# caps


@dataclass(frozen=True)
class CapSpec:
    """The cap {x on the c-sphere : x.xi >= a} for a Euclidean unit xi."""

    xi: tuple
    a: float

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
            raise ValueError("cap direction must be a Euclidean unit vector")
        object.__setattr__(self, "xi", tuple(float(t) for t in xi))


def smoothed_indicator(t, a: float, delta: float, sign: int):
    """1_[a + sign*delta, 100] convolved with a unit-mass bump of width delta."""
    t = np.asarray(t, dtype=float)
    lo = smooth_step((t - (a + sign * delta)) / (2 * delta) + 0.5)
    hi = smooth_step((100.0 - t) / (2 * delta) + 0.5)
    return lo * hi


@lru_cache(maxsize=8)
def _tanh_sinh(step: float, g: float):
    """tanh-sinh nodes x, 1 - x and weights on [0, 1].

    Truncated where the dropped end mass of a weight x^(g-1) falls below 1e-17.
    """
    tmax = math.asinh(40.0 / (math.pi * g)) + step
    k = np.arange(-int(tmax / step), int(tmax / step) + 1) * step
    u = 0.5 * math.pi * np.sinh(k)
    x = 1 / (1 + np.exp(-2 * u))
    xc = 1 / (1 + np.exp(2 * u))
    w = step * 0.5 * math.pi * np.cosh(k) / (2 * np.cosh(u) ** 2)
    return x, xc, w


def _crossings(P, R, alpha, g):
    """The (at most two) roots in (0, 1) of P v^g + R (1 - v)^g = alpha, nan if absent."""
    shape = np.broadcast(P, R, alpha).shape
    P = np.broadcast_to(P, shape).astype(float)
    R = np.broadcast_to(R, shape).astype(float)
    alpha = np.broadcast_to(alpha, shape).astype(float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if g < 1:
            t = np.where(P * R > 0, (np.abs(P) / np.abs(R)) ** (1.0 / (1.0 - g)), np.nan)
            vc = np.where(np.isfinite(t), t / (1 + t), np.where(P * R > 0, 1.0, np.nan))
        else:
            vc = np.full(shape, np.nan)
    has = np.isfinite(vc)
    vc = np.where(has, vc, 1.0)
    out = []
    for lo, hi in ((np.zeros(shape), vc), (vc, np.where(has, 1.0, vc))):
        glo, ghi = _gfun(P, R, lo, g), _gfun(P, R, hi, g)
        inc = ghi >= glo
        cross = (hi > lo) & (np.minimum(glo, ghi) < alpha) & (np.maximum(glo, ghi) > alpha)
        r = np.full(shape, np.nan)
        idx = np.nonzero(cross)
        if idx[0].size:
            r[idx] = _root(P[idx], R[idx], alpha[idx], lo[idx], hi[idx], g, inc[idx], 40, 8)
        out.append(r)
    return out


def _cap_octant_prob(xi, a, c: float, step: float = 0.2) -> np.ndarray:
    """P(sum eps_i xi_i u_i^g >= a), averaged over the 8 sign patterns.

    For fixed v the function s -> A s^g + B (1-s)^g is monotone or
    unimodal, so the superlevel set is a union of at most two intervals
    whose Beta(2g, g) mass is an incomplete beta function.  That mass is
    analytic in v except where a root leaves through s = 1 (A(v) = a) or
    two roots merge (the extreme value (|A|^q + |B|^q)^(1/q), q = 1/(1-g),
    equals |a|).  The v-integral is split at those points and each piece
    gets a tanh-sinh rule, which absorbs the endpoint singularities.
    Patterns come in pairs eps, -eps with P_{-eps}(a) = 1 - P_eps(-a), so
    four suffice.
    """
    g = 1.0 / c
    a = np.atleast_1d(np.asarray(a, dtype=float))
    xi = np.asarray(xi, dtype=float)
    both = np.concatenate([a, -a])
    x, xc, w = _tanh_sinh(step, g)
    norm = special.beta(g, g)
    out = np.zeros(a.size)
    for eps in SIGNS[::2]:
        e = eps * xi
        levels = [both]
        if g < 1:
            q = 1.0 / (1.0 - g)
            with np.errstate(invalid="ignore"):
                m = (np.abs(both) ** q - abs(e[2]) ** q) ** (1.0 / q)
            levels += [m, -m]
        cuts = [np.zeros(both.size), np.ones(both.size)]
        for lev in levels:
            cuts += _crossings(e[0], e[1], lev, g)
        cuts = np.sort(np.stack(cuts, axis=1), axis=1)
        cuts = np.where(np.isnan(cuts), 1.0, cuts)
        lo, hi = cuts[:, :-1], cuts[:, 1:]
        width = (hi - lo)[..., None]
        v = lo[..., None] + width * x
        vc = (1 - hi)[..., None] + width * xc  # 1 - v without cancellation
        A = e[0] * v ** g + e[1] * vc ** g
        with np.errstate(divide="ignore", invalid="ignore"):
            wt = np.where(width > 0, width * w * v ** (g - 1) * vc ** (g - 1) / norm, 0.0)
        aa = np.broadcast_to(both[:, None, None], A.shape)
        p = (wt * _superlevel_mass(A, np.full_like(A, e[2]), aa, g)).sum(axis=(1, 2))
        out += p[:a.size] + (1.0 - p[a.size:])
    return out / 8.0


def _gfun(A, B, s, g):
    return A * s ** g + B * (1 - s) ** g


def _root(A, B, a, lo, hi, g, inc, bisect_iters=16, newton_iters=6):
    """Root of A s^g + B (1-s)^g = a on [lo, hi] where the map is monotone.

    Bisection narrows the bracket, Newton steps clamped to it finish.
    """
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        move_hi = (_gfun(A, B, mid, g) >= a) == inc
        hi = np.where(move_hi, mid, hi)
        lo = np.where(move_hi, lo, mid)
    s = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(newton_iters):
            d = g * (A * s ** (g - 1) - B * (1 - s) ** (g - 1))
            step = (_gfun(A, B, s, g) - a) / d
            s = np.clip(np.where(np.isfinite(step), s - step, s), lo, hi)
    return s


def _superlevel_mass(A, B, a, g):
    """Beta(2g, g) mass of {s in [0,1] : A s^g + B (1-s)^g >= a}."""
    p, q = 2 * g, g
    F = lambda s: special.betainc(p, q, np.clip(s, 0.0, 1.0))
    # critical point of the map: A s^(g-1) = B (1-s)^(g-1); exists only for AB > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if g < 1:
            t = np.where(A * B > 0, (np.abs(A) / np.abs(B)) ** (1.0 / (1.0 - g)), np.nan)
            sc = np.where(np.isfinite(t), t / (1 + t), np.where(A * B > 0, 1.0, np.nan))
        else:
            sc = np.full_like(A, np.nan)
    has_c = np.isfinite(sc)
    sc = np.where(has_c, sc, 1.0)
    mass = np.zeros_like(A)
    # branch [0, sc] then [sc, 1]; without a critical point the first branch is [0, 1]
    for lo, hi in ((np.zeros_like(A), sc), (sc, np.where(has_c, 1.0, sc))):
        glo, ghi = _gfun(A, B, lo, g), _gfun(A, B, hi, g)
        inc = ghi >= glo
        live = hi > lo
        bot = np.minimum(glo, ghi)
        full = (bot >= a) & live
        mass += np.where(full, F(hi) - F(lo), 0.0)
        cross = live & (np.maximum(glo, ghi) >= a) & (bot < a)
        idx = np.nonzero(cross)
        if idx[0].size:
            l, h, up = lo[idx], hi[idx], inc[idx]
            r = _root(A[idx], B[idx], a[idx], l, h, g, up)
            mass[idx] += np.where(up, F(h) - F(r), F(r) - F(l))
    return mass


def cap_measure(cap: CapSpec, c: float, step: float = 0.2) -> float:
    """nu_c of the sharp cap, normalised so that nu_c(S_c^2) = 1."""
    if cap.a > 1.0:
        return 0.0
    return float(_cap_octant_prob(cap.xi, cap.a, c, step)[0])


def cap_measure_smooth(cap: CapSpec, c: float, delta: float, sign: int,
                       quad: SurfaceQuadrature | None = None) -> float:
    """int phi^(+/-)_{a,delta}(x.xi) d nu_c with the smoothed cap indicators."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    quad = quad or SurfaceQuadrature(c, 256)
    xi = np.asarray(cap.xi)
    f = lambda p: smoothed_indicator(p @ xi, cap.a, delta, sign)
    return float(surface_integral(f, quad) / surface_mass(c))


class CapTable:
    """a -> nu_c(C_{a, xi}) tabulated on a grid and interpolated monotonically.

    The grid is uniform on [-amax, amax] with amax the largest value of x.xi
    on the c-sphere, outside of which the measure is 0 or 1.
    """

    def __init__(self, xi, c: float, n_a: int = 1025, step: float = 0.2):
        from scipy.interpolate import PchipInterpolator

        self.xi = np.asarray(xi, dtype=float)
        self.c = c
        # max of x.xi over |x|_c = 1 is |xi|_{c'} with 1/c + 1/c' = 1
        cp = math.inf if c == 1 else c / (c - 1)
        self.amax = float(np.max(np.abs(self.xi))) if cp == math.inf else \
            float(np.sum(np.abs(self.xi) ** cp) ** (1 / cp))
        self.grid = np.linspace(-self.amax, self.amax, n_a)
        vals = np.concatenate([_cap_octant_prob(self.xi, chunk, c, step)
                               for chunk in np.array_split(self.grid, max(1, n_a // 128))])
        vals = np.minimum.accumulate(np.clip(vals, 0.0, 1.0))
        vals[0], vals[-1] = 1.0, 0.0
        self.values = vals
        self._interp = PchipInterpolator(self.grid, vals, extrapolate=False)

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        out = self._interp(np.clip(a, -self.amax, self.amax))
        return np.where(a > self.amax, 0.0, np.where(a < -self.amax, 1.0, out))
