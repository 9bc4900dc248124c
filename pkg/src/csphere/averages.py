"""Kernel splits, comparison kernels, averaging operators and variation.

Every kernel on the lattice depends on x only through eta(x / lam^(1/c))
and k = Q(x) - lam, where Q(x) = sum floor(|x_i|^c).  Fields are therefore
stored as functions of k on the full range reachable inside supp eta and
expanded to lattice points on demand.
"""
from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, signal

from .bumps import BumpConfig
from .counting import count_c_sphere
from .equidist import EmptySphereError, _tables, trig_average
from .regvar import RationalExponent, floor_pow, floor_pow_array
from .surface import SurfaceQuadrature, c_norm, surface_integral, surface_mass

__all__ = [
    "inverse_ft_psi",
    "KernelField",
    "PartitionError",
    "kernel_field",
    "omega",
    "K_kernel",
    "DominationReport",
    "domination",
    "k_mass",
    "omega_ratio",
    "DiscreteAverage",
    "discrete_average",
    "maximal_profile",
    "continuous_average",
    "ErgodicRun",
    "torus_ergodic_run",
    "variation_seminorm",
    "MinorProfile",
    "minor_arc_profile",
    "write_field",
    "read_field",
]

FIELD_MAGIC = b"CSPHFLD1"


class PartitionError(RuntimeError):
    """sigma^M + sigma^m differs from sigma by more than the tolerance."""


def _kappa(c: float) -> float:
    return 3.0 / (4.0 * c) - 1.0


# ---------------------------------------------------------------------------
# inverse Fourier transform of psi


def inverse_ft_psi(u, bumps: BumpConfig, n_nodes: int = 256) -> np.ndarray:
    """F^{-1}psi(u) = integral of psi(t) e(u t) dt.

    The plateau contributes in closed form; for |u| >= 1 one integration by
    parts leaves -1/(pi u) times the integral of psi'(t) sin(2 pi u t) over
    the ramp, which avoids cancellation.  The ramp integral is Gauss-Legendre
    with nodes added in proportion to the number of oscillations.
    """
    u = np.asarray(u, dtype=float)
    flat = u.reshape(-1)
    out = np.empty(flat.size)
    psi = bumps.psi
    p, q = psi.inner, psi.outer
    w = q - p
    small = np.abs(flat) < 1
    order = np.argsort(np.abs(flat))
    # chunks of similar |u| share a rule
    for chunk in np.array_split(order, max(1, flat.size // 4096)):
        if chunk.size == 0:
            continue
        umax = float(np.max(np.abs(flat[chunk])))
        n = n_nodes + int(4 * umax * w)
        x, wt = np.polynomial.legendre.leggauss(n)
        t = p + (x + 1) * (w / 2)
        wt = wt * (w / 2)
        sm = chunk[small[chunk]]
        lg = chunk[~small[chunk]]
        if sm.size:
            us = flat[sm]
            out[sm] = 2 * p * np.sinc(2 * p * us) + 2 * (np.cos(2 * np.pi * np.outer(us, t)) @ (wt * psi(t)))
        if lg.size:
            ul = flat[lg]
            out[lg] = -(np.sin(2 * np.pi * np.outer(ul, t)) @ (wt * psi.deriv(t))) / (np.pi * ul)
    return out.reshape(u.shape)


# ---------------------------------------------------------------------------
# kernel fields


def omega(x, lam: float, c: float) -> np.ndarray:
    """1 / (1 + (lam^kappa | |x|_c^c - lam |)^10)."""
    s = c_norm(x, c) ** c
    return 1.0 / (1.0 + (lam ** _kappa(c) * np.abs(s - lam)) ** 10)


def K_kernel(x, lam: float, c: float) -> np.ndarray:
    """lam^(-9/(4c)) omega_lam(x)."""
    return lam ** (-9.0 / (4.0 * c)) * omega(x, lam, c)


@dataclass
class KernelField:
    """Kernels of one radius as functions of k = Q(x) - lam.

    ``major[i]`` and ``minor[i]`` are sigma^M and sigma^m divided by
    eta(x / lam^(1/c)) at k = ``k[i]``; ``exact`` is the indicator of k = 0.
    """

    lam: int
    c: RationalExponent
    kappa: float
    bumps: BumpConfig
    k: np.ndarray
    major: np.ndarray
    minor: np.ndarray
    exact: np.ndarray
    window: int
    partition_error: float
    meta: dict = field(default_factory=dict)

    def _index(self, kv):
        kv = np.asarray(kv, dtype=np.int64)
        i = kv - self.k[0]
        ok = (i >= 0) & (i < self.k.size)
        return np.where(ok, i, 0), ok

    def eta(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.bumps.eta(x / float(self.lam) ** (1.0 / self.c.value))

    def evaluate(self, x, kernel: str) -> np.ndarray:
        """One of sigma, major, minor, omega, K at lattice points x (N x 3)."""
        x = np.asarray(x, dtype=np.int64)
        if kernel == "omega":
            return omega(x, self.lam, self.c.value)
        if kernel == "K":
            return K_kernel(x, self.lam, self.c.value)
        table = {"sigma": self.exact, "major": self.major, "minor": self.minor}.get(kernel)
        if table is None:
            raise ValueError(f"unknown kernel {kernel!r}")
        Q = floor_pow_array(np.abs(x).reshape(-1), self.c).reshape(x.shape).sum(axis=-1)
        i, ok = self._index(Q - self.lam)
        eta = self.eta(x)
        if kernel == "sigma":
            # the sphere lies where eta = 1, so sigma is the bare indicator
            return np.where(ok, table[i], 0.0)
        return np.where(ok & (eta > 0), eta * table[i], 0.0)


def _k_range(lam: int, c: RationalExponent) -> tuple[int, int]:
    R = int(math.floor(10 * float(lam) ** (1.0 / c.value)))
    return -lam, 3 * floor_pow(R, c) - lam


def _minor_fft(lam: int, c: float, bumps: BumpConfig, kmin: int, kmax: int, margin: float):
    """Periodic trapezoid rule for the integral of e(k t) psi~_lam(t) over [-1/2, 1/2].

    psi~_lam equals 1 near t = +-1/2, so its periodic extension is smooth
    and the rule is exact up to aliasing from k + l M, l != 0.
    """
    lk = float(lam) ** _kappa(c)
    need = (kmax - kmin) + margin / lk
    M = 1 << int(math.ceil(math.log2(need + 1)))
    t = -0.5 + np.arange(M) / M
    vals = 1.0 - bumps.psi(t / lk)
    spec = np.fft.ifft(vals).real  # (1/M) sum_j vals_j e(k j / M)
    k = np.arange(kmin, kmax + 1)
    sign = np.where(k % 2 == 0, 1.0, -1.0)  # e(-k/2)
    return sign * spec[k % M], M


def kernel_field(lam: int, c, bumps: BumpConfig | None = None, tol: float = 1e-6,
                 margin: float = 400.0, n_nodes: int = 256) -> KernelField:
    """sigma, sigma^M and sigma^m for one radius.

    sigma^M comes from the inverse transform of psi; sigma^m is an
    independent trapezoid sum of its t-integral.  The largest violation of
    sigma^M + sigma^m = sigma over the reachable k bounds the violation over
    every lattice point, since 0 <= eta <= 1.
    """
    c = RationalExponent.parse(c)
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    bumps = bumps or BumpConfig(c.value)
    kap = _kappa(c.value)
    lk = float(lam) ** kap
    kmin, kmax = _k_range(lam, c)
    k = np.arange(kmin, kmax + 1)
    major = lk * inverse_ft_psi(lk * k, bumps, n_nodes)
    minor, M = _minor_fft(lam, c.value, bumps, kmin, kmax, margin)
    exact = (k == 0).astype(float)
    err = float(np.max(np.abs(major + minor - exact)))
    if err > tol:
        raise PartitionError(
            f"partition identity off by {err:.3e} at lam={lam}; "
            f"raise the aliasing margin (now {margin}) or the ramp nodes (now {n_nodes})")
    R = int(math.floor(10 * float(lam) ** (1.0 / c.value)))
    meta = {"M": M, "margin": margin, "n_nodes": n_nodes, **bumps.metadata()}
    return KernelField(lam, c, kap, bumps, k, major, minor, exact, R, err, meta)


# ---------------------------------------------------------------------------
# comparison kernels


@dataclass
class DominationReport:
    lam: int
    realized: float
    upper: float
    resolved_u: float


def domination(lam: int, c, bumps: BumpConfig | None = None, floor: float = 1e-12) -> DominationReport:
    """sup of lam^(1 - 3/c) |sigma^M(x)| / K_lam(x) over the lattice.

    The powers of lam cancel, leaving eta |F^{-1}psi(lam^kappa k)| (1 +
    (lam^kappa | |x|_c^c - lam |)^10).  ``realized`` is attained on the
    coordinate axes; ``upper`` uses |x|_c^c - lam in [k, k + 3).  Values with
    |F^{-1}psi| below ``floor`` are unresolved by double precision and left out.
    """
    c = RationalExponent.parse(c)
    bumps = bumps or BumpConfig(c.value)
    lk = float(lam) ** _kappa(c.value)
    kmin, kmax = _k_range(lam, c)
    k = np.arange(kmin, kmax + 1)
    F = np.abs(inverse_ft_psi(lk * k, bumps))
    res = F >= floor
    dist = np.maximum(np.abs(k), np.abs(k + 3)).astype(float)
    upper = float(np.max(np.where(res, F * (1 + (lk * dist) ** 10), 0.0)))
    scale = float(lam) ** (1.0 / c.value)
    m = np.arange(0, int(10 * scale) + 1)
    fm = floor_pow_array(m, c)
    Fm = np.abs(inverse_ft_psi(lk * (fm - lam), bumps))
    eta = bumps.eta_1d(m / scale)
    realized = eta * Fm * (1 + (lk * np.abs(m.astype(float) ** c.value - lam)) ** 10)
    realized = float(np.max(np.where(Fm >= floor, realized, 0.0)))
    return DominationReport(lam, realized, upper, float(lk * np.max(np.abs(k[res]))))


def k_mass(lam: float, c: float) -> float:
    """||K_lam||_{L^1(R^3)} through the polar identity.

    For radial functions of |x|_c^c = s, dx integrates to mu_c / c s^(3/c - 1) ds.
    """
    c = float(c)
    kap = _kappa(c)
    lk = lam ** kap
    g = lambda s: s ** (3 / c - 1) / (1 + (lk * abs(s - lam)) ** 10)
    width = 1 / lk
    pts = [max(0.0, lam - 40 * width), lam - width, lam, lam + width, lam + 40 * width]
    pts = sorted(set(p for p in pts if p >= 0))
    total = 0.0
    edges = [0.0] + pts + [np.inf]
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += integrate.quad(g, a, b, limit=400, epsabs=0, epsrel=1e-11)[0]
    return lam ** (-9 / (4 * c)) * surface_mass(c) / c * total


def omega_ratio(lam: float, c: float, samples: int = 100_000, seed: int = 0,
                placement: str = "window") -> float:
    """max of omega(t + g)/omega(t) and its inverse over seeded pairs, |g|_inf <= 1.

    ``placement="window"`` draws t uniformly from |t|_inf <= 10 lam^(1/c);
    ``"shell"`` draws t from the layer lam^kappa | |t|_c^c - lam | <= 4, where
    the ratio is largest.
    """
    rng = np.random.default_rng(seed)
    if placement == "window":
        scale = lam ** (1.0 / c)
        t = rng.uniform(-10 * scale, 10 * scale, size=(samples, 3))
    elif placement == "shell":
        d = rng.normal(size=(samples, 3))
        d /= c_norm(d, c)[:, None]
        s = lam + rng.uniform(-4, 4, size=samples) / lam ** _kappa(c)
        t = d * np.maximum(s, 0)[:, None] ** (1.0 / c)
    else:
        raise ValueError("placement must be 'window' or 'shell'")
    g = rng.uniform(-1, 1, size=t.shape)
    r = omega(t + g, lam, c) / omega(t, lam, c)
    return float(np.max(np.maximum(r, 1 / r)))


# ---------------------------------------------------------------------------
# averaging operators


def _sphere_indicator(lam: int, c: RationalExponent) -> np.ndarray:
    f, inv = _tables(c, lam)
    R = f.size - 1
    fx = f[np.abs(np.arange(-R, R + 1))]
    Q = fx[:, None, None] + fx[None, :, None] + fx[None, None, :]
    return (Q == lam).astype(np.int64)


@dataclass
class DiscreteAverage:
    """M_lam f on the box starting at ``origin``; ``numerator`` holds r * M_lam f."""

    values: np.ndarray
    numerator: np.ndarray
    origin: tuple
    r: int


def discrete_average(f: np.ndarray, lam: int, c, origin=(0, 0, 0)) -> DiscreteAverage:
    """(1/r) sum over the sphere of f(x - n) for f given on a box.

    ``f[i, j, k]`` is the value at ``origin + (i, j, k)``; the output box is
    the full support of the convolution.  Integer input gives an exact
    integer numerator.
    """
    c = RationalExponent.parse(c)
    f = np.asarray(f)
    ind = _sphere_indicator(lam, c)
    r = int(ind.sum())
    if r == 0:
        raise EmptySphereError(f"the sphere of radius {lam} is empty for c={c}")
    R = (ind.shape[0] - 1) // 2
    num = signal.fftconvolve(f.astype(complex if np.iscomplexobj(f) else float), ind)
    if np.issubdtype(f.dtype, np.integer):
        num = np.rint(num).astype(np.int64)
    out_origin = tuple(int(o) - R for o in origin)
    return DiscreteAverage(num / r, num, out_origin, r)


def maximal_profile(f: np.ndarray, lams: Sequence[int], c, origin=(0, 0, 0)):
    """sup over lam of |M_lam f| on the box of the largest radius.

    Empty spheres are skipped with a warning.  Returns (values, origin, used).
    """
    c = RationalExponent.parse(c)
    results, used = [], []
    for lam in lams:
        try:
            results.append(discrete_average(f, lam, c, origin))
            used.append(lam)
        except EmptySphereError:
            warnings.warn(f"skipping empty sphere at lam={lam}", RuntimeWarning, stacklevel=2)
    if not results:
        raise EmptySphereError("every requested sphere is empty")
    big = max(results, key=lambda a: a.values.shape[0])
    out = np.zeros(big.values.shape)
    for a in results:
        off = [a.origin[i] - big.origin[i] for i in range(3)]
        sl = tuple(slice(o, o + n) for o, n in zip(off, a.values.shape))
        out[sl] = np.maximum(out[sl], np.abs(a.values))
    return out, big.origin, used


def continuous_average(f: Callable, x, t: float, c: float, quad: SurfaceQuadrature | None = None):
    """Integral of f(x - t theta) against mu_c(theta), at one or several x."""
    if t <= 0:
        raise ValueError("t must be positive")
    quad = quad or SurfaceQuadrature(float(c), 96)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    vals = [surface_integral(lambda th, xx=xx: f(xx[None, :] - t * th), quad) for xx in x]
    return vals[0] if len(vals) == 1 else np.array(vals)


@dataclass
class ErgodicRun:
    lams: list
    multipliers: list
    skipped: list


def torus_ergodic_run(theta, m, lams: Sequence[int], c) -> ErgodicRun:
    """Multiplier (1/r) sum over the sphere of e(n . (m * theta)) for each lam.

    For f(x) = e(m . x) under the rotations T_j x = x + theta_j e_j this is
    A_lam f / f, independent of x.
    """
    alpha = np.mod(np.asarray(m, dtype=float) * np.asarray(theta, dtype=float), 1.0)
    done, vals, skipped = [], [], []
    for lam in lams:
        try:
            vals.append(trig_average(c, lam, alpha))
            done.append(lam)
        except EmptySphereError:
            skipped.append(lam)
    return ErgodicRun(done, vals, skipped)


def _extrema(a: np.ndarray) -> np.ndarray:
    """Endpoints and turning points of a real sequence with repeats removed."""
    keep = np.concatenate([[True], np.diff(a) != 0])
    b = a[keep]
    if b.size <= 2:
        return b
    d = np.sign(np.diff(b))
    turn = np.concatenate([[True], d[1:] != d[:-1], [True]])
    return b[turn]


def variation_seminorm(seq, r: float) -> float:
    """V^r: the largest (sum |a_{j+1} - a_j|^r)^(1/r) over subsequences.

    Exact dynamic programme best[j] = max_i best[i] + |a_j - a_i|^r.  For
    real input and r >= 1 an optimal chain uses only turning points, which
    are extracted first.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    a = np.asarray(seq)
    if a.size < 2:
        return 0.0
    if not np.iscomplexobj(a):
        a = _extrema(a.astype(float))
    n = a.size
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + np.abs(a[j] - a[:j]) ** r)
    return float(np.max(best) ** (1.0 / r))


# ---------------------------------------------------------------------------
# minor-arc profile


@dataclass
class MinorProfile:
    Ns: list
    values: list
    argmax: list
    bound_exponent: float
    slope: float
    fitted_C: list
    triangle_ok: bool
    skipped: list


def _eta_weights(lam: int, c: RationalExponent, bumps: BumpConfig, n_max: int) -> np.ndarray:
    scale = float(lam) ** (1.0 / c.value)
    m = np.arange(0, int(10 * scale) + 1)
    fm = floor_pow_array(m, c)
    e2 = bumps.eta_1d(m / scale) ** 2
    w = np.zeros(n_max + 1)
    np.add.at(w, fm, np.where(m == 0, 1.0, 2.0) * e2)
    return w


def minor_norms(lam: int, c, bumps: BumpConfig | None = None, margin: float = 400.0):
    """l^2 norms of sigma, sigma^M and sigma^m over the lattice.

    sum_x eta(x/lam^(1/c))^2 |g(Q(x) - lam)|^2 = sum_k W(k) |g(k)|^2 where W is
    the triple convolution of the per-coordinate eta_j^2 weights.
    """
    c = RationalExponent.parse(c)
    bumps = bumps or BumpConfig(c.value)
    kmin, kmax = _k_range(lam, c)
    n_max = kmax + lam
    w = _eta_weights(lam, c, bumps, n_max)
    size = 1 << int(math.ceil(math.log2(3 * n_max + 1)))
    W = np.fft.irfft(np.fft.rfft(w, size) ** 3, size)[:n_max + 1]
    W = np.maximum(W, 0.0)
    minor, _ = _minor_fft(lam, c.value, bumps, kmin, kmax, margin)
    exact = np.zeros_like(minor)
    exact[-kmin] = 1.0
    major = exact - minor
    norm = lambda g: float(math.sqrt(np.dot(W, g * g)))
    return norm(exact), norm(major), norm(minor)


def minor_arc_profile(c, Ns: Sequence[int], bumps: BumpConfig | None = None,
                      stride: int = 1) -> MinorProfile:
    """max over N <= lam <= 2N of lam^(1 - 3/c) ||sigma^m_lam||_2, per N.

    Radii with empty spheres are skipped; ``stride`` thins the lam range.
    """
    c = RationalExponent.parse(c)
    bumps = bumps or BumpConfig(c.value)
    expo = -(11 - 10 * c.value) / (6 * c.value)
    Ns_done, vals, args, skipped = [], [], [], []
    tri = True
    for N in Ns:
        table = count_c_sphere(c, 2 * N).counts
        best, arg = -1.0, None
        for lam in range(N, 2 * N + 1, stride):
            if table[lam] == 0:
                skipped.append(lam)
                continue
            s, sM, sm = minor_norms(lam, c, bumps)
            tri &= sm <= s + sM + 1e-9 * (s + sM)
            v = lam ** (1 - 3 / c.value) * sm
            if v > best:
                best, arg = v, lam
        if arg is None:
            warnings.warn(f"every sphere in [{N}, {2 * N}] is empty", RuntimeWarning, stacklevel=2)
            continue
        Ns_done.append(N)
        vals.append(best)
        args.append(arg)
    slope = float(np.polyfit(np.log(Ns_done), np.log(vals), 1)[0]) if len(Ns_done) > 1 else math.nan
    fitted = [v / (N ** expo * math.log(N + 1) ** 2) for N, v in zip(Ns_done, vals)]
    return MinorProfile(Ns_done, vals, args, expo, slope, fitted, bool(tri), skipped)


# ---------------------------------------------------------------------------
# field dumps


def write_field(path, fld: KernelField, kernel: str, lo, hi) -> dict:
    """Write one kernel on the box lo <= x <= hi (inclusive) as a binary dump.

    Layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON
    header, then the row-major float64 grid.
    """
    lo = [int(v) for v in lo]
    hi = [int(v) for v in hi]
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = fld.evaluate(X.reshape(-1, 3), kernel).reshape(X.shape[:3]).astype("<f8")
    header = {"lam": fld.lam, "c": str(fld.c), "lo": lo, "hi": hi, "kernel": kernel,
              "shape": list(vals.shape), "bumps": fld.bumps.metadata()}
    hb = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<I", len(hb)))
        fh.write(hb)
        fh.write(vals.tobytes(order="C"))
    return header


def read_field(path):
    """Inverse of ``write_field``: (header, grid)."""
    with open(path, "rb") as fh:
        if fh.read(8) != FIELD_MAGIC:
            raise ValueError("not a kernel field dump")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n))
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(header["shape"])
    return header, data
