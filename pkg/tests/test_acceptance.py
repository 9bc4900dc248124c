"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v``; the lines appear in the
``acceptance`` section of the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from csphere.averages import domination, k_mass, kernel_field, omega_ratio, torus_ergodic_run, \
    variation_seminorm
from csphere.counting import asymptotic_report, beta_constant, count_c_sphere, first_full_radius, j2
from csphere.equidist import (
    CapTable,
    discrepancy,
    discrepancy_decay,
    discrepancy_profile,
    project,
    weyl_sum,
    weyl_trig,
)
from csphere.expsums import ExpSumBoundSpec, fg_gap, vdc_check
from csphere.oracles import brute_discrepancy, brute_table, brute_variation, classical_sphere_ft, \
    gamma_hp
from csphere.regvar import parse_function, phi_deriv
from csphere.surface import SurfaceQuadrature, decay_profile, fourier_mu, polar_check, \
    surface_integral, surface_mass

C = "21/20"
GAMMA = 20 / 21


def report(idx: int, name: str, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} [{idx:02d}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def test_01_exact_count_equivalence():
    t0 = time.perf_counter()
    bad = []
    for c in ("21/20", "11/10", "3/2", "2"):
        ref = brute_table(c, 2000).value
        for method in ("fft", "enum"):
            if not np.array_equal(count_c_sphere(c, 2000, method).counts, ref):
                bad.append(f"{c}/{method}")
    dt = time.perf_counter() - t0
    report(1, "exact counts fft = enum = brute", not bad and dt <= 120,
           f"mismatches={bad or 'none'} time={dt:.1f}s")


def _legendre(lam: int) -> bool:
    while lam and lam % 4 == 0:
        lam //= 4
    return lam % 8 == 7


def test_02_euclidean_sanity():
    t0 = time.perf_counter()
    tab = count_c_sphere(2, 10 ** 4).counts
    ref = brute_table(2, 10 ** 4).value
    zeros = {int(l) for l in np.flatnonzero(ref == 0)}
    legendre = {l for l in range(10 ** 4 + 1) if _legendre(l)}
    powers = [int(tab[4 ** m]) for m in range(7)]
    dt = time.perf_counter() - t0
    ok = np.array_equal(tab, ref) and zeros == legendre and powers == [6] * 7 and dt <= 60
    report(2, "c=2 zeros exactly at 4^m(8n+7)", ok,
           f"zeros={len(zeros)} legendre={len(legendre)} r(4^m)={powers} time={dt:.1f}s")


@pytest.fixture(scope="module")
def big_table():
    t0 = time.perf_counter()
    tab = count_c_sphere(C, 10 ** 5)
    return tab, time.perf_counter() - t0


def test_03_asymptotic_properties(big_table):
    tab, t_count = big_table
    t0 = time.perf_counter()
    rep = asymptotic_report(tab, C)
    g = gamma_hp
    from fractions import Fraction
    cf = Fraction(21, 20)
    const = float((2 * g(1 + 1 / cf)) ** 3 / g(1 + 3 / cf))
    cum_rel = abs(rep.cumulative - const * 1e5 ** (3 / 1.05)) / (const * 1e5 ** (3 / 1.05))
    high = [w for w in rep.windows if w[0] >= 2 ** 14]
    win_ok = bool(high) and all(abs(w[2] - 1) <= 0.10 for w in high)
    dev = rep.window_deviation()[-4:]
    mono = bool(np.all(np.diff(dev) <= 0))
    dt = t_count + time.perf_counter() - t0
    ok = cum_rel <= 0.02 and win_ok and mono and dt <= 300
    report(3, "cumulative count and window means", ok,
           f"cum_relerr={cum_rel:.2e} windows>=2^14={[round(w[2], 4) for w in high]} "
           f"top4_dev={np.round(dev, 4).tolist()} time={dt:.1f}s")


def test_04_nonemptiness(big_table):
    tab, _ = big_table
    lb = first_full_radius(tab)
    empty = int(np.sum(tab.counts[lb:] == 0))
    report(4, "no empty sphere above the reported threshold", empty == 0 and lb <= 10 ** 5,
           f"threshold={lb} empty_above={empty}")


def test_05_j2_asymptotics():
    t0 = time.perf_counter()
    h = parse_function("pow:c=21/20")
    lams = [2 ** k for k in range(10, 21)]
    rel = []
    for lam in lams:
        main = beta_constant(h.gamma, h.gamma) * lam * float(phi_deriv(h, float(lam), 1)) ** 2
        rel.append(abs(j2(h, h, lam) / main - 1))
    slope = _slope(lams, rel)
    one = parse_function("pow:c=1")
    lin = [(j2(one, one, lam), lam) for lam in (10, 100, 1000, 12345)]
    exact = all(v == lam - 1 for v, lam in lin)
    dt = time.perf_counter() - t0
    ok = slope <= -h.gamma + 0.05 and exact and dt <= 120
    report(5, "J2 relative error slope and c=1 case", ok,
           f"slope={slope:.4f} need<={-h.gamma + 0.05:.4f} c=1 exact={exact} time={dt:.1f}s")


def test_06_f_minus_g():
    t0 = time.perf_counter()
    h = parse_function("pow:c=21/20")
    spec = ExpSumBoundSpec.default(h.c)
    lams = [2 ** k for k in range(8, 17)]
    gaps = [fg_gap(h, lam, spec) for lam in lams]
    slope = _slope(lams, [g.sup for g in gaps])
    Cs = np.array([g.fitted_C for g in gaps[-4:]])
    need = h.gamma - spec.chi + 0.03
    dt = time.perf_counter() - t0
    ok = slope <= need and Cs.max() / Cs.min() <= 4 and dt <= 300
    report(6, "sup |F - G| slope and constant", ok,
           f"slope={slope:.4f} need<={need:.4f} C_ratio={Cs.max() / Cs.min():.3f} time={dt:.1f}s")


def test_07_surface_mass_and_polar():
    t0 = time.perf_counter()
    errs = {}
    for c in (1.05, 1.1, 1.5, 2.0):
        q = SurfaceQuadrature(c, 128)
        val = surface_integral(lambda p: np.ones(len(p)), q)
        errs[c] = abs(val - surface_mass(c)) / surface_mass(c)
    four_pi = abs(surface_mass(2.0) - 4 * math.pi) / (4 * math.pi)
    *_, polar = polar_check(lambda x: np.exp(-np.sum(x * x, axis=-1)), 1.05)
    dt = time.perf_counter() - t0
    ok = max(errs.values()) <= 1e-6 and four_pi <= 1e-14 and polar <= 1e-4 and dt <= 60
    report(7, "surface mass and polar identity", ok,
           f"max_mass_relerr={max(errs.values()):.1e} c2_vs_4pi={four_pi:.1e} "
           f"polar={polar:.1e} time={dt:.1f}s")


def test_08_fourier_decay():
    t0 = time.perf_counter()
    radii = [2 ** k for k in range(1, 9)]
    prof = decay_profile(1.05, radii, samples=64, seed=0)
    small = prof.max_scaled[prof.radii <= 8].max()
    ratio = float(prof.max_scaled.max() / small)
    dirs = [np.array([1.0, 0, 0]), np.array([1.0, 2.0, 2.0]) / 3]
    cl = max(abs(fourier_mu(R * d, 2.0) - classical_sphere_ft(R)) for R in (1, 2, 5) for d in dirs)
    dt = time.perf_counter() - t0
    ok = ratio <= 2 and cl <= 1e-5 and dt <= 600
    report(8, "R |F mu| stays bounded on dyadic shells", ok,
           f"growth_ratio={ratio:.3f} c2_classical_err={cl:.1e} time={dt:.1f}s")


def test_09_partition_identity():
    from scipy import integrate

    t0 = time.perf_counter()
    errs, spot = [], 0.0
    for lam in (50, 200, 500):
        fld = kernel_field(lam, C)
        errs.append(fld.partition_error)
        # independent t-quadrature of the minor kernel at a few lattice points
        lk = lam ** fld.kappa
        scale = lam ** (1 / 1.05)
        pts = np.array([[0, 0, round(scale)], [round(0.6 * scale), round(0.5 * scale), 3]])
        vals = fld.evaluate(pts, "minor")
        for p, v in zip(pts, vals):
            k = int(sum(math.floor(abs(int(x)) ** 1.05) for x in p)) - lam
            f = lambda t: (1 - fld.bumps.psi(t / lk)) * math.cos(2 * math.pi * k * t)
            ref = integrate.quad(f, -0.5, 0.5, limit=4000, points=[-lk / 2, lk / 2])[0]
            spot = max(spot, abs(v - fld.bumps.eta(p / lam ** GAMMA) * ref))
    dt = time.perf_counter() - t0
    ok = max(errs) <= 1e-6 and spot <= 1e-6 and dt <= 180
    report(9, "major + minor = sigma", ok,
           f"max_err={max(errs):.1e} quad_spot={spot:.1e} time={dt:.1f}s")


def test_10_kernel_comparisons():
    t0 = time.perf_counter()
    lams = [2 ** k for k in range(5, 13)]
    dom = [domination(lam, C).realized for lam in lams]
    mass = [k_mass(lam, 1.05) for lam in lams]
    om = [omega_ratio(lam, 1.05, samples=100_000, seed=0) for lam in lams]
    dt = time.perf_counter() - t0
    C_dom = max(dom)
    C_mass = max(max(mass), 1 / min(mass))
    C_om = max(om)
    ok = C_dom <= 100 and C_mass <= 20 and C_om <= 50 and dt <= 180
    report(10, "domination, K mass and translation ratio", ok,
           f"domination_C={C_dom:.2e} mass_C={C_mass:.2f} omega_C={C_om:.1f} time={dt:.1f}s")


def test_11_discrepancy_decay():
    t0 = time.perf_counter()
    rep = discrepancy_decay(C, [2 ** k for k in range(7, 18)], n_directions=16, seed=0)
    # full scan at lam = 10 against brute enumeration of the counting term
    cloud = project(10, C)
    rng = np.random.default_rng(21)
    xi = rng.normal(size=3)
    xi /= np.linalg.norm(xi)
    proj = np.unique(cloud.along(xi))
    a = np.concatenate([proj, (proj[:-1] + proj[1:]) / 2, [proj[0] - 1, proj[-1] + 1]])
    ours = discrepancy_profile(cloud.along(xi), a, lambda v: np.zeros_like(v), cloud.count)
    brute = brute_discrepancy(C, 10, xi, a).value["counts"]
    exact = bool(np.array_equal(ours.astype(np.int64), brute))
    tab = CapTable(xi, 1.05)
    D = discrepancy(cloud, xi, tab).D
    Db = float(np.max(np.abs(brute - cloud.count * tab(a))))
    dt = time.perf_counter() - t0
    ok = rep.complete and rep.slope <= -0.03 and exact and Db <= D + 1e-9 and dt <= 600
    report(11, "normalised discrepancy decays", ok,
           f"slope={rep.slope:.3f} D/r[2^17]={rep.mean_normalized[-1]:.2e} scan_exact={exact} "
           f"time={dt:.1f}s")


WEYL_THRESHOLD = 0.05


def test_12_weyl_equidistribution():
    t0 = time.perf_counter()
    gap0 = weyl_sum(project(1000, C), lambda p: np.ones(len(p))).gap
    lams = [2 ** k for k in range(8, 17)]
    gaps = [weyl_trig(C, lam, [1, 2, 3]).gap for lam in lams]
    top = weyl_trig(C, 10 ** 5, [1, 2, 3]).gap
    slope = _slope(lams, gaps)
    dt = time.perf_counter() - t0
    ok = gap0 == 0.0 and top <= WEYL_THRESHOLD and slope < 0
    report(12, "Weyl sums approach the surface integral", ok,
           f"const_gap={gap0} gap[1e5]={top:.2e} dyadic_slope={slope:.3f} time={dt:.1f}s")


def test_13_ergodic_multiplier():
    t0 = time.perf_counter()
    zero = torus_ergodic_run([0.3, 0.7, 0.2], [0, 0, 0], [2 ** k for k in range(4, 15)], C)
    g = (math.sqrt(5) - 1) / 2
    lams = [2 ** k for k in range(4, 14)]
    run = torus_ergodic_run([g, g, g], [1, 1, 1], lams + [10 ** 4], C)
    mags = np.abs(run.multipliers)
    slope = _slope(lams, mags[:-1])
    dt = time.perf_counter() - t0
    ok = all(v == 1.0 for v in zero.multipliers) and mags[-1] <= 0.1 and slope < 0 and dt <= 120
    report(13, "torus multipliers", ok,
           f"zero_freq_exact={all(v == 1.0 for v in zero.multipliers)} |m(1e4)|={mags[-1]:.2e} "
           f"slope={slope:.3f} time={dt:.1f}s")


def test_14_van_der_corput():
    t0 = time.perf_counter()
    rng = np.random.default_rng(14)
    fails = 0
    for trial in range(100):
        n = int(rng.integers(10, 5001))
        start = int(rng.integers(1, 10 ** 4 - n + 1))
        I = (start, start + n - 1)
        if trial % 2 == 0:
            al = float(rng.uniform(1e-7, 1e-2))
            res = vdc_check(lambda x: al * x * x, lambda x: np.full_like(np.asarray(x, float), 2 * al),
                            I, 2 * al, 1.0, 10.0)
        else:
            c = float(rng.uniform(1.05, 1.95))
            b = float(rng.uniform(1e-4, 1.0))
            res = vdc_check(lambda x: b * np.asarray(x, float) ** c,
                            lambda x: b * c * (c - 1) * np.asarray(x, float) ** (c - 2),
                            I, b * c * (c - 1) * float(I[1]) ** (c - 2), (I[1] / I[0]) ** (2 - c), 10.0)
        fails += not res.passed
    dt = time.perf_counter() - t0
    report(14, "van der Corput bound with C0 = 10", fails == 0 and dt <= 60,
           f"failures={fails}/100 time={dt:.1f}s")


def test_15_variation_dp():
    t0 = time.perf_counter()
    rng = np.random.default_rng(15)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(1, 11))
        r = float(rng.uniform(1, 4))
        seq = rng.standard_normal(n) if i % 4 else rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a, b = variation_seminorm(seq, r), brute_variation(seq, r)
        worst = max(worst, abs(a - b) / max(b, 1e-300))
    dt = time.perf_counter() - t0
    report(15, "variation DP equals exhaustive search", worst <= 1e-12 and dt <= 60,
           f"max_relerr={worst:.1e} time={dt:.1f}s")
