"""Batch front end.

Every subcommand prints one summary line, optionally writes its data to
``--out`` (CSV for tables, JSON otherwise) next to a ``.manifest.json`` that
records the full argument vector, and can rerun from that manifest with
``--replay``.

Exit codes: 0 success, 1 usage error, 2 computation error, 3 failed check.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import averages, counting, equidist, expsums, oracles, regvar, surface
from .bumps import BumpConfig

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_CHECK = 0, 1, 2, 3

COMPUTE_ERRORS = (
    counting.MarginError,
    regvar.CertificationError,
    averages.PartitionError,
    surface.ResolutionError,
    equidist.EmptySphereError,
    expsums.SandwichError,
    ArithmeticError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument types


def _rational(text: str) -> regvar.RationalExponent:
    try:
        return regvar.RationalExponent.parse(text)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"c must be an integer or p/q, got {text!r}") from exc


def _real_c(text: str) -> float:
    try:
        return float(regvar.RationalExponent.parse(text))
    except (ValueError, TypeError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad exponent {text!r}") from exc


def _vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if v.size != 3:
        raise argparse.ArgumentTypeError("expected three components")
    return v


def _int_list(text: str) -> list:
    try:
        return [int(s) for s in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list:
    try:
        return [float(s) for s in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _dyadic(text: str) -> list:
    """``a..b`` means 2^a, ..., 2^b; otherwise a comma list."""
    if ".." in text:
        a, b = text.split("..")
        return [1 << k for k in range(int(a), int(b) + 1)]
    return _int_list(text)


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def write_rows(path: Path, rows: list[dict]):
    cols = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[k]) for k in cols) + "\n")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


class Result:
    """What a subcommand hands back: a summary, tabular rows or a JSON payload, checks."""

    def __init__(self, summary: str, rows=None, payload=None, checks=None, files=None):
        self.summary = summary
        self.rows = rows
        self.payload = payload
        self.checks = checks or []
        self.files = files or []


# ---------------------------------------------------------------------------
# subcommands


def cmd_count(a) -> Result:
    if a.lmax < 1:
        raise UsageError("--lmax must be at least 1")
    t = counting.count_c_sphere(a.c, a.lmax, a.method)
    checks = []
    if a.check_legendre:
        if a.c.fraction != 2:
            raise UsageError("--check-legendre needs --c 2")
        lam = np.arange(a.lmax + 1)
        m = lam.copy()
        while True:
            div = (m > 0) & (m % 4 == 0)
            if not div.any():
                break
            m = np.where(div, m // 4, m)
        excluded = (m % 8 == 7)
        checks.append(("zeros exactly at 4^m(8n+7)", bool(np.array_equal(t.counts == 0, excluded))))
    if a.check:
        other = counting.count_c_sphere(a.c, a.lmax, "enum" if a.method == "fft" else "fft")
        checks.append(("fft and enum agree", t == other))
        if a.lmax <= 200:
            brute = oracles.brute_table(a.c.fraction, a.lmax).value
            checks.append(("brute force agrees", bool(np.array_equal(brute, t.counts))))
    main = np.where(np.arange(a.lmax + 1) > 0,
                    counting.main_term_c(a.c, np.maximum(np.arange(a.lmax + 1), 1)), np.nan)
    rows = [{"lambda": i, "count": int(n), "main_term": float(mt), "ratio": float(n / mt)}
            for i, (n, mt) in enumerate(zip(t.counts, main))]
    zeros = int(np.sum(t.counts == 0))
    return Result(f"count c={a.c} lmax={a.lmax} method={a.method} total={int(t.counts.sum())} "
                  f"empty={zeros}", rows=rows, checks=checks)


def cmd_asym(a) -> Result:
    if a.lmax < 2:
        raise UsageError("--lmax must be at least 2")
    t = counting.count_c_sphere(a.c, a.lmax)
    rep = counting.asymptotic_report(t, a.c)
    dev = rep.window_deviation()
    payload = {"windows": [{"lo": lo, "hi": hi, "mean_ratio": m} for lo, hi, m in rep.windows],
               "cumulative": rep.cumulative, "cumulative_main": rep.cumulative_main,
               "cumulative_relerr": rep.cumulative_relerr,
               "first_full_radius": counting.first_full_radius(t)}
    checks = []
    if a.check:
        checks.append(("cumulative within 2%", rep.cumulative_relerr <= 0.02))
        top = dev[-4:]
        checks.append(("top windows non-increasing", bool(np.all(np.diff(top) <= 0))))
    return Result(f"asym c={a.c} lmax={a.lmax} cumulative_relerr={rep.cumulative_relerr:.3e} "
                  f"last_window_ratio={rep.windows[-1][2]:.6f}", payload=payload, checks=checks)


def cmd_jfun(a) -> Result:
    h1, h2 = regvar.parse_function(a.f1), regvar.parse_function(a.f2)
    lams = a.lams
    rows = []
    for lam in lams:
        v = counting.j2(h1, h2, lam)
        main = counting.beta_constant(h1.gamma, h2.gamma) * lam * \
            float(regvar.phi_deriv(h1, float(lam), 1)) * float(regvar.phi_deriv(h2, float(lam), 1))
        rows.append({"lambda": lam, "j2": v, "main": main, "relerr": abs(v / main - 1)})
    slope = float(np.polyfit(np.log(lams), np.log([r["relerr"] for r in rows]), 1)[0]) \
        if len(lams) > 1 else math.nan
    checks = []
    if a.check:
        checks.append(("relerr slope <= -gamma + 0.05", slope <= -min(h1.gamma, h2.gamma) + 0.05))
    return Result(f"jfun {h1.spec_string()} x {h2.spec_string()} slope={slope:.4f}",
                  rows=rows, checks=checks)


def cmd_expsum(a) -> Result:
    h = regvar.parse_function(a.f)
    spec = expsums.ExpSumBoundSpec.default(h.c) if a.chi is None else expsums.ExpSumBoundSpec(h.c, a.chi)
    rows = []
    for lam in a.lams:
        g = expsums.fg_gap(h, lam, spec, a.oversample)
        rows.append({"lambda": lam, "sup": g.sup, "argmax_t": g.argmax_t, "bound": g.bound,
                     "fitted_C": g.fitted_C, "lipschitz_slack": g.lipschitz_slack, "M": g.M})
    lams = np.array(a.lams, dtype=float)
    sups = np.array([r["sup"] for r in rows])
    slope = float(np.polyfit(np.log(lams), np.log(sups), 1)[0]) if len(rows) > 1 else math.nan
    checks = []
    if a.check:
        checks.append(("slope <= gamma - chi + 0.03", slope <= h.gamma - spec.chi + 0.03))
        C = np.array([r["fitted_C"] for r in rows[-4:]])
        checks.append(("fitted constant stable", C.max() / C.min() <= 4))
    return Result(f"expsum {h.spec_string()} chi={spec.chi:.6f} slope={slope:.4f}", rows=rows,
                  checks=checks)


def cmd_vdc(a) -> Result:
    rng = np.random.default_rng(a.seed)
    rows = []
    for trial in range(a.trials):
        n = int(rng.integers(10, a.nmax + 1))
        start = int(rng.integers(1, a.nmax + 1))
        I = (start, start + n - 1)
        if trial % 2 == 0:
            alpha = float(rng.uniform(1e-7, 1e-2))
            F = lambda x, al=alpha: al * x * x
            Fpp = lambda x, al=alpha: np.full_like(np.asarray(x, float), 2 * al)
            eta, r, kind = 2 * alpha, 1.0, "quadratic"
        else:
            c = float(rng.uniform(1.05, 1.95))
            beta = float(rng.uniform(1e-4, 1.0))
            F = lambda x, b=beta, cc=c: b * np.asarray(x, float) ** cc
            Fpp = lambda x, b=beta, cc=c: b * cc * (cc - 1) * np.asarray(x, float) ** (cc - 2)
            eta = beta * c * (c - 1) * float(I[1]) ** (c - 2)
            r = (float(I[1]) / I[0]) ** (2 - c)
            kind = "power"
        res = expsums.vdc_check(F, Fpp, I, eta, r, a.C0)
        rows.append({"trial": trial, "kind": kind, "a": I[0], "b": I[1], "lhs": res.lhs,
                     "rhs": res.rhs, "passed": res.passed})
    ok = all(r["passed"] for r in rows)
    checks = [("all trials pass", ok)] if a.check else []
    return Result(f"vdc trials={a.trials} passed={sum(r['passed'] for r in rows)}", rows=rows,
                  checks=checks)


def cmd_surface(a) -> Result:
    payload = {"c": a.c, "nq": a.nq}
    parts = []
    checks = []
    if a.mass or not a.polar:
        q = surface.SurfaceQuadrature(a.c, a.nq)
        val = float(surface.surface_integral(lambda p: np.ones(len(p)), q))
        exact = surface.surface_mass(a.c)
        dev = abs(val - exact) / exact
        payload.update(mass=val, closed_form=exact, relerr=dev)
        parts.append(f"mass={val:.15g} closed_form={exact:.15g} relerr={dev:.2e}")
        checks.append(("mass relerr <= 1e-6", dev <= 1e-6))
    if a.polar:
        lhs, rhs, rel = surface.polar_check(lambda x: np.exp(-np.sum(x * x, axis=-1)), a.c)
        payload.update(polar_lhs=lhs, polar_rhs=rhs, polar_relerr=rel)
        parts.append(f"polar_relerr={rel:.2e}")
        checks.append(("polar relerr <= 1e-4", rel <= 1e-4))
    return Result(f"surface c={a.c} " + " ".join(parts), payload=payload,
                  checks=checks if a.check else [])


def cmd_fourier(a) -> Result:
    prof = surface.decay_profile(a.c, a.radii, a.samples, a.seed)
    rows = [{"R": R, "max_R_abs_ft": v, "xi1": d[0], "xi2": d[1], "xi3": d[2]}
            for R, v, d in zip(prof.radii, prof.max_scaled, prof.argmax)]
    small = prof.max_scaled[prof.radii <= 8]
    ratio = float(prof.max_scaled.max() / small.max()) if small.size else math.nan
    checks = [("growth ratio <= 2", ratio <= 2)] if a.check else []
    return Result(f"fourier c={a.c} shells={len(a.radii)} growth_ratio={ratio:.4f}", rows=rows,
                  checks=checks)


def cmd_cap(a) -> Result:
    xi = a.xi / np.linalg.norm(a.xi)
    rows = []
    for av in a.a:
        cap = surface.CapSpec(tuple(xi), av)
        rows.append({"a": av, "nu": surface.cap_measure(cap, a.c, a.step)})
    checks = []
    if a.check:
        pair = surface.cap_measure(surface.CapSpec(tuple(xi), 0.0), a.c, a.step)
        checks.append(("half space has measure 1/2", abs(pair - 0.5) <= 1e-9))
    return Result(f"cap c={a.c} xi={np.round(xi, 6).tolist()} values={len(rows)}", rows=rows,
                  checks=checks)


def cmd_project(a) -> Result:
    cloud = equidist.project(a.lam, a.c)
    pts, ys = cloud.lattice, cloud.points
    rows = [{"x1": int(p[0]), "x2": int(p[1]), "x3": int(p[2]),
             "y1": y[0], "y2": y[1], "y3": y[2]} for p, y in zip(pts, ys)]
    checks = []
    if a.check and a.lam <= 2000:
        brute = oracles.brute_cloud(a.c.fraction, a.lam)
        checks.append(("matches brute cloud",
                       bool(np.array_equal(np.unique(pts, axis=0), np.unique(brute, axis=0)))))
    return Result(f"project c={a.c} lam={a.lam} points={cloud.count}", rows=rows, checks=checks)


def cmd_weyl(a) -> Result:
    rows = []
    for lam in a.lams:
        r = equidist.weyl_trig(a.c, lam, a.m)
        rows.append({"lambda": lam, "value_re": r.value.real, "value_im": r.value.imag,
                     "limit": r.limit.real, "gap": r.gap})
    checks = []
    if a.check:
        checks.append(("constant function has zero gap",
                       equidist.weyl_trig(a.c, a.lams[0], [0, 0, 0]).gap == 0.0))
    return Result(f"weyl c={a.c} m={a.m.tolist()} last_gap={rows[-1]['gap']:.4e}", rows=rows,
                  checks=checks)


def cmd_disc(a) -> Result:
    rep = equidist.discrepancy_decay(a.c, a.lams, a.directions, a.seed, a.budget)
    rows = [{"lambda": l, "mean_D_over_r": m, "max_D_over_r": x, "seconds": s}
            for l, m, x, s in zip(rep.lams, rep.mean_normalized, rep.max_normalized, rep.seconds)]
    checks = [("slope <= -0.03", rep.slope <= -0.03)] if a.check else []
    return Result(f"disc c={a.c} radii={len(rep.lams)} slope={rep.slope:.4f} "
                  f"complete={rep.complete}", rows=rows, checks=checks)


def cmd_kernels(a) -> Result:
    rows = []
    for lam in a.lams:
        row = {"lambda": lam}
        if lam <= a.partition_max:
            fld = averages.kernel_field(lam, a.c)
            row["partition_error"] = fld.partition_error
            if a.dump and lam == a.lams[-1]:
                lo = [-a.box] * 3
                hi = [a.box] * 3
                path = Path(a.dump)
                averages.write_field(path, fld, a.kernel, lo, hi)
        else:
            row["partition_error"] = float("nan")
        d = averages.domination(lam, a.c)
        row.update(domination_realized=d.realized, domination_upper=d.upper,
                   k_mass=averages.k_mass(lam, a.c.value),
                   omega_ratio=averages.omega_ratio(lam, a.c.value, a.samples, a.seed))
        rows.append(row)
    checks = []
    if a.check:
        pe = [r["partition_error"] for r in rows if not math.isnan(r["partition_error"])]
        checks.append(("partition identity <= 1e-6", all(p <= 1e-6 for p in pe)))
        checks.append(("domination C <= 100", max(r["domination_realized"] for r in rows) <= 100))
        checks.append(("K mass in [1/20, 20]", all(0.05 <= r["k_mass"] <= 20 for r in rows)))
        checks.append(("omega ratio <= 50", max(r["omega_ratio"] for r in rows) <= 50))
    files = [Path(a.dump)] if a.dump else []
    return Result(f"kernels c={a.c} radii={len(rows)} max_domination="
                  f"{max(r['domination_realized'] for r in rows):.3e}", rows=rows, checks=checks,
                  files=files)


def cmd_average(a) -> Result:
    if a.mode == "discrete":
        f = np.zeros((1, 1, 1), dtype=np.int64)
        f[0, 0, 0] = 1
        res = averages.discrete_average(f, a.lam, a.c)
        nz = np.argwhere(res.numerator != 0)
        rows = [{"x1": int(i + res.origin[0]), "x2": int(j + res.origin[1]),
                 "x3": int(k + res.origin[2]), "value": float(res.values[i, j, k])}
                for i, j, k in nz]
        mass = float(res.values.sum())
        checks = [("l1 mass preserved", abs(mass - 1) <= 1e-12)] if a.check else []
        return Result(f"average discrete c={a.c} lam={a.lam} r={res.r} mass={mass:.15g}",
                      rows=rows, checks=checks)
    c = float(a.c)
    s = a.width
    g = lambda p: np.exp(-np.sum(p * p, axis=-1) / (2 * s * s))
    val = float(averages.continuous_average(g, a.x, a.t, c, surface.SurfaceQuadrature(c, a.nq)))
    payload = {"value": val}
    checks = []
    if c == 2:
        ref = oracles.spherical_mean_gaussian(a.x, a.t, s)
        payload["classical"] = ref
        if a.check:
            checks.append(("matches the classical spherical mean", abs(val - ref) <= 1e-5 * abs(ref)))
    return Result(f"average continuous c={c} t={a.t} value={val:.15g}", payload=payload,
                  checks=checks)


def cmd_ergodic(a) -> Result:
    run = averages.torus_ergodic_run(a.theta, a.m, a.lams, a.c)
    rows = [{"lambda": l, "multiplier": v} for l, v in zip(run.lams, run.multipliers)]
    checks = []
    if a.check:
        checks.append(("|multiplier| <= 1", all(abs(v) <= 1 + 1e-12 for v in run.multipliers)))
    return Result(f"ergodic c={a.c} radii={len(rows)} skipped={len(run.skipped)} "
                  f"last={rows[-1]['multiplier'] if rows else float('nan'):.6g}", rows=rows,
                  checks=checks)


def cmd_variation(a) -> Result:
    if a.input:
        seq = np.loadtxt(a.input, ndmin=1)
    else:
        seq = np.random.default_rng(a.seed).standard_normal(a.random)
    v = averages.variation_seminorm(seq, a.r)
    checks = []
    if a.check and len(seq) <= 16:
        checks.append(("matches exhaustive search", abs(v - oracles.brute_variation(seq, a.r)) <= 1e-12 * max(1, v)))
    return Result(f"variation r={a.r} n={len(seq)} value={v:.17g}", payload={"value": v},
                  checks=checks)


def cmd_minor(a) -> Result:
    prof = averages.minor_arc_profile(a.c, a.Ns, stride=a.stride)
    rows = [{"N": N, "value": v, "argmax_lambda": l, "fitted_C": C}
            for N, v, l, C in zip(prof.Ns, prof.values, prof.argmax, prof.fitted_C)]
    checks = []
    if a.check:
        checks.append(("triangle inequality", prof.triangle_ok))
    return Result(f"minor c={a.c} slope={prof.slope:.4f} bound_exponent={prof.bound_exponent:.4f}",
                  rows=rows, checks=checks)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csphere", description="Lattice points on arithmetic c-spheres.")
    p.add_argument("--replay", metavar="MANIFEST", help="rerun the command stored in a manifest")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="output file (CSV for tables, JSON otherwise)")
        sp.add_argument("--check", action="store_true", help="run the invariant checks")
        sp.add_argument("--threads", type=int, help="worker threads (default: all cores)")
        return sp

    sp = add("count", cmd_count, "exact representation counts r_c(lam)")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--lmax", type=int, required=True)
    sp.add_argument("--method", choices=["fft", "enum"], default="fft")
    sp.add_argument("--check-legendre", action="store_true")

    sp = add("asym", cmd_asym, "dyadic windows and cumulative count against the main term")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--lmax", type=int, required=True)

    sp = add("jfun", cmd_jfun, "J-function of two catalog functions against its main term")
    sp.add_argument("--f1", required=True)
    sp.add_argument("--f2", required=True)
    sp.add_argument("--lams", type=_dyadic, default=_dyadic("10..20"))

    sp = add("expsum", cmd_expsum, "grid sup of |F_lam - G_lam|")
    sp.add_argument("--f", required=True)
    sp.add_argument("--lams", type=_dyadic, default=_dyadic("8..16"))
    sp.add_argument("--chi", type=float)
    sp.add_argument("--oversample", type=int, default=8)

    sp = add("vdc", cmd_vdc, "randomised van der Corput property test")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--nmax", type=int, default=10_000)
    sp.add_argument("--C0", type=float, default=10.0)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("surface", cmd_surface, "surface mass and polar identity")
    sp.add_argument("--c", type=_real_c, required=True)
    sp.add_argument("--mass", action="store_true")
    sp.add_argument("--polar", action="store_true")
    sp.add_argument("--nq", type=int, default=128)

    sp = add("fourier", cmd_fourier, "shell maxima of R |F mu_c|")
    sp.add_argument("--c", type=_real_c, required=True)
    sp.add_argument("--radii", type=_float_list, default=[2, 4, 8, 16, 32, 64, 128, 256])
    sp.add_argument("--samples", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("cap", cmd_cap, "normalised cap measures")
    sp.add_argument("--c", type=_real_c, required=True)
    sp.add_argument("--xi", type=_vector, required=True)
    sp.add_argument("--a", type=_float_list, required=True)
    sp.add_argument("--step", type=float, default=0.2, help="tanh-sinh step")

    sp = add("project", cmd_project, "projected lattice cloud")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--lam", type=int, required=True)

    sp = add("weyl", cmd_weyl, "Weyl sum gap for e(m.x)")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--lams", type=_dyadic, required=True)
    sp.add_argument("--m", type=_vector, default=np.array([1.0, 2.0, 3.0]))

    sp = add("disc", cmd_disc, "cap discrepancy decay over seeded directions")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--lams", type=_dyadic, default=_dyadic("7..17"))
    sp.add_argument("--directions", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=float, help="time budget in seconds")

    sp = add("kernels", cmd_kernels, "arc split and comparison kernels")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--lams", type=_dyadic, default=_dyadic("5..12"))
    sp.add_argument("--partition-max", type=int, default=2048,
                    help="largest radius for the partition identity")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dump", help="binary field dump for the last radius")
    sp.add_argument("--kernel", choices=["sigma", "major", "minor", "omega", "K"], default="major")
    sp.add_argument("--box", type=int, default=16, help="half width of the dumped box")

    sp = add("average", cmd_average, "discrete or continuous spherical averages")
    sp.add_argument("--c", type=_real_c, required=True)
    sp.add_argument("--mode", choices=["discrete", "continuous"], default="discrete")
    sp.add_argument("--lam", type=int, default=10)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--x", type=_vector, default=np.array([0.3, -0.2, 0.5]))
    sp.add_argument("--width", type=float, default=0.7)
    sp.add_argument("--nq", type=int, default=96)

    sp = add("ergodic", cmd_ergodic, "torus rotation multipliers")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--theta", type=_vector, required=True)
    sp.add_argument("--m", type=_vector, default=np.array([1.0, 1.0, 1.0]))
    sp.add_argument("--lams", type=_dyadic, default=_dyadic("4..14"))

    sp = add("variation", cmd_variation, "r-variation seminorm of a sequence")
    sp.add_argument("--r", type=float, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--input", help="text file with one value per line")
    g.add_argument("--random", type=int, help="length of a seeded Gaussian sequence")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("minor", cmd_minor, "minor-arc l2 profile")
    sp.add_argument("--c", type=_rational, required=True)
    sp.add_argument("--Ns", type=_dyadic, default=_dyadic("6..10"))
    sp.add_argument("--stride", type=int, default=1)
    return p


def _post_parse(a):
    # discrete averages count lattice points, so their exponent must be exact
    if a.command == "average" and a.mode == "discrete":
        a.c = regvar.RationalExponent.parse(_float_to_rational(a.c))
    return a


def _float_to_rational(v: float) -> str:
    from fractions import Fraction

    f = Fraction(v).limit_denominator(1000)
    if float(f) != float(v):
        raise UsageError("discrete averages need a rational exponent p/q")
    return f"{f.numerator}/{f.denominator}"


def set_threads(n: int | None):
    n = n or int(os.environ.get("CSPHERE_THREADS", "0")) or os.cpu_count() or 1
    import warnings

    import numba

    with warnings.catch_warnings():
        # numba reports unusable optional threading layers while starting its pool
        warnings.simplefilter("ignore", numba.NumbaWarning)
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    return n


def _emit(a, argv, res: Result, t0: float):
    if not a.out:
        return
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if res.rows is not None:
        write_rows(out, res.rows)
    else:
        out.write_text(json.dumps(_jsonable(res.payload), indent=1, sort_keys=True) + "\n")
    files = [out] + list(res.files)
    manifest = {
        "subcommand": a.command,
        "argv": argv,
        "params": _jsonable({k: (str(v) if isinstance(v, regvar.RationalExponent) else v)
                             for k, v in vars(a).items() if k not in ("func",)}),
        "bumps": BumpConfig(float(a.c)).metadata() if a.command in ("kernels", "minor") else None,
        "version": _version(),
        "wall_clock_s": time.perf_counter() - t0,
        "outputs": {str(f): _digest(f) for f in files},
    }
    Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.replay:
            if a.command:
                raise UsageError("--replay takes no subcommand")
            stored = json.loads(Path(a.replay).read_text())["argv"]
            argv = list(stored)
            a = parser.parse_args(argv)
        if not a.command:
            raise UsageError("a subcommand is required")
        _post_parse(a)
    except UsageError as exc:
        print(f"csphere: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"csphere: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    set_threads(a.threads)
    t0 = time.perf_counter()
    try:
        res = a.func(a)
    except UsageError as exc:
        print(f"csphere: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except COMPUTE_ERRORS as exc:
        print(f"csphere: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"csphere: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(a, argv, res, t0)
    print(res.summary)
    failed = [name for name, ok in res.checks if not ok]
    for name, ok in res.checks:
        print(f"  check {'ok  ' if ok else 'FAIL'} {name}")
    if failed:
        return EXIT_CHECK
    return EXIT_OK


def main():
    sys.exit(run())
