import math

import numpy as np
import pytest

from csphere.bumps import BumpConfig
from csphere.expsums import (
    ExpSumBoundSpec,
    SandwichError,
    e,
    e_int_times,
    f_coefficients,
    f_sum,
    fg_gap,
    g_sum,
    grid_values,
    minor_arc_scan,
    pi_sum,
    u_sum,
    v_sum,
    vdc_check,
)
from csphere.regvar import RegVarFunction, floor_pow


def test_e_reduces_integer_part():
    assert e(0.25) == pytest.approx(1j)
    big = 10 ** 12
    assert e_int_times(np.array([big]), 0.5)[0] == pytest.approx(1.0)
    assert abs(e_int_times(np.array([3]), 1 / 3)[0] - 1) < 1e-15


def test_spec_validation():
    spec = ExpSumBoundSpec.default(1.05)
    assert 0 < spec.chi
    assert -1 < spec.kappa < 0
    with pytest.raises(ValueError):
        ExpSumBoundSpec(1.05, 0.5)


def test_grid_values_match_direct_sums():
    h = RegVarFunction.power("21/20")
    lam = 300
    coef = f_coefficients(h, lam)
    M = 1024
    vals = grid_values(coef, M)
    t = -0.5 + np.arange(M) / M
    idx = [0, 17, 511, 800]
    assert np.allclose(vals[idx], f_sum(h, lam, t[idx]), atol=1e-10)


def test_parseval_on_grid():
    h = RegVarFunction.power("21/20")
    lam = 500
    d = f_coefficients(h, lam)
    vals = grid_values(d, 2048)
    assert np.mean(np.abs(vals) ** 2) == pytest.approx(np.sum(d ** 2), rel=1e-12)


def test_g_sum_at_zero_counts_floor_values():
    h = RegVarFunction.power("21/20")
    n = len({floor_pow(m, "21/20") for m in range(1, 200) if floor_pow(m, "21/20") <= 150})
    assert g_sum(h, 150, 0.0).real == pytest.approx(n)


def test_fg_gap_within_bound_shape():
    h = RegVarFunction.power("21/20")
    gaps = [fg_gap(h, 2 ** k) for k in (10, 12)]
    assert all(g.sup > 0 for g in gaps)
    assert gaps[1].sup < gaps[1].bound * 10


def test_vdc_quadratic_and_sandwich():
    res = vdc_check(lambda x: 1e-4 * x * x, lambda x: np.full_like(x, 2e-4), (1, 5000), 2e-4, 1.0)
    assert res.passed
    with pytest.raises(SandwichError):
        vdc_check(lambda x: 1e-4 * x * x, lambda x: np.full_like(x, 2e-4), (1, 5000), 1e-3, 1.0)


def test_u_v_sums_against_bounds():
    u = u_sum(1000, 2000, 0.01, 0.3, "21/20")
    assert u.value <= 10 * u.bound
    v = v_sum(1000, 2000, 50.0, "21/20")
    assert v.value <= 10 * v.bound
    n = np.arange(1000, 2001)
    direct = abs(np.sum(np.exp(2j * np.pi * (n ** 1.05 * 0.01 + n * 0.3))))
    assert u.value == pytest.approx(direct, rel=1e-9)


def test_pi_sum_and_scan():
    eta = BumpConfig(1.05).eta_1d
    v = pi_sum(eta, eta.support, 0.0, 100.0, 0.0, "21/20")
    assert v.real > 0 and abs(v.imag) < 1e-9
    scan = minor_arc_scan(eta, eta.support, 64, "21/20", samples=8)
    assert scan.max_abs > 0 and math.isfinite(scan.fitted_C)
