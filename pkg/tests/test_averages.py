import math

import numpy as np
import pytest
from scipy import integrate

from csphere.averages import (
    K_kernel,
    discrete_average,
    inverse_ft_psi,
    k_mass,
    kernel_field,
    maximal_profile,
    minor_arc_profile,
    minor_norms,
    omega,
    read_field,
    torus_ergodic_run,
    continuous_average,
    variation_seminorm,
    write_field,
)
from csphere.bumps import BumpConfig
from csphere.counting import count_c_sphere
from csphere.oracles import brute_cloud, brute_variation, spherical_mean_gaussian
from csphere.surface import SurfaceQuadrature, fourier_mu, surface_mass


def test_bumps_plateaus_and_supports():
    b = BumpConfig(1.05)
    t = np.linspace(-0.6, 0.6, 20001)
    psi = b.psi(t)
    assert np.all((psi >= 0) & (psi <= 1))
    assert np.all(psi[np.abs(t) < 1 / 2.1] == 1)
    assert np.all(psi[np.abs(t) >= 0.5] == 0)
    x = np.linspace(-12, 12, 5001)
    e = b.eta_1d(x)
    assert np.all(e[np.abs(x) <= 4 ** (1 / 1.05)] == 1)
    assert np.all(e[np.abs(x) >= 10] == 0)


def test_inverse_ft_psi_against_adaptive_quadrature():
    b = BumpConfig(1.05)
    psi = b.psi
    for u in (0.0, 0.4, 3.0, 25.0, 60.0):
        ref = 2 * integrate.quad(lambda t: psi(t) * math.cos(2 * math.pi * u * t), 0, 0.5,
                                 limit=500, epsabs=1e-14)[0]
        assert inverse_ft_psi(np.array([u]), b)[0] == pytest.approx(ref, abs=1e-11)


def test_partition_identity_and_pointwise_minor():
    fld = kernel_field(200, "21/20")
    assert fld.partition_error <= 1e-6
    # sigma^m at single points by adaptive t-quadrature of its definition
    b = fld.bumps
    lk = 200 ** fld.kappa
    pts = np.array([[40, 30, 10], [0, 0, 155], [60, 50, 21]])
    vals = fld.evaluate(pts, "minor")
    Q = [int(sum(np.floor(np.abs(p).astype(float) ** 1.05))) for p in pts]
    for p, q, v in zip(pts, Q, vals):
        k = q - 200
        f = lambda t: (1 - b.psi(t / lk)) * math.cos(2 * math.pi * k * t)
        ref = integrate.quad(f, -0.5, 0.5, limit=2000, points=[-lk / 2, lk / 2])[0]
        eta = b.eta(p / 200 ** (20 / 21))
        assert v == pytest.approx(eta * ref, abs=1e-8)


def test_kernels_vanish_outside_window():
    fld = kernel_field(50, "21/20")
    far = np.array([[fld.window + 5, 0, 0]])
    for k in ("major", "minor", "sigma"):
        assert fld.evaluate(far, k)[0] == 0.0


def test_sigma_is_the_sphere_indicator():
    fld = kernel_field(50, "21/20")
    pts = brute_cloud("21/20", 50)
    assert np.all(fld.evaluate(pts, "sigma") == 1.0)
    assert np.all(fld.evaluate(pts + np.array([1, 0, 0]), "sigma")[np.any(pts != 0, axis=1)] <= 1.0)


def test_omega_and_K():
    x = np.array([[100.0, 0, 0]])
    lam = 100 ** 1.05
    assert omega(x, lam, 1.05)[0] == pytest.approx(1.0)
    assert K_kernel(x, lam, 1.05)[0] == pytest.approx(lam ** (-9 / 4.2))


def test_k_mass_limit():
    lim = surface_mass(1.05) / 1.05 * (math.pi / 5) / math.sin(math.pi / 10)
    assert k_mass(2 ** 12, 1.05) == pytest.approx(lim, rel=2e-2)


def test_discrete_average_delta_and_mass():
    f = np.zeros((1, 1, 1), dtype=np.int64)
    f[0, 0, 0] = 1
    res = discrete_average(f, 30, "21/20")
    R = (res.values.shape[0] - 1) // 2
    pts = brute_cloud("21/20", 30)
    ind = np.zeros_like(res.numerator)
    ind[tuple((pts + R).T)] = 1
    assert np.array_equal(res.numerator, ind)
    assert res.values.sum() == pytest.approx(1.0, abs=1e-13)


def test_discrete_average_of_ones_and_positivity():
    rng = np.random.default_rng(0)
    f = rng.integers(0, 5, (9, 9, 9))
    res = discrete_average(f, 20, "21/20")
    assert np.all(res.values >= 0)
    assert res.numerator.sum() == f.sum() * res.r
    ones = np.ones((61, 61, 61), dtype=np.int64)
    res = discrete_average(ones, 20, "21/20")
    R = (res.values.shape[0] - 61) // 2
    centre = res.values[2 * R:61, 2 * R:61, 2 * R:61]
    assert np.all(centre == 1.0)


def test_maximal_profile_skips_empty_spheres():
    f = np.ones((3, 3, 3), dtype=np.int64)
    with pytest.warns(RuntimeWarning):
        vals, origin, used = maximal_profile(f, [6, 7, 8], 2)
    assert used == [6, 8]
    assert np.all(vals <= 1 + 1e-12)


def test_continuous_average():
    quad = SurfaceQuadrature(1.05, 96)
    one = continuous_average(lambda p: np.ones(len(p)), [0.1, 0.2, 0.3], 2.0, 1.05, quad)
    assert one == pytest.approx(surface_mass(1.05), rel=1e-13)
    xi = np.array([0.7, -0.4, 1.1])
    x = np.array([0.3, 0.1, -0.2])
    t = 1.5
    f = lambda p: np.exp(2j * np.pi * p @ xi)
    val = continuous_average(f, x, t, 1.05, SurfaceQuadrature(1.05, 128))
    ref = np.exp(2j * np.pi * x @ xi) * fourier_mu(t * xi, 1.05, 128)
    assert val == pytest.approx(ref, abs=1e-10)
    g = lambda p: np.exp(-np.sum(p * p, axis=-1) / (2 * 0.7 ** 2))
    val2 = continuous_average(g, x, t, 2.0, SurfaceQuadrature(2.0, 96))
    assert val2 == pytest.approx(spherical_mean_gaussian(x, t, 0.7), rel=1e-5)


def test_torus_multipliers():
    run = torus_ergodic_run([0.3, 0.6, 0.1], [0, 0, 0], [16, 100, 1000], "21/20")
    assert run.multipliers == [1.0, 1.0, 1.0]
    run = torus_ergodic_run([0.5, 0.0, 0.0], [1, 1, 1], [100], "21/20")
    pts = brute_cloud("21/20", 100)
    assert run.multipliers[0] == np.mean((-1.0) ** pts[:, 0])
    run = torus_ergodic_run([0.5, 0.5, 0.5], [1, 1, 1], [7, 8], 2)
    assert run.skipped == [7]


def test_variation_seminorm_basics():
    assert variation_seminorm(np.ones(10), 2) == 0.0
    a = np.cumsum(np.random.default_rng(1).random(30))
    assert variation_seminorm(a, 1) == pytest.approx(a[-1] - a[0])
    rng = np.random.default_rng(2)
    for _ in range(30):
        s = rng.choice([-1.0, 1.0], 10)
        r = float(rng.uniform(1, 4))
        assert variation_seminorm(s, r) == pytest.approx(brute_variation(s, r), rel=1e-12)
    z = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    assert variation_seminorm(z, 2.5) == pytest.approx(brute_variation(z, 2.5), rel=1e-12)


def test_minor_norms_triangle_and_profile():
    s, sM, sm = minor_norms(100, "21/20")
    assert s == pytest.approx(math.sqrt(count_c_sphere("21/20", 100)[100]), rel=1e-9)
    assert sm <= s + sM
    prof = minor_arc_profile("21/20", [16, 32], stride=4)
    assert prof.triangle_ok and len(prof.values) == 2


def test_field_dump_round_trip(tmp_path):
    fld = kernel_field(50, "21/20")
    path = tmp_path / "f.bin"
    header = write_field(path, fld, "major", [-3, -3, -3], [3, 3, 4])
    h2, data = read_field(path)
    assert h2 == header and data.shape == (7, 7, 8)
    assert data[3, 3, 3] == fld.evaluate(np.array([[0, 0, 0]]), "major")[0]
