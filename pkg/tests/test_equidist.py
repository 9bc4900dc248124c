import numpy as np
import pytest

from csphere.equidist import (
    DiscrepancyConfig,
    EmptySphereError,
    discrepancy,
    discrepancy_profile,
    discrepancy_stream,
    project,
    trig_average,
    weyl_sum,
    weyl_trig,
)
from csphere.oracles import brute_cloud, brute_count, brute_discrepancy
from csphere.surface import CapSpec, cap_measure, random_directions


def test_cloud_matches_brute_force():
    for lam in (1, 10, 57, 300):
        cloud = project(lam, "21/20")
        ref = brute_cloud("21/20", lam)
        assert cloud.count == brute_count("21/20", lam) == len(ref)
        assert np.array_equal(np.unique(cloud.lattice, axis=0), np.unique(ref, axis=0))


def test_empty_sphere_error():
    with pytest.raises(EmptySphereError):
        project(7, 2)


def test_constant_weyl_gap_is_zero():
    cloud = project(200, "21/20")
    res = weyl_sum(cloud, lambda p: np.ones(len(p)), limit=1.0)
    assert res.gap == 0.0
    assert weyl_trig("21/20", 200, [0, 0, 0]).gap == 0.0


def test_trig_average_matches_point_sum():
    lam = 500
    cloud = project(lam, "21/20")
    alpha = np.array([0.013, 0.37, 0.71])
    direct = np.mean(np.exp(2j * np.pi * cloud.lattice @ alpha))
    assert trig_average("21/20", lam, alpha) == pytest.approx(direct.real, abs=1e-12)
    assert abs(direct.imag) < 1e-12


def test_trig_average_half_integer_fixture():
    lam = 100
    pts = brute_cloud("21/20", lam)
    ref = np.mean((-1.0) ** pts[:, 0])
    assert trig_average("21/20", lam, [0.5, 0, 0]) == ref


def test_discrepancy_matches_brute_counts():
    lam = 10
    xi = random_directions(1, 21)[0]
    cloud = project(lam, "21/20")
    proj = np.unique(cloud.points @ xi)
    # one threshold inside every gap between jumps, plus both ends
    a_values = np.concatenate([[proj[0] - 1], (proj[1:] + proj[:-1]) / 2, [proj[-1] + 1]])
    nu = lambda a: cap_measure(CapSpec(tuple(xi), float(a)), 1.05)
    measure = lambda a: np.array([nu(x) for x in np.atleast_1d(a)])
    prof = discrepancy_profile(cloud.points @ xi, a_values, measure, cloud.count)
    ref = brute_discrepancy("21/20", lam, xi, a_values, nu).value
    counts = prof + cloud.count * measure(a_values)
    assert np.array_equal(np.rint(counts).astype(int), ref["counts"])
    assert np.allclose(prof, ref["D"], atol=1e-9)


def test_stream_brackets_exact_sup():
    cfg = DiscrepancyConfig.seeded(1.05, 3, 0, n_a=257)
    lam = 256
    cloud = project(lam, "21/20")
    exact = [discrepancy(cloud, xi, t) for xi, t in zip(cfg.directions, cfg.tables)]
    stream = discrepancy_stream("21/20", lam, cfg)
    for ex, st in zip(exact, stream):
        assert st.r == cloud.count
        assert st.D <= ex.D + 1e-6 <= st.upper + 2e-6
