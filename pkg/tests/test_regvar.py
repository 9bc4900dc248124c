import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from csphere.oracles import naive_floor_pow
from csphere.regvar import (
    CertificationError,
    RationalExponent,
    RegVarFunction,
    choose_N0,
    eval_h,
    floor_h,
    floor_h_array,
    floor_pow,
    floor_pow_array,
    floor_set,
    invert,
    iroot,
    member,
    parse_function,
    phi_deriv,
)


def test_rational_exponent_parsing():
    c = RationalExponent.parse("42/40")
    assert (c.p, c.q) == (21, 20)
    assert c.gamma * c.fraction == 1
    assert RationalExponent.parse(2).fraction == 2
    assert RationalExponent.parse(Fraction(3, 2)).q == 2
    with pytest.raises((ValueError, TypeError)):
        RationalExponent.parse(1.05)
    with pytest.raises((ValueError, ZeroDivisionError)):
        RationalExponent.parse("1/0")


def test_iroot_exact():
    for n in (2, 3, 20):
        for y in [0, 1, 2, 10 ** 30, 2 ** 200 - 1, 2 ** 200]:
            k = iroot(y, n)
            assert k ** n <= y < (k + 1) ** n


def test_floor_pow_examples():
    assert floor_pow(5, "3/2") == 11
    assert floor_pow(0, "21/20") == 0
    assert floor_pow(1, "21/20") == 1
    assert floor_pow(14, "21/20") == 15
    assert floor_pow(2, "21/20") == 2


@pytest.mark.parametrize("c", ["3/2", "21/20", "11/10"])
def test_floor_pow_against_high_precision(c):
    e = RationalExponent.parse(c)
    ms = np.unique(np.concatenate([np.arange(0, 3000), np.random.default_rng(1).integers(0, 10 ** 6, 3000)]))
    got = floor_pow_array(ms, e)
    mpmath.mp.prec = 256
    ex = mpmath.mpf(e.p) / e.q
    for m, k in zip(ms[::7], got[::7]):
        v = mpmath.mpf(int(m)) ** ex
        frac = v - mpmath.floor(v)
        if min(frac, 1 - frac) > mpmath.mpf(2) ** -40:
            assert int(mpmath.floor(v)) == int(k)
        assert int(k) == naive_floor_pow(int(m), c)


def test_floor_pow_array_matches_scalar():
    ms = np.arange(0, 5000)
    assert np.array_equal(floor_pow_array(ms, "21/20"), [floor_pow(int(m), "21/20") for m in ms])


def test_floor_h_examples():
    h = RegVarFunction.power("21/20")
    assert floor_h(h, 2) == 2
    lp = RegVarFunction.logpower("3/2", 1.0)
    assert floor_h(lp, 10) == 72  # floor(10^1.5 ln 10), 60-digit oracle
    xl = RegVarFunction.xlogx()
    assert floor_h(xl, 3) == 3  # floor(3 ln 3)


def test_floor_h_array_certified():
    lp = RegVarFunction.logpower("3/2", 1.0)
    ms = np.arange(lp.N0, 2000)
    mpmath.mp.dps = 40
    ref = [int(mpmath.floor(mpmath.mpf(int(m)) ** 1.5 * mpmath.log(int(m)))) for m in ms]
    assert np.array_equal(floor_h_array(lp, ms), ref)


def test_eval_h_domain():
    lp = RegVarFunction.logpower("3/2", 1.0)
    with pytest.raises(ValueError):
        eval_h(lp, 0.5)


def test_invert_closed_form_and_round_trip():
    h = RegVarFunction.power("21/20")
    assert invert(h, 1024.0) == pytest.approx(1024 ** (20 / 21), rel=1e-15)
    ident = RegVarFunction.power(1)
    assert invert(ident, 7.0) == 7.0
    assert phi_deriv(ident, 7.0, 1) == 1.0
    assert phi_deriv(ident, 7.0, 2) == 0.0
    lp = RegVarFunction.logpower("3/2", 1.0)
    ys = np.logspace(math.log10(eval_h(lp, lp.x0)) + 0.01, 12, 10_000)
    back = eval_h(lp, invert(lp, ys))
    assert np.max(np.abs(back - ys) / ys) <= 1e-12


def test_phi_deriv_closed_form():
    h = RegVarFunction.power("21/20")
    g = 20 / 21
    y = np.logspace(0.1, 8, 50)
    assert np.allclose(phi_deriv(h, y, 1), g * y ** (g - 1), rtol=1e-10)
    assert np.allclose(phi_deriv(h, y, 2), g * (g - 1) * y ** (g - 2), rtol=1e-10)
    assert np.allclose(phi_deriv(h, y, 3), g * (g - 1) * (g - 2) * y ** (g - 3), rtol=1e-10)


def test_phi_deriv_chain_rule_matches_finite_differences():
    lp = RegVarFunction.logpower("3/2", 1.0)
    y = 500.0
    d = 1e-3
    fd = (invert(lp, y + d) - invert(lp, y - d)) / (2 * d)
    assert phi_deriv(lp, y, 1) == pytest.approx(fd, rel=1e-8)
    assert phi_deriv(lp, y, 2) < 0


def test_membership_examples():
    h = RegVarFunction.power("21/20")
    assert h.N0 == 1
    assert not member(h, 16)
    assert member(h, 15)
    assert member(h, 17)
    assert list(floor_set(RegVarFunction.power(1), 10).elements) == list(range(1, 11))
    assert list(floor_set(RegVarFunction.power(2), 30).elements) == [1, 4, 9, 16, 25]


def test_membership_identity():
    # n is a floor value iff floor(-phi(n)) - floor(-phi(n+1)) = 1, with phi(n) = n^(20/21)
    h = RegVarFunction.power("21/20")
    fs = floor_set(h, 10_000)
    for n in range(1, 10_001):
        # -phi(n) floors to -ceil(phi(n)); ceil of the exact root via integer roots
        lo = -_ceil_root(n)
        hi = -_ceil_root(n + 1)
        assert (lo - hi == 1) == (n in fs) == member(h, n)


def _ceil_root(n):
    # smallest k with k^21 >= n^20
    k = iroot(n ** 20, 21)
    return k if k ** 21 == n ** 20 else k + 1


def test_floor_set_strictly_increasing():
    for c in ("21/20", "11/10", "3/2"):
        el = floor_set(RegVarFunction.power(c), 100_000).elements
        assert np.all(np.diff(el) > 0)


def test_choose_N0():
    assert choose_N0(RegVarFunction.power("21/20")) == 1
    assert choose_N0(RegVarFunction.power(1)) == 1
    assert RegVarFunction.logpower("3/2", -1.0).N0 == 4


def test_parse_function_strict():
    h = parse_function("logpow:c=3/2,beta=1,Ch=1")
    assert h.kind == "logpow"
    assert parse_function("pow:c=21/20").exact
    assert parse_function("xlogx").kind == "xlogx"
    for bad in ("pow:c=21/20,zeta=1", "sin:c=1", "pow", "logpow:c=3/2"):
        with pytest.raises(ValueError):
            parse_function(bad)


def test_certification_error_type():
    assert issubclass(CertificationError, ArithmeticError)
