"""Regularly varying functions h(x) = C_h x^c l(x), their floors and inverses.

The catalog is closed: ``pow`` (l = 1), ``logpow`` (l = (log x)^beta) and
``xlogx`` (c = 1, h = x log x).  Floors of pure powers with C_h = 1 are
computed with integer arithmetic only; every other floor goes through a
floating evaluation whose distance to the nearest integer is certified,
escalating the working precision when the certificate fails.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import mpmath
import numpy as np

__all__ = [
    "RationalExponent",
    "RegVarFunction",
    "FloorSet",
    "CertificationError",
    "iroot",
    "floor_pow",
    "ceil_root",
    "floor_pow_array",
    "floor_h",
    "floor_h_array",
    "eval_h",
    "invert",
    "phi_deriv",
    "floor_set",
    "member",
    "choose_N0",
    "parse_function",
]

#: default relative tolerance of the inverse
EPS_PHI = 1e-14
#: cap on the working precision used to certify a floor (bits)
MAX_PREC_BITS = 1024


class CertificationError(ArithmeticError):
    """Raised when a floor cannot be certified below ``MAX_PREC_BITS``."""


# ---------------------------------------------------------------------------
# exact integer primitives


def iroot(y: int, n: int) -> int:
    """Largest integer ``k`` with ``k**n <= y``."""
    if n <= 0:
        raise ValueError("root index must be positive")
    if y < 0:
        raise ValueError("negative radicand")
    if y < 2 or n == 1:
        return y
    if n == 2:
        return math.isqrt(y)
    # float seed, then Newton from above
    try:
        k = int(math.exp(math.log(y) / n)) + 2
    except OverflowError:
        k = 1 << (y.bit_length() // n + 1)
    while k ** n <= y:
        k *= 2
    while True:
        k1 = ((n - 1) * k + y // k ** (n - 1)) // n
        if k1 >= k:
            break
        k = k1
    while k ** n > y:
        k -= 1
    while (k + 1) ** n <= y:
        k += 1
    return k


@dataclass(frozen=True)
class RationalExponent:
    """The exponent c = p/q in lowest terms."""

    p: int
    q: int = 1

    def __post_init__(self):
        if self.q == 0:
            raise ZeroDivisionError("exponent denominator is zero")
        if self.p <= 0 or self.q < 0:
            raise ValueError("exponent must be a positive rational")
        g = math.gcd(self.p, self.q)
        if g != 1:
            object.__setattr__(self, "p", self.p // g)
            object.__setattr__(self, "q", self.q // g)

    @classmethod
    def parse(cls, text) -> "RationalExponent":
        """Accept ``"21/20"``, ``"2"``, a ``Fraction``, an int or another exponent.

        Floats are refused: counting must never depend on a binary rounding of c.
        """
        if isinstance(text, RationalExponent):
            return text
        if isinstance(text, Fraction):
            return cls(text.numerator, text.denominator)
        if isinstance(text, (int, np.integer)) and not isinstance(text, bool):
            return cls(int(text), 1)
        if isinstance(text, str):
            m = re.fullmatch(r"\s*(\d+)\s*(?:/\s*(\d+)\s*)?", text)
            if m is None:
                raise ValueError(f"exponent must look like 'p/q' or 'p', got {text!r}")
            return cls(int(m.group(1)), int(m.group(2) or 1))
        raise TypeError(f"cannot build an exact exponent from {type(text).__name__}")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def value(self) -> float:
        return self.p / self.q

    @property
    def gamma(self) -> Fraction:
        return Fraction(self.q, self.p)

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


def floor_pow(m: int, c) -> int:
    """Exact ``floor(m**c)`` for integer ``m >= 0`` and rational ``c``.

    >>> floor_pow(5, RationalExponent(3, 2))
    11
    """
    c = RationalExponent.parse(c)
    m = int(m)
    if m < 0:
        raise ValueError("floor_pow needs m >= 0")
    return iroot(m ** c.p, c.q)


def ceil_root(n: int, c) -> int:
    """Smallest integer ``k >= 0`` with ``k**c >= n`` (i.e. ceil(n**(1/c)))."""
    c = RationalExponent.parse(c)
    n = int(n)
    if n <= 0:
        return 0
    # k^p >= n^q
    k = iroot(n ** c.q, c.p)
    if k ** c.p < n ** c.q:
        k += 1
    return k


def floor_pow_array(ms, c) -> np.ndarray:
    """Vectorised exact ``floor(m**c)``.

    A float64 estimate is accepted when it is provably far from an integer;
    the remaining entries are settled by :func:`floor_pow`.
    """
    c = RationalExponent.parse(c)
    ms = np.asarray(ms, dtype=np.int64)
    if ms.size and ms.min() < 0:
        raise ValueError("floor_pow_array needs m >= 0")
    if c.q == 1:
        return ms ** c.p
    est = ms.astype(np.float64) ** c.value
    if est.size and est.max() >= 2.0 ** 50:
        return np.array([floor_pow(int(m), c) for m in ms.ravel()],
                        dtype=object).reshape(ms.shape)
    k = np.floor(est)
    frac = est - k
    margin = est * 2.0 ** -44 + 2.0 ** -60
    unsure = (frac < margin) | (1.0 - frac < margin)
    out = k.astype(np.int64)
    if unsure.any():
        idx = np.flatnonzero(unsure)
        flat = out.reshape(-1)
        src = ms.reshape(-1)
        for i in idx:
            flat[i] = floor_pow(int(src[i]), c)
    return out


# ---------------------------------------------------------------------------
# the function catalog

_KINDS = ("pow", "logpow", "xlogx")


@dataclass(frozen=True)
class RegVarFunction:
    """A member h of the catalog.

    Parameters
    ----------
    kind : {"pow", "logpow", "xlogx"}
    exponent : RationalExponent
        The regular-variation index c.  ``xlogx`` forces c = 1.
    beta : float
        Power of the logarithm for ``logpow`` (``xlogx`` is beta = 1, c = 1).
    Ch : float
        Positive scale.
    x0 : float
        Left end of the domain.
    N0 : int, optional
        Validity threshold; the least admissible value is chosen when omitted.
    """

    kind: str
    exponent: RationalExponent
    beta: float = 0.0
    Ch: float = 1.0
    x0: float = 1.0
    N0: int = field(default=0)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")
        object.__setattr__(self, "exponent", RationalExponent.parse(self.exponent))
        if self.kind == "xlogx":
            object.__setattr__(self, "exponent", RationalExponent(1))
            object.__setattr__(self, "beta", 1.0)
        if self.kind == "pow":
            object.__setattr__(self, "beta", 0.0)
        c = self.exponent.fraction
        if not (1 <= c <= 2):
            raise ValueError(f"exponent {c} outside [1, 2]")
        if self.Ch <= 0:
            raise ValueError("Ch must be positive")
        if self.kind != "pow" and self.x0 <= 1.0:
            raise ValueError("log factors need x0 > 1")
        if self.x0 < 1.0:
            raise ValueError("x0 must be >= 1")
        self._check_shape()
        if self.N0 == 0:
            object.__setattr__(self, "N0", choose_N0(self))
        elif self.N0 < math.ceil(self.x0):
            raise ValueError("N0 must lie in the domain [x0, oo)")

    # constructors ----------------------------------------------------------

    @classmethod
    def power(cls, c, Ch: float = 1.0, N0: int = 0) -> "RegVarFunction":
        return cls("pow", RationalExponent.parse(c), Ch=Ch, N0=N0)

    @classmethod
    def logpower(cls, c, beta: float, Ch: float = 1.0, x0: float = math.e,
                 N0: int = 0) -> "RegVarFunction":
        return cls("logpow", RationalExponent.parse(c), beta=beta, Ch=Ch, x0=x0, N0=N0)

    @classmethod
    def xlogx(cls, x0: float = math.e, N0: int = 0) -> "RegVarFunction":
        return cls("xlogx", RationalExponent(1), x0=x0, N0=N0)

    # properties ------------------------------------------------------------

    @property
    def c(self) -> float:
        return self.exponent.value

    @property
    def gamma(self) -> float:
        return 1.0 / self.exponent.value

    @property
    def exact(self) -> bool:
        """True when floors are pure integer arithmetic."""
        return self.kind == "pow" and self.Ch == 1.0

    def spec_string(self) -> str:
        if self.kind == "pow":
            s = f"pow:c={self.exponent}"
            return s if self.Ch == 1.0 else s + f",Ch={self.Ch!r}"
        if self.kind == "logpow":
            return f"logpow:c={self.exponent},beta={self.beta!r},Ch={self.Ch!r}"
        return "xlogx"

    def theta_slow(self, x):
        """The function theta with l(x) = exp(int theta(t)/t dt)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "pow":
            return np.zeros_like(x)
        return self.beta / np.log(x)

    # evaluation ------------------------------------------------------------

    def _log_derivs(self, x):
        """g = log h and its first three derivatives."""
        x = np.asarray(x, dtype=float)
        c, b = self.c, self.beta
        g1 = c / x
        g2 = -c / x ** 2
        g3 = 2 * c / x ** 3
        if b != 0.0:
            L = np.log(x)
            g1 = g1 + b / (x * L)
            g2 = g2 - b * (L + 1) / (x ** 2 * L ** 2)
            g3 = g3 + b * (2 * L ** 2 + 3 * L + 2) / (x ** 3 * L ** 3)
        return g1, g2, g3

    def value(self, x):
        x = np.asarray(x, dtype=float)
        v = self.Ch * x ** self.c
        if self.beta != 0.0:
            v = v * np.log(x) ** self.beta
        return v

    def deriv(self, x, n: int = 1):
        """n-th derivative of h, n in 1..3."""
        if n not in (1, 2, 3):
            raise ValueError("derivative order must be 1, 2 or 3")
        if self.kind == "pow":
            x = np.asarray(x, dtype=float)
            c = self.c
            coef = np.prod([c - j for j in range(n)])
            return self.Ch * coef * x ** (c - n)
        h = self.value(x)
        g1, g2, g3 = self._log_derivs(x)
        if n == 1:
            return h * g1
        if n == 2:
            return h * (g2 + g1 ** 2)
        return h * (g3 + 3 * g1 * g2 + g1 ** 3)

    def value_mp(self, x, prec: int):
        with mpmath.workprec(prec):
            x = mpmath.mpf(x)
            v = mpmath.mpf(self.Ch) * mpmath.power(x, mpmath.mpf(self.exponent.p) / self.exponent.q)
            if self.beta != 0.0:
                v *= mpmath.power(mpmath.log(x), mpmath.mpf(self.beta))
            return v

    def _check_shape(self):
        xs = self.x0 * np.logspace(0, 8, 400)
        if np.any(self.value(xs) < 1.0 - 1e-12):
            raise ValueError("h must map [x0, oo) into [1, oo); raise x0")
        if np.any(self.deriv(xs, 1) <= 0):
            raise ValueError("h' must be positive on [x0, oo); raise x0")
        d2 = self.deriv(xs, 2)
        if self.c > 1 and np.any(d2 <= 0):
            raise ValueError("h'' must be positive on [x0, oo); raise x0")
        if np.any(d2 < 0):
            raise ValueError("h'' must be nonnegative on [x0, oo)")

    def __call__(self, x):
        return self.value(x)


# ---------------------------------------------------------------------------
# floors


def _certified_floor(h: RegVarFunction, m) -> int:
    prec = 106
    while prec <= MAX_PREC_BITS:
        v = h.value_mp(m, prec)
        with mpmath.workprec(prec):
            k = int(mpmath.floor(v))
            frac = v - k
            margin = max(mpmath.mpf(2) ** -40, abs(v) * mpmath.mpf(2) ** (8 - prec))
            if margin < frac < 1 - margin:
                return k
        prec *= 2
    raise CertificationError(
        f"floor of h({m}) not certified at {MAX_PREC_BITS} bits; h({m}) may be an integer")


def floor_h(h: RegVarFunction, m: int) -> int:
    """Certified ``floor(h(m))`` for an integer ``m >= N0``."""
    m = int(m)
    if m < h.x0:
        raise ValueError(f"m={m} below the domain start x0={h.x0}")
    if h.exact:
        return floor_pow(m, h.exponent)
    v = float(h.value(m))
    k = math.floor(v)
    margin = max(2.0 ** -40, abs(v) * 2.0 ** -44)
    if margin < v - k < 1 - margin:
        return k
    return _certified_floor(h, m)


def floor_h_array(h: RegVarFunction, ms) -> np.ndarray:
    ms = np.asarray(ms, dtype=np.int64)
    if ms.size and ms.min() < h.x0:
        raise ValueError("argument below the domain start x0")
    if h.exact:
        return floor_pow_array(ms, h.exponent)
    v = h.value(ms.astype(float))
    k = np.floor(v)
    frac = v - k
    margin = np.maximum(2.0 ** -40, np.abs(v) * 2.0 ** -44)
    out = k.astype(np.int64)
    bad = np.flatnonzero(((frac <= margin) | (1 - frac <= margin)).ravel())
    flat = out.reshape(-1)
    src = ms.reshape(-1)
    for i in bad:
        flat[i] = _certified_floor(h, int(src[i]))
    return out


def eval_h(h: RegVarFunction, x):
    x = np.asarray(x, dtype=float)
    if x.size and x.min() < h.x0:
        raise ValueError("argument below the domain start x0")
    return h.value(x)


# ---------------------------------------------------------------------------
# the inverse phi


def invert(h: RegVarFunction, y, eps: float = EPS_PHI):
    """phi(y), the inverse of h, for ``y >= h(x0)``."""
    scalar = np.ndim(y) == 0
    y = np.asarray(y, dtype=float)
    ylo = float(h.value(h.x0))
    if y.size and y.min() < ylo * (1 - 1e-15):
        raise ValueError(f"invert: y below h(x0) = {ylo}")
    g = 1.0 / h.c
    x = (y / h.Ch) ** g
    if h.kind == "pow":
        return float(x) if scalar else x
    # fixed-point warm start on the log factor, then safeguarded Newton
    x = np.maximum(x, h.x0)
    for _ in range(3):
        x = np.maximum((y / (h.Ch * np.log(x) ** h.beta)) ** g, h.x0)
    for _ in range(200):
        fx = h.value(x) - y
        dx = fx / h.deriv(x, 1)
        xn = np.maximum(x - dx, h.x0)
        # Newton from below overshoots for convex h; halve the step if it leaves the domain
        done = np.abs(xn - x) <= eps * 0.25 * np.abs(x)
        x = xn
        if np.all(done):
            break
    else:
        raise RuntimeError("invert: Newton iteration did not converge")
    return float(x) if scalar else x


def phi_deriv(h: RegVarFunction, y, n: int = 1):
    """n-th derivative of phi = h^{-1} at y, n in 1..3."""
    if n not in (1, 2, 3):
        raise ValueError("derivative order must be 1, 2 or 3")
    y = np.asarray(y, dtype=float)
    if h.kind == "pow":
        g = 1.0 / h.c
        coef = np.prod([g - j for j in range(n)])
        return coef * h.Ch ** (-g) * y ** (g - n)
    x = invert(h, y)
    d1 = h.deriv(x, 1)
    if n == 1:
        return 1.0 / d1
    d2 = h.deriv(x, 2)
    if n == 2:
        return -d2 / d1 ** 3
    d3 = h.deriv(x, 3)
    return (3 * d2 ** 2 - d1 * d3) / d1 ** 5


def phi_theta(h: RegVarFunction, y, n: int = 1):
    """theta_n(y) = y phi^(n)(y) / phi^(n-1)(y) - (gamma - n + 1); tends to 0."""
    y = np.asarray(y, dtype=float)
    lower = invert(h, y) if n == 1 else phi_deriv(h, y, n - 1)
    return y * phi_deriv(h, y, n) / lower - (1.0 / h.c - n + 1)


# ---------------------------------------------------------------------------
# the floor-value set


@dataclass
class FloorSet:
    """``{floor(h(m)) : m >= start} ∩ [0, horizon]`` as list and bitmap."""

    source: RegVarFunction
    horizon: int
    elements: np.ndarray
    bitmap: np.ndarray

    def __len__(self):
        return len(self.elements)

    def __contains__(self, n) -> bool:
        return 0 <= n <= self.horizon and bool(self.bitmap[n])


def floor_set(h: RegVarFunction, horizon: int) -> FloorSet:
    horizon = int(horizon)
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    N0 = h.N0
    if horizon < floor_h(h, N0):
        elements = np.zeros(0, dtype=np.int64)
    else:
        m_hi = int(math.floor(invert(h, float(horizon + 1)))) + 2
        ms = np.arange(N0, max(m_hi, N0) + 1, dtype=np.int64)
        vals = floor_h_array(h, ms)
        elements = vals[vals <= horizon]
    if np.any(np.diff(elements) <= 0):
        raise AssertionError("floor values are not strictly increasing past N0")
    bitmap = np.zeros(horizon + 1, dtype=bool)
    bitmap[elements] = True
    return FloorSet(h, horizon, elements, bitmap)


def member(h: RegVarFunction, n: int) -> bool:
    """Is ``n = floor(h(m))`` for some ``m >= N0``?"""
    n = int(n)
    if n < 1 or n < floor_h(h, h.N0):
        return False
    if h.exact:
        m = max(ceil_root(n, h.exponent), h.N0)
        return floor_pow(m, h.exponent) == n
    # floor(h(m)) = n iff phi(n) <= m < phi(n+1): test the integers next to phi(n)
    guess = math.ceil(invert(h, float(n)))
    for m in (guess - 1, guess, guess + 1):
        if m >= h.N0 and floor_h(h, m) == n:
            return True
    return False


def choose_N0(h: RegVarFunction, verify: int = 10_000, cap: int = 10 ** 7) -> int:
    """Least N with h' >= 1 on [N, oo) and m -> floor(h(m)) injective from N on."""
    N = max(1, math.ceil(h.x0))
    # h' is increasing on the domain, so the first integer with h' >= 1 works from there on
    while h.deriv(float(N), 1) < 1.0:
        N += 1
        if N > cap:
            raise ValueError("no N0 below the cap: h' stays below 1")
    while True:
        ms = np.arange(N, N + verify + 1, dtype=np.int64)
        vals = floor_h_array(h, ms)
        bad = np.flatnonzero(np.diff(vals) <= 0)
        if bad.size == 0:
            return N
        N = int(ms[bad[-1] + 1])
        if N > cap:
            raise ValueError("no N0 below the cap: floors keep colliding")


# ---------------------------------------------------------------------------
# catalog strings

_ALLOWED = {
    "pow": {"c", "Ch", "N0"},
    "logpow": {"c", "beta", "Ch", "x0", "N0"},
    "xlogx": {"x0", "N0"},
}


def parse_function(text: str) -> RegVarFunction:
    """Parse ``"pow:c=21/20"``, ``"logpow:c=3/2,beta=1,Ch=1"`` or ``"xlogx"``."""
    kind, _, rest = text.strip().partition(":")
    if kind not in _ALLOWED:
        raise ValueError(f"unknown function kind {kind!r}")
    opts = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or key not in _ALLOWED[kind]:
                raise ValueError(f"unknown or malformed key {item!r} for {kind}")
            if key in opts:
                raise ValueError(f"duplicate key {key!r}")
            opts[key] = val.strip()
    kw = {}
    if "Ch" in opts:
        kw["Ch"] = float(opts["Ch"])
    if "N0" in opts:
        kw["N0"] = int(opts["N0"])
    if "x0" in opts:
        kw["x0"] = float(opts["x0"])
    if kind == "pow":
        if "c" not in opts:
            raise ValueError("pow needs c=p/q")
        return RegVarFunction.power(RationalExponent.parse(opts["c"]), **kw)
    if kind == "logpow":
        if "c" not in opts or "beta" not in opts:
            raise ValueError("logpow needs c and beta")
        return RegVarFunction.logpower(RationalExponent.parse(opts["c"]),
                                       float(opts["beta"]), **kw)
    return RegVarFunction.xlogx(**kw)


def floors_of(h: RegVarFunction, ms: Iterable[int]) -> list:
    return [floor_h(h, m) for m in ms]
