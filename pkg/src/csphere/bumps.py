"""Smooth plateau functions used as cutoffs.

Every bump is assembled from the C-infinity step

    S(u) = f(u) / (f(u) + f(1 - u)),   f(u) = exp(-1/u) for u > 0, else 0,

which is 0 for u <= 0, 1 for u >= 1 and flat to all orders at both ends.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["smooth_step", "smooth_step_deriv", "plateau", "plateau_deriv", "Bump", "BumpConfig"]


def smooth_step(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f0 = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        f1 = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1 - u, 1.0)), 0.0)
        return f0 / (f0 + f1)


def smooth_step_deriv(u):
    """S'(u) = S(u) (1 - S(u)) (1/u^2 + 1/(1 - u)^2), zero off (0, 1)."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    uu = np.where(inside, u, 0.5)
    S = smooth_step(uu)
    return np.where(inside, S * (1 - S) * (1 / uu ** 2 + 1 / (1 - uu) ** 2), 0.0)


def plateau(x, inner: float, outer: float):
    """Even bump equal to 1 on |x| <= inner and 0 on |x| >= outer."""
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    x = np.abs(np.asarray(x, dtype=float))
    return smooth_step((outer - x) / (outer - inner))


def plateau_deriv(x, inner: float, outer: float):
    """Derivative of ``plateau`` in x."""
    x = np.asarray(x, dtype=float)
    w = outer - inner
    return -np.sign(x) * smooth_step_deriv((outer - np.abs(x)) / w) / w


@dataclass(frozen=True)
class Bump:
    """An even plateau bump with its two radii."""

    inner: float
    outer: float

    def __call__(self, x):
        return plateau(x, self.inner, self.outer)

    def deriv(self, x):
        return plateau_deriv(x, self.inner, self.outer)

    @property
    def support(self) -> float:
        return self.outer


@dataclass(frozen=True)
class BumpConfig:
    """The pair (eta_j, psi) for exponent c.

    ``psi`` equals 1 on |t| <= 1/(2c) and vanishes from ``psi_outer`` on, just
    inside 1/2.  Each factor ``eta_j`` equals 1 on |x| <= 4^(1/c), so the
    product is 1 wherever |x|_c^c <= 4, and vanishes from 10 on.
    """

    c: float
    psi_gap: float = 0.05
    eta_outer: float = 10.0

    @property
    def psi(self) -> Bump:
        p = 1.0 / (2 * self.c)
        return Bump(p, 0.5 - self.psi_gap * (0.5 - p))

    @property
    def eta_1d(self) -> Bump:
        return Bump(4.0 ** (1.0 / self.c), self.eta_outer)

    def eta(self, x):
        x = np.asarray(x, dtype=float)
        e = self.eta_1d
        return e(x[..., 0]) * e(x[..., 1]) * e(x[..., 2])

    def metadata(self) -> dict:
        return {"psi_inner": self.psi.inner, "psi_outer": self.psi.outer,
                "eta_inner": self.eta_1d.inner, "eta_outer": self.eta_1d.outer,
                "step": "exp(-1/u) smooth step"}
