"""Exact integer convolution by number-theoretic transforms.

Three NTT-friendly primes are combined with Garner's algorithm, so any
convolution whose true entries are below about 2^63 is reproduced exactly.
All modular products stay below 2^60 and fit in int64.
"""
from __future__ import annotations

import numpy as np

PRIMES = (998244353, 167772161, 469762049)
GENERATOR = 3


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _ntt(a: np.ndarray, p: int, invert: bool = False) -> np.ndarray:
    n = a.size
    a = a[_bit_reverse(n)] % p
    length = 2
    while length <= n:
        w = pow(GENERATOR, (p - 1) // length, p)
        if invert:
            w = pow(w, p - 2, p)
        half = length // 2
        # twiddles w^0..w^(half-1), built by repeated doubling to stay exact
        tw = np.ones(half, dtype=np.int64)
        step = 1
        cur = w
        while step < half:
            tw[step:2 * step] = tw[:step] * cur % p
            cur = cur * cur % p
            step *= 2
        blocks = a.reshape(-1, length)
        u = blocks[:, :half].copy()
        v = blocks[:, half:] * tw % p
        blocks[:, :half] = (u + v) % p
        blocks[:, half:] = (u - v) % p
        length *= 2
    if invert:
        a = a * pow(n, p - 2, p) % p
    return a


def convolve_mod(a: np.ndarray, b: np.ndarray, p: int, size: int) -> np.ndarray:
    """Cyclic convolution modulo ``p`` of length ``size`` (a power of two)."""
    fa = _ntt(np.pad(a % p, (0, size - a.size)), p)
    fb = _ntt(np.pad(b % p, (0, size - b.size)), p)
    return _ntt(fa * fb % p, p, invert=True)


def convolve_exact(a, b) -> np.ndarray:
    """Exact linear convolution of two nonnegative int64 vectors.

    The result must fit in int63; the caller is responsible for that bound
    (counts of lattice points always do at desk scale).
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return np.zeros(0, dtype=np.int64)
    if a.min() < 0 or b.min() < 0:
        raise ValueError("convolve_exact expects nonnegative inputs")
    out_len = a.size + b.size - 1
    size = 1 << (out_len - 1).bit_length()
    if size > 1 << 23:
        raise ValueError("transform length exceeds the NTT primes' capacity")
    residues = [convolve_mod(a, b, p, size)[:out_len] for p in PRIMES]
    p1, p2, p3 = PRIMES
    r1, r2, r3 = residues
    # Garner: x = r1 + p1*k2 + p1*p2*k3
    inv_p1_mod_p2 = pow(p1, p2 - 2, p2)
    k2 = (r2 - r1) % p2 * inv_p1_mod_p2 % p2
    p1p2_mod_p3 = p1 * p2 % p3
    inv_p1p2_mod_p3 = pow(p1p2_mod_p3, p3 - 2, p3)
    t = (r1 % p3 + (p1 % p3) * k2 % p3) % p3
    k3 = (r3 - t) % p3 * inv_p1p2_mod_p3 % p3
    # assemble modulo 2^64; the true value is below 2^63 so the wrap is harmless
    x = r1.astype(np.uint64)
    x = x + np.uint64(p1) * k2.astype(np.uint64)
    x = x + np.uint64(p1 * p2 % (1 << 64)) * k3.astype(np.uint64)
    return x.astype(np.int64)
