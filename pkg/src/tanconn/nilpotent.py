"""Arithmetic in the truncated algebra R[e_1..e_n]/(e_i^2).

Values are arrays whose axis 0 runs over the ``2**n`` subset monomials (mask
order) and whose remaining axes are elementwise.  Smooth functions are
applied through their Taylor series about the constant term; since the
non-constant part is nilpotent of order n+1 the series is exact.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .errors import DomainError

mul = _kernels.subset_mul


def depth(a: np.ndarray) -> int:
    return a.shape[0].bit_length() - 1


def _series(a: np.ndarray, coeffs: list[np.ndarray]) -> np.ndarray:
    """sum_k coeffs[k] * (a - a0)^k with coeffs already divided by k!."""
    out = np.zeros_like(a)
    out[0] = coeffs[0]
    if a.shape[0] == 1:
        return out
    delta = a.copy()
    delta[0] = 0.0
    power = delta
    for k in range(1, len(coeffs)):
        out = out + coeffs[k] * power
        if k + 1 < len(coeffs):
            power = mul(power, delta)
    return out


def sin(a: np.ndarray) -> np.ndarray:
    n = depth(a)
    s, c = np.sin(a[0]), np.cos(a[0])
    cycle = [s, c, -s, -c]
    return _series(a, [cycle[k % 4] / math.factorial(k) for k in range(n + 1)])


def cos(a: np.ndarray) -> np.ndarray:
    n = depth(a)
    s, c = np.sin(a[0]), np.cos(a[0])
    cycle = [c, -s, -c, s]
    return _series(a, [cycle[k % 4] / math.factorial(k) for k in range(n + 1)])


def exp(a: np.ndarray) -> np.ndarray:
    n = depth(a)
    e = np.exp(a[0])
    return _series(a, [e / math.factorial(k) for k in range(n + 1)])


def sqrt(a: np.ndarray, node: object = None, eps: float = 0.0) -> np.ndarray:
    n = depth(a)
    a0 = a[0]
    if np.any(a0 < 0) or (n > 0 and np.any(a0 <= eps)):
        raise DomainError(f"sqrt of non-positive value {float(np.min(a0))!r}", node)
    coeffs = []
    binom = 1.0
    for k in range(n + 1):
        coeffs.append(binom * a0 ** (0.5 - k))
        binom *= (0.5 - k) / (k + 1)
    return _series(a, coeffs)


def recip(a: np.ndarray, node: object = None, eps: float = 1e-300) -> np.ndarray:
    n = depth(a)
    a0 = a[0]
    if np.any(np.abs(a0) <= eps):
        raise DomainError("division by a value that is ~0", node)
    inv = 1.0 / a0
    coeffs = [(-1.0) ** k * inv ** (k + 1) for k in range(n + 1)]
    return _series(a, coeffs)


def power(a: np.ndarray, k: int, node: object = None) -> np.ndarray:
    if k < 0:
        return power(recip(a, node), -k, node)
    out = np.zeros_like(a)
    out[0] = 1.0
    base = a
    while k:
        if k & 1:
            out = mul(out, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return out
