"""Hot loops, compiled with numba when available.

Set ``TANCONN_NUMBA=0`` in the environment to force the pure-numpy
implementations.  Both variants are always importable under explicit names
so the benchmark and the tests can compare them.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("TANCONN_NUMBA", "1") != "0"


def subset_mul_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product in the algebra R[e_1..e_n]/(e_i^2) along axis 0.

    ``a`` and ``b`` have shape (2**n, m); row S holds the coefficient of the
    monomial prod_{i in S} e_i.
    """
    n_rows = a.shape[0]
    out = np.zeros_like(a)
    for s in range(n_rows):
        t = s
        while True:
            out[s] += a[t] * b[s ^ t]
            if t == 0:
                break
            t = (t - 1) & s
    return out


def _subset_mul_loop(a, b):
    n_rows, m = a.shape
    out = np.zeros((n_rows, m))
    for s in range(n_rows):
        t = s
        while True:
            u = s ^ t
            for j in range(m):
                out[s, j] += a[t, j] * b[u, j]
            if t == 0:
                break
            t = (t - 1) & s
    return out


def sphere_transport_numpy(theta0: float, e0: np.ndarray, steps: int, method: str) -> np.ndarray:
    """Parallel transport around the circle of colatitude ``theta0`` on S^2.

    Integrates the classical equation V' = -(gamma'.V) gamma over t in [0, 2pi]
    with gamma(t) = (sin th cos t, sin th sin t, cos th).  This is an
    independent reference used only to cross-check the general machinery.
    """
    return _sphere_transport_py(theta0, float(e0[0]), float(e0[1]), float(e0[2]),
                                steps, 1 if method == "rk4" else 0)


def _sphere_transport_py(theta0, v0, v1, v2, steps, rk4):
    st = math.sin(theta0)
    ct = math.cos(theta0)
    h = 2.0 * math.pi / steps

    def field(t, a, b, c):
        g0, g1, g2 = st * math.cos(t), st * math.sin(t), ct
        d0, d1 = -st * math.sin(t), st * math.cos(t)
        s = d0 * a + d1 * b
        return -s * g0, -s * g1, -s * g2

    a, b, c = v0, v1, v2
    for k in range(steps):
        t = k * h
        if rk4:
            k1 = field(t, a, b, c)
            k2 = field(t + 0.5 * h, a + 0.5 * h * k1[0], b + 0.5 * h * k1[1], c + 0.5 * h * k1[2])
            k3 = field(t + 0.5 * h, a + 0.5 * h * k2[0], b + 0.5 * h * k2[1], c + 0.5 * h * k2[2])
            k4 = field(t + h, a + h * k3[0], b + h * k3[1], c + h * k3[2])
            a += h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
            b += h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
            c += h * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]) / 6.0
        else:
            f = field(t, a, b, c)
            a += h * f[0]
            b += h * f[1]
            c += h * f[2]
    return np.array([a, b, c])


if _HAVE_NUMBA:
    _subset_mul_jit = njit(cache=True)(_subset_mul_loop)

    @njit(cache=True)
    def _sphere_transport_jit(theta0, v0, v1, v2, steps, rk4):
        st = math.sin(theta0)
        ct = math.cos(theta0)
        h = 2.0 * math.pi / steps
        a, b, c = v0, v1, v2
        k = np.empty((4, 3))
        for i in range(steps):
            t = i * h
            n_stage = 4 if rk4 else 1
            for stage in range(n_stage):
                if stage == 0:
                    ts, xa, xb = t, a, b
                elif stage < 3:
                    ts = t + 0.5 * h
                    xa = a + 0.5 * h * k[stage - 1, 0]
                    xb = b + 0.5 * h * k[stage - 1, 1]
                else:
                    ts = t + h
                    xa = a + h * k[2, 0]
                    xb = b + h * k[2, 1]
                s = -st * math.sin(ts) * xa + st * math.cos(ts) * xb
                k[stage, 0] = -s * st * math.cos(ts)
                k[stage, 1] = -s * st * math.sin(ts)
                k[stage, 2] = -s * ct
            if rk4:
                a += h * (k[0, 0] + 2 * k[1, 0] + 2 * k[2, 0] + k[3, 0]) / 6.0
                b += h * (k[0, 1] + 2 * k[1, 1] + 2 * k[2, 1] + k[3, 1]) / 6.0
                c += h * (k[0, 2] + 2 * k[1, 2] + 2 * k[2, 2] + k[3, 2]) / 6.0
            else:
                a += h * k[0, 0]
                b += h * k[0, 1]
                c += h * k[0, 2]
        return np.array([a, b, c])

    def subset_mul_numba(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return _subset_mul_jit(np.ascontiguousarray(a, dtype=np.float64),
                               np.ascontiguousarray(b, dtype=np.float64))

    def sphere_transport_numba(theta0: float, e0: np.ndarray, steps: int, method: str) -> np.ndarray:
        return _sphere_transport_jit(float(theta0), float(e0[0]), float(e0[1]), float(e0[2]),
                                     int(steps), method == "rk4")
else:  # pragma: no cover
    subset_mul_numba = None
    sphere_transport_numba = None


def subset_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dispatching product; arrays of any trailing shape (broadcast first)."""
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    if shape[0] == 1:
        return a * b
    a2 = a.reshape(shape[0], -1)
    b2 = b.reshape(shape[0], -1)
    if USE_NUMBA:
        out = subset_mul_numba(a2, b2)
    else:
        out = subset_mul_numpy(a2, b2)
    return out.reshape(shape)


def sphere_transport(theta0: float, e0: np.ndarray, steps: int, method: str = "euler") -> np.ndarray:
    if USE_NUMBA:
        return sphere_transport_numba(theta0, e0, steps, method)
    return sphere_transport_numpy(theta0, e0, steps, method)
