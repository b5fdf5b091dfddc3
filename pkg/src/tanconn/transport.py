"""Dynamical systems, curve objects, fixed-step integration and parallel transport.

The curve object is an interval [a, b] containing 0 with the unit field
c1(t) = (1, t).  A solution of a system (M, x0, x1) is approximated by
classical RK4 (or explicit Euler) from t = 0 outwards in both directions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import DifferentialBundle, as_samples
from .connection import Connection
from .errors import BasePointMismatch, LoopNotClosed, NonFiniteState, PreconditionFailed
from .report import Report, compare, item_from_rows, row_residuals
from .smap.maps import (Linear, SmoothMap, block, compose, constant, flip_map, identity, p_map,
                        pair, tangent, tpair)
from .space import Euclidean, FibreProduct, Space, residuals
from . import tower as tw

TOL = 1e-8
DEFAULT_STEPS = 4096


@dataclass(frozen=True, eq=False)
class DynamicalSystem:
    space: Space
    x0: np.ndarray
    x1: SmoothMap  # M -> T(M)

    def velocity(self, x: np.ndarray) -> np.ndarray:
        """Points (last axis = coordinates) -> tangent vectors of the same shape."""
        x = np.asarray(x, dtype=float)
        rows = x.reshape(-1, x.shape[-1])
        return self.x1(rows)[:, :self.space.dim].reshape(x.shape)


@dataclass(frozen=True)
class CurveObject:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a <= 0.0 <= self.b or self.a == self.b:
            raise PreconditionFailed(f"interval [{self.a}, {self.b}] must contain 0 and be non-empty")

    @property
    def c1(self) -> SmoothMap:
        """t -> (1, t)."""
        return pair(constant([1.0], 1), identity(1), name="c1")

    @property
    def space(self) -> Euclidean:
        return Euclidean(1, name=f"[{self.a:g},{self.b:g}]")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    defects: np.ndarray
    method: str
    step: float
    extra: dict = field(default_factory=dict)

    def at(self, t: float) -> np.ndarray:
        return self.states[int(np.argmin(np.abs(self.times - t)))]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def initial(self) -> np.ndarray:
        return self.states[int(np.argmin(np.abs(self.times)))]


def integrate(f, x0: np.ndarray, t0: float, t1: float, steps: int, method: str = "rk4"):
    """Fixed-step integration of x' = f(t, x); returns (times, states).

    ``x0`` may hold a batch of initial states (one per row).
    """
    h = (t1 - t0) / steps
    xs = np.empty((steps + 1,) + np.shape(x0))
    xs[0] = x = np.asarray(x0, dtype=float)
    ts = t0 + h * np.arange(steps + 1)
    for i in range(steps):
        t = ts[i]
        if method == "rk4":
            k1 = f(t, x)
            k2 = f(t + h / 2, x + h / 2 * k1)
            k3 = f(t + h / 2, x + h / 2 * k2)
            k4 = f(t + h, x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        elif method == "euler":
            x = x + h * f(t, x)
        else:
            raise ValueError(f"unknown method {method!r}")
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"state became non-finite at t={ts[i + 1]:.6g} (node {i + 1})",
                                 node=i + 1)
        xs[i + 1] = x
    return ts, xs


def _defects(times: np.ndarray, states: np.ndarray, velocity) -> np.ndarray:
    """|finite-difference derivative - field| at each node."""
    if len(times) < 3:
        return np.zeros(len(times))
    deriv = np.gradient(states, times, axis=0, edge_order=2)
    err = np.abs(deriv - velocity(times, states))
    return err.reshape(len(times), -1).max(axis=1)


def solve(d: DynamicalSystem, curve: CurveObject = CurveObject(), steps: int = DEFAULT_STEPS,
          method: str = "rk4", time_dependent=None) -> Trajectory:
    """Approximate the homomorphism from the curve object into (M, x0, x1)."""
    if steps < 1:
        raise PreconditionFailed("steps must be >= 1")
    f = time_dependent or (lambda t, x: d.velocity(x))
    x0 = np.asarray(d.x0, dtype=float)
    span = curve.b - curve.a
    n_neg = int(round(steps * -curve.a / span)) if curve.a < 0 else 0
    n_pos = steps - n_neg if curve.b > 0 else 0
    if curve.a < 0 and n_neg == 0:
        n_neg, n_pos = 1, max(steps - 1, 1 if curve.b > 0 else 0)
    parts_t, parts_x = [], []
    if n_neg:
        t, x = integrate(f, x0, 0.0, curve.a, n_neg, method)
        parts_t.append(t[::-1][:-1])
        parts_x.append(x[::-1][:-1])
    if n_pos:
        t, x = integrate(f, x0, 0.0, curve.b, n_pos, method)
    else:
        t, x = np.array([0.0]), x0[None]
    parts_t.append(t)
    parts_x.append(x)
    times, states = np.concatenate(parts_t), np.concatenate(parts_x)
    if time_dependent is None:
        vel = lambda ts, xs: d.velocity(xs)
    else:
        vel = lambda ts, xs: np.array([f(ti, xi) for ti, xi in zip(ts, xs)])
    return Trajectory(times, states, _defects(times, states, vel), method, span / steps)


def check_linear_system(d: DynamicalSystem, m: DifferentialBundle, b: SmoothMap, samples=None,
                        tol: float = TOL) -> Report:
    """(x1, b) is a linear morphism m -> T(m): x1 T(l) c = l T(x1) and x1 T(q) = q b."""
    if m.total.dim != d.space.dim:
        raise PreconditionFailed("the bundle's total space must be the system's state space")
    s = as_samples(samples)
    pts = s(d.space)
    k = m.k
    rep = Report("linear system", tol)
    rep.items.append(compare("x1T(l)c=lT(x1)", compose(d.x1, tangent(m.lift), flip_map(k, 2)),
                             compose(m.lift, tangent(d.x1)), pts, tol))
    rep.items.append(compare("x1T(q)=qb", compose(d.x1, tangent(m.q)), compose(m.q, b), pts, tol))
    return rep


# -- parallel transport -------------------------------------------------------------

def transport_system(c: Connection, gamma: SmoothMap, e0, curve: CurveObject) -> DynamicalSystem:
    """(C x_M E, <c0, e0>, F) with F = <pi0 c1, <pi0 c1 T(gamma), pi1> H>."""
    b = c.bundle
    k = b.k
    if gamma.in_dim != 1 or gamma.out_dim != b.m:
        raise PreconditionFailed(f"curve must map R^1 -> R^{b.m}")
    space = FibreProduct(curve.space, gamma, b.total, b.q)
    dims = [1, k]
    pt, pe = block(dims, 0), block(dims, 1)
    ct = compose(pt, curve.c1)
    F = tpair(1, ct, compose(pair(compose(ct, tangent(gamma)), pe), c.H), dims=[1, k])
    e0 = np.asarray(e0, dtype=float)
    x0 = np.concatenate([np.zeros(e0.shape[:-1] + (1,)), e0], axis=-1)
    return DynamicalSystem(space, x0, F)


def parallel_transport(c: Connection, gamma: SmoothMap, e0, curve: CurveObject = None,
                       steps: int = DEFAULT_STEPS, method: str = "rk4", tol: float = TOL) -> Trajectory:
    curve = curve or CurveObject(0.0, 2 * math.pi)
    b = c.bundle
    if gamma.in_dim != 1 or gamma.out_dim != b.m:
        raise PreconditionFailed(f"curve must map R^1 -> R^{b.m}")
    e0 = np.asarray(getattr(e0, "coords", e0), dtype=float)
    gap = np.max(np.abs(b.q(e0) - gamma([0.0])), initial=0.0)
    if gap > tol:
        raise BasePointMismatch(f"e0 lies over {b.q(e0).tolist()}, curve starts at "
                                f"{gamma([0.0]).tolist()} (gap {gap:.3e})")
    d = transport_system(c, gamma, e0, curve)
    traj = solve(d, curve, steps, method)
    traj.extra["system"] = d
    return traj


def lifted_curve(traj: Trajectory) -> np.ndarray:
    """The E-component of each node."""
    return traj.states[..., 1:]


def verify_parallel(c: Connection, gamma: SmoothMap, e0, traj: Trajectory, tol: float = 1e-6) -> Report:
    """Residuals of the three defining conditions of the transported curve."""
    b = c.bundle
    e = lifted_curve(traj)
    t = traj.times[:, None]
    rep = Report("parallel transport", tol)
    rep.items.append(item_from_rows("(i) c0 g^ = e0", row_residuals(traj.initial[None, 1:],
                                                                   np.asarray(e0)[None]),
                                    traj.initial[None], tol))
    rep.items.append(item_from_rows("(ii) g^q = g", row_residuals(b.q(e), gamma(t)), traj.states, tol))
    deriv = _five_point(e, traj.times)
    xi = np.hstack([deriv, e])
    rep.items.append(item_from_rows("(iii) nabla(c1, g^) = g 0", row_residuals(c.K(xi), b.zero(gamma(t))),
                                    traj.states, tol))
    res = residuals(b.total, e.T[None])[0]
    fibre = np.max(np.abs(res), axis=0) if res.shape[0] else np.zeros(len(e))
    rep.items.append(item_from_rows("fibre constraint", fibre, traj.states, tol))
    return rep


def _five_point(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Fourth-order derivative on a uniform grid (one-sided at the ends)."""
    h = t[1] - t[0]
    n = len(y)
    d = np.empty_like(y)
    if n < 5:
        return np.gradient(y, t, axis=0)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return d


def holonomy(c: Connection, loop: SmoothMap, e0, curve: CurveObject = None,
             steps: int = DEFAULT_STEPS, frame=None, tol: float = 1e-8, method: str = "rk4"):
    """Transport e0 around a closed loop; returns (returned point of E, angle or None).

    ``frame`` is a pair of orthonormal fibre vectors (fibre coordinates) at
    the base point; the angle is measured from e0 to the returned vector.
    """
    curve = curve or CurveObject(0.0, 2 * math.pi)
    gap = np.max(np.abs(loop([curve.a]) - loop([curve.b])))
    if gap > tol:
        raise LoopNotClosed(f"loop endpoints differ by {gap:.3e}")
    traj = parallel_transport(c, loop, e0, curve, steps, method)
    ret = lifted_curve(traj)[-1]
    angle = None
    if frame is not None:
        fib = list(c.bundle.fibre)
        f1, f2 = (np.asarray(v, dtype=float) for v in frame)
        v0, v1 = np.asarray(e0, dtype=float)[fib], ret[fib]
        angle = math.atan2(v1 @ f2, v1 @ f1) - math.atan2(v0 @ f2, v0 @ f1)
        angle = (angle + math.pi) % (2 * math.pi) - math.pi
    return ret, angle


def latitude(theta0: float) -> SmoothMap:
    """t -> (sin th cos t, sin th sin t, cos th)."""
    from .smap.expr import Binary, Num, Unary, Var
    from .smap.maps import ExprMap
    st, t = Num(math.sin(theta0)), Var(0)
    return ExprMap([Binary("*", st, Unary("cos", t)), Binary("*", st, Unary("sin", t)),
                    Num(math.cos(theta0))], 1, name="latitude")


def order_estimate(errors) -> float:
    """Observed order from errors at successively doubled step counts."""
    e = np.asarray(errors, dtype=float)
    return float(np.mean(np.log2(e[:-1] / e[1:])))
