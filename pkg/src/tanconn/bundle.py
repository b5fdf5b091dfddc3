"""Differential bundles: data, axiom checks, the lift bracket and constructions.

A bundle over ``base`` with total space ``total`` is given by the projection
``q``, the fibrewise sum ``plus`` on E2 = E x_M E (pairs stored side by
side), the zero section and the lift ``lift: E -> T(E)``.  In every
construction of this module the points of one fibre share all coordinates
except those listed in ``fibre``; the bracket solve uses exactly those.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import nilpotent as nil
from .errors import DimensionMismatch, PreconditionFailed, RankDeficient, SolveFailed
from .report import Report, ReportItem, compare, item_from_rows, row_residuals
from .smap.maps import (Linear, SmoothMap, add_map, block, compose, identity, interchange,
                        lift_map, p_map, pair, select, tangent, tpair, zero_map)
from .space import Euclidean, FibreProduct, Space, TangentSpace, sample_array

RANK_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class DifferentialBundle:
    total: Space
    base: Space
    q: SmoothMap
    plus: SmoothMap
    zero: SmoothMap
    lift: SmoothMap
    fibre: tuple
    name: str = ""

    def __post_init__(self):
        k, m = self.total.dim, self.base.dim
        shapes = {"q": (self.q, k, m), "plus": (self.plus, 2 * k, k),
                  "zero": (self.zero, m, k), "lift": (self.lift, k, 2 * k)}
        for label, (f, i, o) in shapes.items():
            if (f.in_dim, f.out_dim) != (i, o):
                raise DimensionMismatch(f"{label} has shape {f.in_dim}->{f.out_dim}, expected {i}->{o}")

    @property
    def k(self) -> int:
        return self.total.dim

    @property
    def m(self) -> int:
        return self.base.dim

    @cached_property
    def e2(self) -> FibreProduct:
        return FibreProduct(self.total, self.q, self.total, self.q, name=f"{self.total!r}_2")

    @cached_property
    def e3(self) -> FibreProduct:
        return FibreProduct(self.e2, compose(block([self.k, self.k], 0), self.q),
                            self.total, self.q, name=f"{self.total!r}_3")

    @cached_property
    def mu(self) -> SmoothMap:
        """E2 -> T(E), (e0, e1) -> T(+)(lift e0, 0 e1)."""
        k = self.k
        return compose(tpair(1, compose(block([k, k], 0), self.lift),
                             compose(block([k, k], 1), zero_map(k))),
                       tangent(self.plus), name="mu")

    @cached_property
    def neg(self) -> Linear:
        d = np.ones(self.k)
        d[list(self.fibre)] = -1.0
        return Linear(np.diag(d), name="neg")

    def sub(self, f: SmoothMap, g: SmoothMap) -> SmoothMap:
        """f - g in the q-fibre; f and g land in E over the same base point."""
        return compose(pair(f, compose(g, self.neg)), self.plus)

    def add(self, f: SmoothMap, g: SmoothMap) -> SmoothMap:
        return compose(pair(f, g), self.plus)

    def zero_over(self, f: SmoothMap) -> SmoothMap:
        """The zero of the fibre over q(f)."""
        return compose(f, self.q, self.zero)

    @cached_property
    def horizontal_domain(self) -> FibreProduct:
        """T(M) x_M E, stored as (t, e)."""
        return FibreProduct(TangentSpace(self.base), p_map(self.m), self.total, self.q,
                            name=f"T({self.base!r}) x {self.total!r}")

    @cached_property
    def tangent_total(self) -> TangentSpace:
        return TangentSpace(self.total)

    @cached_property
    def U(self) -> SmoothMap:
        """<T(q), p>: T(E) -> T(M) x_M E."""
        return pair(tangent(self.q), p_map(self.k), name="U")

    @cached_property
    def fibre_inclusion(self) -> np.ndarray:
        inj = np.zeros((self.k, len(self.fibre)))
        for j, i in enumerate(self.fibre):
            inj[i, j] = 1.0
        return inj

    def __repr__(self):
        return self.name or f"bundle over {self.base!r}"


@dataclass(frozen=True, eq=False)
class LinearMorphism:
    f1: SmoothMap
    f0: SmoothMap
    src: DifferentialBundle
    dst: DifferentialBundle


class Samples:
    """Seeded sample arrays, cached per (space, depth)."""

    def __init__(self, seed: int = 42, count: int = 64):
        self.seed = seed
        self.count = count
        self._cache: dict = {}

    def __call__(self, space: Space, depth: int = 0) -> np.ndarray:
        key = (id(space), depth)
        if key not in self._cache:
            self._cache[key] = (space, sample_array(space, depth, self.seed, self.count))
        return self._cache[key][1]


def as_samples(samples) -> Samples:
    if isinstance(samples, Samples):
        return samples
    if samples is None:
        return Samples()
    return Samples(count=int(samples))


# -- the bracket ---------------------------------------------------------------

def _tower_solve(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Least squares J z = r over the subset algebra.

    jac: (N, rows, B, d); rhs: (N, rows, B).  Normal equations are formed and
    solved component by component in increasing mask order.
    """
    n_rows = jac.shape[0]
    jt = np.swapaxes(jac, 1, 3)  # (N, d, B, rows)
    gram = np.zeros((n_rows, jac.shape[3], jac.shape[2], jac.shape[3]))  # (N, d, B, d)
    h = np.zeros((n_rows, jac.shape[3], jac.shape[2]))
    for s in range(n_rows):
        t = s
        while True:
            u = s ^ t
            gram[s] += np.einsum("ibr,rbj->ibj", jt[t], jac[u])
            h[s] += np.einsum("ibr,rb->ib", jt[t], rhs[u])
            if t == 0:
                break
            t = (t - 1) & s
    g0 = np.transpose(gram[0], (1, 0, 2))  # (B, d, d)
    z = np.zeros_like(h)
    for s in range(n_rows):
        acc = h[s].copy()
        t = s
        while t:
            acc -= np.einsum("ibj,jb->ib", gram[t], z[s ^ t])
            t = (t - 1) & s
        z[s] = np.linalg.solve(g0, acc.T[:, :, None])[:, :, 0].T
    return z


class BracketMap(SmoothMap):
    """{f}: X -> E for f: X -> T(E) with f T(q) = f p q 0, by solving mu(e2) = f.

    Works on towers of any depth: the fibrewise-linear system is solved in
    the subset algebra, so T^n({f}) is exact like every other map.
    """

    def __init__(self, bundle: DifferentialBundle, f: SmoothMap, tol: float = 1e-8, name: str = ""):
        if f.out_dim != 2 * bundle.k:
            raise DimensionMismatch(f"bracket needs a map into T(E) of width {2 * bundle.k}")
        self.bundle = bundle
        self.f = f
        self.tol = tol
        self.in_dim = f.in_dim
        self.out_dim = bundle.k
        self.name = name or f"{{{f.label()}}}"

    def solve(self, x: np.ndarray):
        b = self.bundle
        k, d = b.k, len(b.fibre)
        xi = self.f.evaluate(x)
        rest = xi.shape[2:]
        xi = xi.reshape(xi.shape[0], xi.shape[1], -1)
        n_rows, batch = xi.shape[0], xi.shape[2]
        e_b = xi[:, k:]
        keep = np.ones(k)
        keep[list(b.fibre)] = 0.0
        e_a0 = keep[None, :, None] * e_b
        arg = np.concatenate([e_a0, e_b], axis=1)
        seeded = np.zeros((2 * n_rows, 2 * k, batch, d))
        seeded[:n_rows] = arg[..., None]
        seeded[n_rows, :k] = b.fibre_inclusion[:, None, :]
        out = b.mu.evaluate(seeded)
        mu0 = out[:n_rows, :, :, 0]
        jac = out[n_rows:]
        r = xi - mu0
        z = _tower_solve(jac, r)
        resid = np.zeros_like(r)
        for j in range(d):
            resid += nil.mul(jac[..., j], z[:, j][:, None, :])
        resid -= r
        scale = max(1.0, float(np.max(np.abs(xi))))
        err = float(np.max(np.abs(resid), initial=0.0))
        if not np.isfinite(err) or err > self.tol * scale:
            raise SolveFailed(f"bracket of {self.f.label()}: residual {err:.3e} exceeds {self.tol:g}")
        e_a = e_a0 + np.einsum("kj,njb->nkb", b.fibre_inclusion, z)
        return (e_a.reshape((n_rows, k) + rest), e_b.reshape((n_rows, k) + rest), err)

    def evaluate(self, x):
        return self.solve(x)[0]


def equalizer_residual(b: DifferentialBundle, f: SmoothMap, points: np.ndarray) -> np.ndarray:
    """Row-wise |f T(q) - f p q 0| at ``points``."""
    lhs = compose(f, tangent(b.q))
    rhs = compose(f, p_map(b.k), b.q, zero_map(b.m))
    return row_residuals(lhs(points), rhs(points))


def bracket(b: DifferentialBundle, f: SmoothMap, x, tol: float = 1e-8):
    """({f}(x), f_|mu(x)) at a point or batch of points."""
    pts = np.atleast_2d(np.asarray(getattr(x, "coords", x), dtype=float))
    pre = equalizer_residual(b, f, pts)
    if np.max(pre) > tol:
        raise PreconditionFailed(f"f T(q) != f p q 0: residual {np.max(pre):.3e}")
    e_a, e_b, _ = BracketMap(b, f, tol).solve(pts.T[None])
    e_a, e_b = e_a[0].T, e_b[0].T
    e2 = np.hstack([e_a, e_b])
    if np.ndim(getattr(x, "coords", x)) == 1:
        return e_a[0], e2[0]
    return e_a, e2


def bracket_map(b: DifferentialBundle, f: SmoothMap, tol: float = 1e-8, name: str = "") -> BracketMap:
    return BracketMap(b, f, tol, name)


# -- checks --------------------------------------------------------------------

def universality_check(b: DifferentialBundle, samples=None, tol: float = RANK_TOL,
                       raise_on_fail: bool = False) -> Report:
    s = as_samples(samples)
    pts = s(b.e2)
    k, d = b.k, len(b.fibre)
    x = np.zeros((2, 2 * k, len(pts), d))
    x[0] = pts.T[..., None]
    x[1, :k] = b.fibre_inclusion[:, None, :]
    jac = np.transpose(b.mu.evaluate(x)[1], (1, 0, 2))  # (B, 2k, d)
    sv = np.linalg.svd(jac, compute_uv=False)
    scale = np.maximum(1.0, sv[:, 0]) if d else np.ones(len(pts))
    smin = sv[:, -1] / scale if d else np.ones(len(pts))
    j = int(np.argmin(smin))
    item = ReportItem("universality", float(smin[j]), pts[j].tolist(), bool(smin[j] >= tol),
                      kind="min_singular_value")
    if raise_on_fail and not item.passed:
        raise RankDeficient(f"mu is rank deficient in the fibre at {item.worst_point}: "
                            f"sigma_min {item.max_residual:.3e}")
    return Report("universality", tol, [item])


def check_bundle(b: DifferentialBundle, samples=None, tol: float = 1e-9) -> Report:
    s = as_samples(samples)
    k, m = b.k, b.m
    E, E2, E3, M = s(b.total), s(b.e2), s(b.e3), s(b.base)
    pi0, pi1 = block([k, k], 0), block([k, k], 1)
    one = identity(k)
    rep = Report(f"bundle {b!r}", tol)
    add = rep.items.append

    add(compare("plus-q", compose(b.plus, b.q), compose(pi0, b.q), E2, tol))
    add(compare("plus-unit", compose(pair(one, b.zero_over(one)), b.plus), one, E, tol))
    add(compare("plus-comm", b.plus, compose(pair(pi1, pi0), b.plus), E2, tol))
    d3 = [k, k, k]
    e1, e2_, e3 = (block(d3, i) for i in range(3))
    left = b.add(b.add(e1, e2_), e3)
    right = b.add(e1, b.add(e2_, e3))
    add(compare("plus-assoc", left, right, E3, tol))
    add(compare("zero-section", compose(b.zero, b.q), identity(m), M, tol))

    lam = b.lift
    # (lift, 0_M) is an additive morphism q -> T(q)
    add(compare("lift-square-T", compose(lam, tangent(b.q)), compose(b.q, zero_map(m)), E, tol))
    add(compare("lift-add-T", compose(b.plus, lam),
                compose(tpair(1, compose(pi0, lam), compose(pi1, lam)), tangent(b.plus)), E2, tol))
    add(compare("lift-zero-T", compose(b.zero, lam), compose(zero_map(m), tangent(b.zero)), M, tol))
    # (lift, 0_q) is an additive morphism q -> p_E
    add(compare("lift-square-p", compose(lam, p_map(k)), compose(b.q, b.zero), E, tol))
    add(compare("lift-add-p", compose(b.plus, lam),
                compose(pair(compose(pi0, lam), compose(pi1, lam)), add_map(k)), E2, tol))
    add(compare("lift-zero-p", compose(b.zero, lam), compose(b.zero, zero_map(k)), M, tol))
    add(compare("lift-lift", compose(lam, lift_map(k)), compose(lam, tangent(lam)), E, tol))
    add(compare("mu-p", compose(b.mu, p_map(k)), pi1, E2, tol))
    rep.items.extend(universality_check(b, s).items)
    return rep


def tangent_morphism(f: SmoothMap, src: Space, dst: Space) -> LinearMorphism:
    """(T(f), f) between tangent bundles."""
    return LinearMorphism(tangent(f), f, tangent_bundle(src), tangent_bundle(dst))


def check_linear(mor: LinearMorphism, samples=None, tol: float = 1e-9) -> Report:
    s = as_samples(samples)
    src, dst = mor.src, mor.dst
    E = s(src.total)
    rep = Report("linear morphism", tol)
    rep.items.append(compare("square", compose(mor.f1, dst.q), compose(src.q, mor.f0), E, tol))
    rep.items.append(compare("lift", compose(mor.f1, dst.lift), compose(src.lift, tangent(mor.f1)),
                             E, tol))
    return rep


# -- constructions -------------------------------------------------------------

def tangent_bundle(space: Space, name: str = "") -> DifferentialBundle:
    k = space.dim
    return DifferentialBundle(TangentSpace(space), space, p_map(k), add_map(k), zero_map(k),
                              lift_map(k), tuple(range(k)), name or f"T({space!r})")


def differential_object(dim: int, name: str = "") -> DifferentialBundle:
    """R^dim as a bundle over the point: lift a -> (a, 0)."""
    one = np.eye(dim)
    return DifferentialBundle(Euclidean(dim), Euclidean(0), Linear(np.zeros((0, dim))),
                              Linear(np.hstack([one, one])), Linear(np.zeros((dim, 0))),
                              Linear(np.vstack([one, np.zeros((dim, dim))])), tuple(range(dim)),
                              name or f"R({dim}) -> 1")


def t_of_bundle(b: DifferentialBundle, name: str = "") -> DifferentialBundle:
    k = b.k
    fib = tuple(b.fibre) + tuple(k + i for i in b.fibre)
    from .smap.maps import flip_map
    return DifferentialBundle(TangentSpace(b.total), TangentSpace(b.base), tangent(b.q),
                              compose(interchange(1, [k, k]), tangent(b.plus)), tangent(b.zero),
                              compose(tangent(b.lift), flip_map(k, 2)), fib, name or f"T({b!r})")


def pullback_bundle(f: SmoothMap, b: DifferentialBundle, domain: Space | None = None,
                    name: str = "") -> DifferentialBundle:
    """f*(q) with total space X x_M E stored as (x, e)."""
    if f.out_dim != b.m:
        raise DimensionMismatch(f"pullback leg lands in R^{f.out_dim}, base has dim {b.m}")
    X = domain if domain is not None else Euclidean(f.in_dim)
    kx, k = X.dim, b.k
    total = FibreProduct(X, f, b.total, b.q)
    dims4 = [kx, k, kx, k]
    plus = pair(block(dims4, 0), compose(pair(block(dims4, 1), block(dims4, 3)), b.plus))
    zero = pair(identity(kx), compose(f, b.zero))
    lift = tpair(1, compose(block([kx, k], 0), zero_map(kx)), compose(block([kx, k], 1), b.lift))
    return DifferentialBundle(total, X, block([kx, k], 0), plus, zero, lift,
                              tuple(kx + i for i in b.fibre), name or f"pullback({b!r})")


def whitney_sum(b1: DifferentialBundle, b2: DifferentialBundle, name: str = "") -> DifferentialBundle:
    if b1.m != b2.m:
        raise DimensionMismatch("whitney sum of bundles over different bases")
    k1, k2 = b1.k, b2.k
    total = FibreProduct(b1.total, b1.q, b2.total, b2.q)
    d = [k1, k2, k1, k2]
    plus = pair(compose(pair(block(d, 0), block(d, 2)), b1.plus),
                compose(pair(block(d, 1), block(d, 3)), b2.plus))
    zero = pair(b1.zero, b2.zero)
    lift = tpair(1, compose(block([k1, k2], 0), b1.lift), compose(block([k1, k2], 1), b2.lift))
    fib = tuple(b1.fibre) + tuple(k1 + i for i in b2.fibre)
    return DifferentialBundle(total, b1.base, compose(block([k1, k2], 0), b1.q), plus, zero, lift,
                              fib, name or f"{b1!r} + {b2!r}")


def finsler_bundle(b: DifferentialBundle, name: str = "") -> DifferentialBundle:
    """q*(q): E2 -> E, (e0, e1) -> e1, lift <pi0 lift, pi1 0>."""
    k = b.k
    d4 = [k, k, k, k]
    plus = pair(compose(pair(block(d4, 0), block(d4, 2)), b.plus), block(d4, 1))
    zero = pair(b.zero_over(identity(k)), identity(k))
    lift = tpair(1, compose(block([k, k], 0), b.lift), compose(block([k, k], 1), zero_map(k)))
    return DifferentialBundle(b.e2, b.total, block([k, k], 1), plus, zero, lift, tuple(b.fibre),
                              name or f"finsler({b!r})")


def trivial_bundle(a: int, base: Space, name: str = "") -> DifferentialBundle:
    """A x M -> M for the differential object A = R^a, stored as (a, m)."""
    m = base.dim
    total = FibreProduct(Euclidean(a), Linear(np.zeros((0, a))), base, Linear(np.zeros((0, m))))
    d4 = [a, m, a, m]
    plus = pair(compose(pair(block(d4, 0), block(d4, 2)), Linear(np.hstack([np.eye(a), np.eye(a)]))),
                block(d4, 1))
    zero = pair(Linear(np.zeros((a, m))), identity(m))
    lam_a = Linear(np.vstack([np.eye(a), np.zeros((a, a))]))
    lift = tpair(1, compose(block([a, m], 0), lam_a), compose(block([a, m], 1), zero_map(m)))
    return DifferentialBundle(total, base, block([a, m], 1), plus, zero, lift, tuple(range(a)),
                              name or f"R({a}) x {base!r}")


def lambda2(b: DifferentialBundle) -> SmoothMap:
    """<pi0 lift, pi1 lift>: E2 -> T(E2)."""
    k = b.k
    return tpair(1, compose(block([k, k], 0), b.lift), compose(block([k, k], 1), b.lift))


def check_lambda2(b: DifferentialBundle, samples=None, tol: float = 1e-9) -> Report:
    """lambda2 is the lift of 0*(T(q)) transported along mu.

    Under E2 = 0*(T(q)) via mu, the pullback lift is <T(0_M)-side zero, T(lift) c>;
    transported back it must equal lambda2, i.e. lambda2 T(mu) = mu T(lift) c.
    """
    from .smap.maps import flip_map
    s = as_samples(samples)
    k = b.k
    E2 = s(b.e2)
    rep = Report("lambda2", tol)
    rep.items.append(compare("lambda2-mu", compose(lambda2(b), tangent(b.mu)),
                             compose(b.mu, tangent(b.lift), flip_map(k, 2)), E2, tol))
    rep.items.append(compare("lambda2-base", compose(lambda2(b), tangent(compose(block([k, k], 0), b.q))),
                             compose(block([k, k], 0), b.q, zero_map(b.m)), E2, tol))
    return rep
