"""Vertical, horizontal, Finsler and full connections on differential bundles.

Conventions (all maps diagrammatic, apply the left factor first):

* ``K: T(E) -> E`` is a vertical connection;
* ``H: T(M) x_M E -> T(E)`` is a horizontal connection, a section of
  ``U = <T(q), p>``; its domain is stored as ``(t, e)``;
* every ``1 - ...`` on T(E) subtracts in the fibre of ``p: T(E) -> E``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bundle import (BracketMap, DifferentialBundle, LinearMorphism, Samples, as_samples,
                     differential_object, equalizer_residual, lift_map, pullback_bundle,
                     t_of_bundle, tangent_bundle)
from .errors import (CompatibilityViolation, DimensionMismatch, NotASection, NotAVectorField,
                     SectionRetractionMismatch)
from .report import Report, compare, item_from_rows, row_residuals
from .smap.maps import (Linear, SmoothMap, add_map, block, compose, fibre_sum, flip_map, identity,
                        interchange, p_map, pair, product, tangent, tpair, zero_map)
from .space import Euclidean, Space, TangentSpace, sphere
from . import nilpotent as nil

TOL = 1e-8


@dataclass(frozen=True, eq=False)
class VerticalConnection:
    bundle: DifferentialBundle
    K: SmoothMap
    name: str = ""

    def __post_init__(self):
        k = self.bundle.k
        if (self.K.in_dim, self.K.out_dim) != (2 * k, k):
            raise DimensionMismatch(f"K must map R^{2 * k} -> R^{k}")


@dataclass(frozen=True, eq=False)
class HorizontalConnection:
    bundle: DifferentialBundle
    H: SmoothMap
    name: str = ""

    def __post_init__(self):
        b = self.bundle
        if (self.H.in_dim, self.H.out_dim) != (2 * b.m + b.k, 2 * b.k):
            raise DimensionMismatch(f"H must map R^{2 * b.m + b.k} -> R^{2 * b.k}")


@dataclass(frozen=True, eq=False)
class Connection:
    vertical: VerticalConnection
    horizontal: HorizontalConnection
    name: str = ""

    def __post_init__(self):
        if self.vertical.bundle is not self.horizontal.bundle:
            raise DimensionMismatch("vertical and horizontal parts live on different bundles")

    @property
    def bundle(self) -> DifferentialBundle:
        return self.vertical.bundle

    @property
    def K(self) -> SmoothMap:
        return self.vertical.K

    @property
    def H(self) -> SmoothMap:
        return self.horizontal.H


@dataclass(frozen=True, eq=False)
class FinslerConnection:
    bundle: DifferentialBundle
    R: SmoothMap


@dataclass(frozen=True, eq=False)
class ChristoffelData:
    """Symbols Gamma^i_jk(x) on R^dim, flattened at index i*dim^2 + j*dim + k."""
    dim: int
    psi: SmoothMap

    def __post_init__(self):
        n = self.dim
        if (self.psi.in_dim, self.psi.out_dim) != (n, n ** 3):
            raise DimensionMismatch(f"psi must map R^{n} -> R^{n ** 3}")

    def symbols(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.psi(x).reshape(-1, self.dim, self.dim, self.dim)

    def is_symmetric(self, samples=None, tol: float = 1e-12) -> bool:
        pts = as_samples(samples)(Euclidean(self.dim))
        g = self.symbols(pts)
        return bool(np.max(np.abs(g - np.swapaxes(g, 2, 3)), initial=0.0) <= tol)


def constant_symbols(dim: int, entries: dict) -> ChristoffelData:
    """Constant symbols from ``{(i, j, k): value}``."""
    vals = np.zeros(dim ** 3)
    for (i, j, k), v in entries.items():
        vals[i * dim * dim + j * dim + k] = v
    from .smap.maps import constant
    return ChristoffelData(dim, constant(vals, dim, name="psi"))


class ChristoffelDescent(SmoothMap):
    """(w, v, y, x) -> (w + Gamma(x)(v, y), x) on T^2(R^n)."""

    def __init__(self, data: ChristoffelData, name: str = "K"):
        self.data = data
        n = data.dim
        self.in_dim, self.out_dim, self.name = 4 * n, 2 * n, name

    def correction(self, x: np.ndarray, outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
        n = self.data.dim
        g = self.data.psi.evaluate(x)
        g = g.reshape((g.shape[0], n, n, n) + g.shape[2:])
        vy = nil.mul(outer[:, :, None], inner[:, None, :])
        return nil.mul(g, vy[:, None]).sum(axis=(2, 3))

    def evaluate(self, x):
        n = self.data.dim
        w, v, y, base = (x[:, i * n:(i + 1) * n] for i in range(4))
        return np.concatenate([w + self.correction(base, v, y), base], axis=1)


class ChristoffelLift(SmoothMap):
    """((u, x), (y, x)) -> (-Gamma(x)(u, y), u, y, x)."""

    def __init__(self, data: ChristoffelData, name: str = "H"):
        self.descent = ChristoffelDescent(data)
        n = data.dim
        self.in_dim, self.out_dim, self.name = 4 * n, 4 * n, name

    def evaluate(self, x):
        n = self.descent.data.dim
        u, base, y = x[:, :n], x[:, n:2 * n], x[:, 2 * n:3 * n]
        return np.concatenate([-self.descent.correction(base, u, y), u, y, base], axis=1)


# -- checks --------------------------------------------------------------------

def check_vertical(v: VerticalConnection, samples=None, tol: float = TOL) -> Report:
    s = as_samples(samples)
    b, K = v.bundle, v.K
    k = b.k
    E, TE, E2 = s(b.total), s(b.tangent_total), s(b.e2)
    rep = Report(f"vertical {v.name or 'K'}", tol)
    add = rep.items.append
    add(compare("(a) lK=1", compose(b.lift, K), identity(k), E, tol))
    add(compare("(b) Kq=pq", compose(K, b.q), compose(p_map(k), b.q), TE, tol))
    add(compare("(c) Kl=lT(K)", compose(K, b.lift), compose(lift_map(k), tangent(K)), TE, tol))
    add(compare("(d) Kl=T(l)cT(K)", compose(K, b.lift),
                compose(tangent(b.lift), flip_map(k, 2), tangent(K)), TE, tol))
    add(compare("muK=pi0", compose(b.mu, K), block([k, k], 0), E2, tol))
    return rep


def check_horizontal(h: HorizontalConnection, samples=None, tol: float = TOL) -> Report:
    s = as_samples(samples)
    b, H = h.bundle, h.H
    k, m = b.k, b.m
    D = s(b.horizontal_domain)
    dims = [2 * m, k]
    pt, pe = block(dims, 0), block(dims, 1)
    rep = Report(f"horizontal {h.name or 'H'}", tol)
    add = rep.items.append
    add(compare("(i) HT(q)=pi0", compose(H, tangent(b.q)), pt, D, tol))
    add(compare("(ii) Hp=pi1", compose(H, p_map(k)), pe, D, tol))
    add(compare("(iii) Hl=(lx0)T(H)", compose(H, lift_map(k)),
                compose(tpair(1, compose(pt, lift_map(m)), compose(pe, zero_map(k))), tangent(H)),
                D, tol))
    add(compare("(iv) HT(l)c=(0xl)T(H)", compose(H, tangent(b.lift), flip_map(k, 2)),
                compose(tpair(1, compose(pt, zero_map(2 * m)), compose(pe, b.lift)), tangent(H)),
                D, tol))
    return rep


def decomposition_sum(c: Connection) -> SmoothMap:
    """<K,p> mu +_p U H, which must equal the identity of T(E)."""
    b = c.bundle
    return fibre_sum(compose(pair(c.K, p_map(b.k)), b.mu), compose(b.U, c.H), b.k)


def check_connection(c: Connection, samples=None, tol: float = TOL) -> Report:
    s = as_samples(samples)
    b = c.bundle
    k, m = b.k, b.m
    rep = Report(f"connection {c.name or ''}".strip(), tol)
    D, TE = s(b.horizontal_domain), s(b.tangent_total)
    rep.items.append(compare("HK=pi1 q 0", compose(c.H, c.K),
                             compose(block([2 * m, k], 1), b.q, b.zero), D, tol))
    rep.items.append(compare("<K,p>mu+UH=1", decomposition_sum(c), identity(2 * k), TE, tol))
    return rep


def check_full(c: Connection, samples=None, tol: float = TOL) -> Report:
    """Component checks and the connection equations in one report."""
    s = as_samples(samples)
    rep = Report(f"connection {c.name or ''}".strip(), tol)
    rep.extend(check_vertical(c.vertical, s, tol), "vertical ")
    rep.extend(check_horizontal(c.horizontal, s, tol), "horizontal ")
    rep.extend(check_connection(c, s, tol))
    return rep


# -- Finsler form --------------------------------------------------------------

def vertical_to_finsler(v: VerticalConnection) -> FinslerConnection:
    return FinslerConnection(v.bundle, pair(v.K, p_map(v.bundle.k), name="R"))


def finsler_to_vertical(f: FinslerConnection) -> VerticalConnection:
    k = f.bundle.k
    return VerticalConnection(f.bundle, compose(f.R, block([k, k], 0)))


def check_finsler(f: FinslerConnection, samples=None, tol: float = TOL) -> Report:
    s = as_samples(samples)
    b, R = f.bundle, f.R
    k = b.k
    K = compose(R, block([k, k], 0))
    E2, TE = s(b.e2), s(b.tangent_total)
    rep = Report("finsler", tol)
    add = rep.items.append
    add(compare("(a) muR=1", compose(b.mu, R), identity(2 * k), E2, tol))
    add(compare("(b) Rpi1=p", compose(R, block([k, k], 1)), p_map(k), TE, tol))
    add(compare("(c) Rpi0l=T(l)cT(Rpi0)", compose(K, b.lift),
                compose(tangent(b.lift), flip_map(k, 2), tangent(K)), TE, tol))
    add(compare("(d) lT(Rpi0)=Rpi0l", compose(lift_map(k), tangent(K)), compose(K, b.lift), TE, tol))
    return rep


# -- constructions -------------------------------------------------------------

def _euclid(a) -> Euclidean:
    return a if isinstance(a, Euclidean) else Euclidean(int(a))


def christoffel_vertical(data: ChristoffelData, bundle: DifferentialBundle | None = None
                         ) -> VerticalConnection:
    b = bundle or tangent_bundle(Euclidean(data.dim))
    return VerticalConnection(b, ChristoffelDescent(data), name="christoffel")


def christoffel_horizontal(data: ChristoffelData, bundle: DifferentialBundle | None = None
                           ) -> HorizontalConnection:
    b = bundle or tangent_bundle(Euclidean(data.dim))
    return HorizontalConnection(b, ChristoffelLift(data), name="christoffel")


def christoffel_connection(data: ChristoffelData) -> Connection:
    b = tangent_bundle(Euclidean(data.dim))
    return Connection(christoffel_vertical(data, b), christoffel_horizontal(data, b), "christoffel")


def sphere_descent(d: int) -> SmoothMap:
    """(w, v, y, x) -> (w + (v.y) x, x) on T^2 of the sphere in R^d."""
    from .smap.expr import Binary, Dot, Slice
    from .smap.maps import ExprMap
    w, v, y, x = (Slice(i * d, (i + 1) * d) for i in range(4))
    return ExprMap([Binary("+", w, Binary("*", Dot(v, y), x)), x], 4 * d, name="K")


def sphere_vertical(n: int, bundle: DifferentialBundle | None = None) -> VerticalConnection:
    b = bundle or tangent_bundle(sphere(n))
    return VerticalConnection(b, sphere_descent(n + 1), name=f"sphere({n})")


def canonical_vertical_diff_object(a) -> VerticalConnection:
    """The principal projection (y, x) -> y on a differential object R^a."""
    b = differential_object(_euclid(a).dim)
    n = b.k
    return VerticalConnection(b, Linear(np.hstack([np.eye(n), np.zeros((n, n))]), name="p^"),
                              name="principal")


def canonical_horizontal_diff_object(a, bundle: DifferentialBundle | None = None
                                     ) -> HorizontalConnection:
    """a -> (0, a); the domain T(1) x_1 A is just A."""
    n = _euclid(a).dim
    b = bundle or differential_object(n)
    return HorizontalConnection(b, Linear(np.vstack([np.zeros((n, n)), np.eye(n)]), name="pi1 0"),
                                name="principal")


def canonical_connection_diff_object(a) -> Connection:
    v = canonical_vertical_diff_object(a)
    return Connection(v, canonical_horizontal_diff_object(a, v.bundle), "principal")


def canonical_affine_connection(a) -> Connection:
    """K(w, v, y, x) = (w, x) and H((u, m), (y, x)) = (0, u, y, x) on T(R^n)."""
    n = _euclid(a).dim
    b = tangent_bundle(Euclidean(n))
    I, Z = np.eye(n), np.zeros((n, n))
    K = Linear(np.block([[I, Z, Z, Z], [Z, Z, Z, I]]), name="K0")
    H = Linear(np.block([[Z, Z, Z, Z], [I, Z, Z, Z], [Z, Z, I, Z], [Z, Z, Z, I]]), name="H0")
    return Connection(VerticalConnection(b, K, "flat"), HorizontalConnection(b, H, "flat"), "flat")


# pullbacks along f: X -> M; the new total space is stored as (x, e)

def _pullback_parts(f: SmoothMap, b: DifferentialBundle, domain: Space | None):
    pb = pullback_bundle(f, b, domain)
    return pb, pb.base.dim, b.k


def pullback_vertical(f: SmoothMap, v: VerticalConnection, domain: Space | None = None,
                      bundle: DifferentialBundle | None = None) -> VerticalConnection:
    pb, kx, k = (bundle, bundle.base.dim, v.bundle.k) if bundle else _pullback_parts(f, v.bundle, domain)
    dims = [kx, k]
    K = pair(compose(tangent(block(dims, 0)), p_map(kx)), compose(tangent(block(dims, 1)), v.K))
    return VerticalConnection(pb, K, name=f"pullback({v.name})")


def pullback_horizontal(f: SmoothMap, h: HorizontalConnection, domain: Space | None = None,
                        bundle: DifferentialBundle | None = None) -> HorizontalConnection:
    pb, kx, k = (bundle, bundle.base.dim, h.bundle.k) if bundle else _pullback_parts(f, h.bundle, domain)
    dims = [2 * kx, kx, k]
    t, x, e = (block(dims, i) for i in range(3))
    H = tpair(1, t, compose(pair(compose(t, tangent(f)), e), h.H), dims=[kx, k])
    return HorizontalConnection(pb, H, name=f"pullback({h.name})")


def pullback_connection(f: SmoothMap, c: Connection, domain: Space | None = None) -> Connection:
    pb = pullback_bundle(f, c.bundle, domain)
    return Connection(pullback_vertical(f, c.vertical, bundle=pb),
                      pullback_horizontal(f, c.horizontal, bundle=pb), f"pullback({c.name})")


# tangent bundle of a bundle

def t_of_vertical(v: VerticalConnection, bundle: DifferentialBundle | None = None
                  ) -> VerticalConnection:
    tb = bundle or t_of_bundle(v.bundle)
    return VerticalConnection(tb, compose(flip_map(v.bundle.k, 2), tangent(v.K)),
                              name=f"T({v.name})")


def t_of_horizontal(h: HorizontalConnection, bundle: DifferentialBundle | None = None
                    ) -> HorizontalConnection:
    b = h.bundle
    tb = bundle or t_of_bundle(b)
    k, m = b.k, b.m
    H = compose(product(flip_map(m, 2), identity(2 * k)), interchange(1, [2 * m, k]),
                tangent(h.H), flip_map(k, 2))
    return HorizontalConnection(tb, H, name=f"T({h.name})")


def t_of_connection(c: Connection) -> Connection:
    tb = t_of_bundle(c.bundle)
    return Connection(t_of_vertical(c.vertical, tb), t_of_horizontal(c.horizontal, tb),
                      f"T({c.name})")


# retracts

def check_section_retraction(s: SmoothMap, r: SmoothMap, points: np.ndarray, tol: float = TOL) -> None:
    res = row_residuals(compose(s, r)(points), points)
    if res.size and np.max(res) > tol:
        j = int(np.argmax(res))
        raise SectionRetractionMismatch(
            f"s then r is not the identity at {points[j].tolist()}: residual {res[j]:.3e}")


def retract_vertical(v: VerticalConnection, s: LinearMorphism, r: LinearMorphism,
                     samples=None, tol: float = TOL) -> VerticalConnection:
    """T(s1) K r1 on the bundle s.src, for s: q' -> q and r: q -> q'."""
    check_section_retraction(s.f1, r.f1, as_samples(samples)(s.src.total), tol)
    return VerticalConnection(s.src, compose(tangent(s.f1), v.K, r.f1), name=f"retract({v.name})")


def retract_horizontal(h: HorizontalConnection, s: LinearMorphism, r: LinearMorphism,
                       samples=None, tol: float = TOL) -> HorizontalConnection:
    """(T(s0) x s1) H T(r1)."""
    check_section_retraction(s.f1, r.f1, as_samples(samples)(s.src.total), tol)
    H = compose(product(tangent(s.f0), s.f1), h.H, tangent(r.f1))
    return HorizontalConnection(s.src, H, name=f"retract({h.name})")


def retract_affine(v: VerticalConnection, s: SmoothMap, r: SmoothMap, target: Space,
                   samples=None, tol: float = TOL) -> VerticalConnection:
    """T^2(s) K T(r) on the tangent bundle of ``target``."""
    check_section_retraction(s, r, as_samples(samples)(target), tol)
    return VerticalConnection(tangent_bundle(target), compose(tangent(s, 2), v.K, tangent(r)),
                              name=f"retract({v.name})")


def sphere_horizontal_from_retract(n: int, bundle: DifferentialBundle | None = None
                                   ) -> HorizontalConnection:
    """The flat horizontal connection of R^(n+1) retracted onto the sphere."""
    from .bundle import tangent_morphism
    from .smap.maps import normalize
    d = n + 1
    S = bundle.base if bundle else sphere(n)
    flat = canonical_affine_connection(d)
    s = tangent_morphism(identity(d), S, flat.bundle.base)
    r = tangent_morphism(normalize(d), flat.bundle.base, S)
    if bundle is not None:
        s = LinearMorphism(s.f1, s.f0, bundle, s.dst)
    return retract_horizontal(flat.horizontal, s, r)


# the two directions between K and H

def vertical_from_horizontal(h: HorizontalConnection, tol: float = TOL) -> Connection:
    """K = {1 -_p UH}, computed pointwise by the bracket solve."""
    b = h.bundle
    f = fibre_sum(identity(2 * b.k), compose(b.U, h.H), b.k, sign=-1.0)
    K = BracketMap(b, f, tol=tol, name="{1-UH}")
    return Connection(VerticalConnection(b, K, name="{1-UH}"), h, f"derived({h.name})")


def complement_of_horizontal(h: HorizontalConnection) -> SmoothMap:
    b = h.bundle
    return fibre_sum(identity(2 * b.k), compose(b.U, h.H), b.k, sign=-1.0)


def horizontal_from_vertical(v: VerticalConnection, j: HorizontalConnection) -> Connection:
    """H = J (1 -_p <K,p> mu)."""
    b = v.bundle
    proj = fibre_sum(identity(2 * b.k), compose(pair(v.K, p_map(b.k)), b.mu), b.k, sign=-1.0)
    H = compose(j.H, proj, name="J(1-<K,p>mu)")
    return Connection(v, HorizontalConnection(b, H, name="derived"), f"derived({v.name})")


def sphere_connection(n: int) -> Connection:
    v = sphere_vertical(n)
    return horizontal_from_vertical(v, sphere_horizontal_from_retract(n, v.bundle))


# -- covariant derivative and the limit decomposition ---------------------------

def _check_field(w: SmoothMap, space: Space, samples, tol: float) -> None:
    pts = as_samples(samples)(space)
    res = row_residuals(compose(w, p_map(space.dim))(pts), pts)
    if res.size and np.max(res) > tol:
        raise NotAVectorField(f"wp != 1 (residual {np.max(res):.3e})")


def _check_section(s: SmoothMap, b: DifferentialBundle, samples, tol: float) -> None:
    pts = as_samples(samples)(b.base)
    res = row_residuals(compose(s, b.q)(pts), pts)
    if res.size and np.max(res) > tol:
        raise NotASection(f"sq != 1 (residual {np.max(res):.3e})")


def covariant_derivative(v: VerticalConnection, w: SmoothMap, s: SmoothMap, samples=None,
                         tol: float = TOL, validate: bool = True) -> SmoothMap:
    """w T(s) K: the derivative of the section s along the vector field w."""
    b = v.bundle
    if validate:
        _check_field(w, b.base, samples, tol)
        _check_section(s, b, samples, tol)
    return compose(w, tangent(s), v.K)


def decompose(c: Connection, xi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """xi in T(E) -> (K xi, T(q) xi, p xi)."""
    k = c.bundle.k
    xi = np.asarray(getattr(xi, "coords", xi), dtype=float)
    return c.K(xi), tangent(c.bundle.q)(xi), p_map(k)(xi)


def reconstruct(c: Connection, e0, t, e1, tol: float = TOL) -> np.ndarray:
    """mu(e0, e1) +_p H(t, e1), the inverse of :func:`decompose`."""
    b = c.bundle
    e0, t, e1 = (np.asarray(a, dtype=float) for a in (e0, t, e1))
    single = e0.ndim == 1
    e0, t, e1 = np.atleast_2d(e0), np.atleast_2d(t), np.atleast_2d(e1)
    checks = {"e0 q = e1 q": row_residuals(b.q(e0), b.q(e1)),
              "t p = e1 q": row_residuals(p_map(b.m)(t), b.q(e1))}
    for label, res in checks.items():
        if res.size and np.max(res) > tol:
            raise CompatibilityViolation(f"incompatible triple: {label} fails by {np.max(res):.3e}")
    mu = b.mu(np.hstack([e0, e1]))
    h = c.H(np.hstack([t, e1]))
    out = add_map(b.k)(np.hstack([mu, h]))
    return out[0] if single else out
