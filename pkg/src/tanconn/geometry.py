"""Curvature, torsion, Lie brackets, Bianchi identities and related structure.

Flip conventions on T^n(M): ``c`` swaps the two outermost slots and
``T^j(c)`` swaps slots ``n-j-1`` and ``n-j``.  Sums of values of K in E are
taken in the q-fibre; on T(E) they are taken in the p-fibre (outer slot).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import BracketMap, DifferentialBundle, as_samples, tangent_bundle
from .connection import Connection, VerticalConnection, covariant_derivative
from .errors import NotAffine, NotTorsionFree
from .report import Report, ReportItem, compare, item_from_rows, row_residuals
from .smap.maps import (Linear, SmoothMap, compose, fibre_sum, flip_map, identity, neg_map,
                        p_map, pair, tangent, twist)
from .space import TangentSpace

TOL = 1e-8


def tflip(k: int, depth: int, power: int) -> Linear:
    """T^power(c) on T^depth(R^k)."""
    return flip_map(k, depth, depth - power - 1, depth - power)


@dataclass(frozen=True)
class CurvatureMaps:
    D: SmoothMap  # T^2(E) -> E_2
    C: SmoothMap  # T^2(E) -> E


@dataclass(frozen=True)
class TorsionMaps:
    W: SmoothMap  # T^2(M) -> T_2(M)
    V: SmoothMap  # T^2(M) -> T(M)


def is_tangent_bundle(b: DifferentialBundle) -> bool:
    t = b.total
    if not (isinstance(t, TangentSpace) and t.order == 1 and t.base is b.base):
        return False
    return isinstance(b.q, Linear) and np.array_equal(b.q.matrix, p_map(b.m).matrix)


def _require_affine(v: VerticalConnection) -> None:
    if not is_tangent_bundle(v.bundle):
        raise NotAffine(f"{v.name or 'connection'} does not live on a tangent bundle")


def curvature(v: VerticalConnection) -> CurvatureMaps:
    b, K = v.bundle, v.K
    c = flip_map(b.k, 2)
    first = compose(c, tangent(K), K)
    second = compose(tangent(K), K)
    return CurvatureMaps(pair(first, second, name="D_K"), b.sub(first, second))


def curvature_report(v: VerticalConnection, samples=None, tol: float = TOL) -> Report:
    s = as_samples(samples)
    pts = s(TangentSpace(v.bundle.total, 2))
    C = curvature(v).C
    zero = compose(p_map(v.bundle.k, 2), p_map(v.bundle.k), v.bundle.q, v.bundle.zero)
    return Report("curvature", tol, [compare("C_K=0", C, zero, pts, tol)])


def is_flat(v: VerticalConnection, samples=None, tol: float = TOL) -> bool:
    return curvature_report(v, samples, tol).passed


def torsion(v: VerticalConnection) -> TorsionMaps:
    _require_affine(v)
    b, K = v.bundle, v.K
    cK = compose(flip_map(b.m, 2), K)
    return TorsionMaps(pair(cK, K, name="W_K"), b.sub(cK, K))


def torsion_report(v: VerticalConnection, samples=None, tol: float = TOL) -> Report:
    s = as_samples(samples)
    b = v.bundle
    pts = s(TangentSpace(b.base, 2))
    zero = compose(p_map(b.m, 2), p_map(b.m), b.zero)
    return Report("torsion", tol, [compare("V_K=0", torsion(v).V, zero, pts, tol)])


def is_torsion_free(v: VerticalConnection, samples=None, tol: float = TOL) -> bool:
    return torsion_report(v, samples, tol).passed


# -- vector fields ---------------------------------------------------------------

def lie_bracket(w1: SmoothMap, w2: SmoothMap, base, tol: float = TOL) -> SmoothMap:
    """{w1 T(w2) - w2 T(w1) c} over the tangent bundle of ``base``."""
    b = base if isinstance(base, DifferentialBundle) else tangent_bundle(base)
    m = b.m
    f = fibre_sum(compose(w1, tangent(w2)), compose(w2, tangent(w1), flip_map(m, 2)),
                  2 * m, sign=-1.0)
    return BracketMap(b, f, tol=tol, name="[w1,w2]")


def curvature_tensor(v: VerticalConnection, w1: SmoothMap, w2: SmoothMap, s: SmoothMap) -> SmoothMap:
    """w2 T(w1) T^2(s) C_K."""
    return compose(w2, tangent(w1), tangent(s, 2), curvature(v).C)


def curvature_tensor_standard(v: VerticalConnection, w1: SmoothMap, w2: SmoothMap,
                              s: SmoothMap) -> SmoothMap:
    """nabla(w1, nabla(w2, s)) - nabla(w2, nabla(w1, s)) - nabla([w1, w2], s)."""
    b = v.bundle
    nab = lambda w, sec: covariant_derivative(v, w, sec, validate=False)
    bracket = lie_bracket(w1, w2, b.base)
    return b.sub(b.sub(nab(w1, nab(w2, s)), nab(w2, nab(w1, s))), nab(bracket, s))


def second_covariant(v: VerticalConnection, affine: VerticalConnection, w1: SmoothMap,
                     w2: SmoothMap, s: SmoothMap) -> SmoothMap:
    """nabla^2(w1, w2, s) = nabla(w1, nabla(w2, s)) - nabla(nabla'(w1, w2), s)."""
    nab = lambda conn, w, sec: covariant_derivative(conn, w, sec, validate=False)
    return v.bundle.sub(nab(v, w1, nab(v, w2, s)), nab(v, nab(affine, w1, w2), s))


def curvature_tensor_second(v: VerticalConnection, affine: VerticalConnection, w1: SmoothMap,
                            w2: SmoothMap, s: SmoothMap) -> SmoothMap:
    """nabla^2(w1, w2, s) - nabla^2(w2, w1, s), using a torsion-free ``affine``."""
    return v.bundle.sub(second_covariant(v, affine, w1, w2, s),
                        second_covariant(v, affine, w2, w1, s))


def torsion_tensor(v: VerticalConnection, w1: SmoothMap, w2: SmoothMap) -> SmoothMap:
    return compose(w2, tangent(w1), torsion(v).V)


def torsion_tensor_standard(v: VerticalConnection, w1: SmoothMap, w2: SmoothMap) -> SmoothMap:
    _require_affine(v)
    b = v.bundle
    nab = lambda w, sec: covariant_derivative(v, w, sec, validate=False)
    return b.sub(b.sub(nab(w1, w2), nab(w2, w1)), lie_bracket(w1, w2, b))


# -- Bianchi identities ------------------------------------------------------------

def bianchi_maps(v: VerticalConnection) -> dict:
    """Maps whose values must vanish (or agree) for a torsion-free affine K."""
    _require_affine(v)
    b = v.bundle
    m = b.m
    C = curvature(v).C
    D = compose(tangent(C), v.K)
    c3, tc3 = tflip(m, 3, 0), tflip(m, 3, 1)
    tc4, t2c4 = tflip(m, 4, 1), tflip(m, 4, 2)
    first = b.add(b.add(C, compose(c3, tc3, C)), compose(tc3, c3, C))
    third = b.add(b.add(D, compose(tc4, t2c4, D)), compose(t2c4, tc4, D))
    return {"antisym": (compose(c3, C), compose(C, b.neg), 3),
            "first": (first, compose(p_map(m, 3), p_map(m, 2), p_map(m), b.zero), 3),
            "second": (third, compose(p_map(m, 4), p_map(m, 3), p_map(m, 2), p_map(m), b.zero), 4)}


def bianchi_residuals(v: VerticalConnection, samples=None, tol: float = TOL,
                      require_torsion_free: bool = True) -> Report:
    s = as_samples(samples)
    if require_torsion_free and not is_torsion_free(v, s, tol):
        raise NotTorsionFree(f"{v.name or 'connection'} has torsion")
    b = v.bundle
    rep = Report("bianchi", tol)
    for label, (lhs, rhs, depth) in bianchi_maps(v).items():
        rep.items.append(compare(f"bianchi-{label}", lhs, rhs, s(TangentSpace(b.base, depth)), tol))
    rep.items.append(ReportItem("bianchi-first-statement", None, [], True, kind="ill-typed",
                                note="cT(C)C composes T(C): T^4 -> T^2 after C: T^3 -> T; "
                                     "the proof form cT(c)C is reported as bianchi-first"))
    return rep


# -- horizontal structure ----------------------------------------------------------

def flip_equivariance(c: Connection, samples=None, tol: float = TOL) -> Report:
    """Hc = tau H (the torsion-free criterion) and cU = U tau."""
    _require_affine(c.vertical)
    s = as_samples(samples)
    b = c.bundle
    m = b.m
    tau = twist(2 * m, 2 * m)
    cm = flip_map(m, 2)
    rep = Report("flip-equivariance", tol)
    rep.items.append(compare("Hc=tauH", compose(c.H, cm), compose(tau, c.H),
                             s(b.horizontal_domain), tol))
    rep.items.append(compare("cU=Utau", compose(cm, b.U), compose(b.U, tau),
                             s(TangentSpace(b.base, 2)), 1e-12))
    return rep


def flip_equivariance_check(c: Connection, samples=None, tol: float = TOL) -> bool:
    return flip_equivariance(c, samples, tol)["Hc=tauH"].passed


def almost_complex(c: Connection) -> SmoothMap:
    """F = RH -_p U mu on T^2(M), with R = <K, p>."""
    _require_affine(c.vertical)
    b = c.bundle
    RH = compose(pair(c.K, p_map(b.k)), c.H)
    Umu = compose(b.U, b.mu)
    return fibre_sum(RH, Umu, b.k, sign=-1.0)


def almost_complex_residual(c: Connection, samples=None, tol: float = TOL) -> Report:
    s = as_samples(samples)
    F = almost_complex(c)
    pts = s(TangentSpace(c.bundle.base, 2))
    return Report("almost-complex", tol,
                  [compare("FF=-1", compose(F, F), neg_map(c.bundle.k), pts, tol)])
