"""Tangent-category identities checked on sampled towers.

The coherence equations of p, 0, +, l and c are checked at dimension ``k``;
naturality is checked against seeded random maps written in the DSL.
"""
from __future__ import annotations

import numpy as np

from .bundle import as_samples
from .report import Report, compare
from .smap.maps import (ExprMap, SmoothMap, add_map, compose, flip_map, identity,
                        lift_map, p_map, pair, block, tangent, zero_map)
from .smap.parser import parse_expr
from .space import Euclidean, TangentSpace

TOL = 1e-12

_UNARY = ("sin({})", "cos({})", "exp(0.3 * {})", "pow({}, 2)", "{} / (1 + pow({}, 2))")


def random_map_source(rng: np.random.Generator, in_dim: int, out_dim: int) -> list[str]:
    """Component sources of a random smooth map R^in_dim -> R^out_dim."""
    def term(depth: int) -> str:
        if depth == 0 or rng.random() < 0.25:
            if rng.random() < 0.2:
                return f"{rng.uniform(-2, 2):.3f}"
            return f"x[{rng.integers(in_dim)}]"
        choice = rng.integers(4)
        if choice == 0:
            inner = term(depth - 1)
            return _UNARY[rng.integers(len(_UNARY))].format(inner, inner)
        op = "+-*"[choice - 1]
        return f"({term(depth - 1)} {op} {term(depth - 1)})"
    return [term(3) for _ in range(out_dim)]


def random_maps(seed: int, count: int = 10, max_dim: int = 3) -> list[SmoothMap]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        a, b = (int(v) for v in rng.integers(1, max_dim + 1, size=2))
        exprs = [parse_expr(s) for s in random_map_source(rng, a, b)]
        out.append(ExprMap(exprs, a, name=f"random{i}"))
    return out


def _towers(samples, k: int, depth: int) -> np.ndarray:
    return samples(TangentSpace(Euclidean(k), depth) if depth else Euclidean(k))


def coherence(k: int, samples=None, tol: float = TOL) -> Report:
    """The structural identities on T^n(R^k) for n <= 3."""
    s = as_samples(samples)
    t1, t2 = _towers(s, k, 1), _towers(s, k, 2)
    c2, l1 = flip_map(k, 2), lift_map(k)
    rep = Report(f"coherence on R^{k}", tol)
    rep.items += [
        compare("cc=1", compose(c2, c2), identity(4 * k), t2, tol),
        compare("lc=l", compose(l1, c2), l1, t1, tol),
        compare("lp=p0", compose(l1, p_map(k, 2)), compose(p_map(k), zero_map(k)), t1, tol),
        compare("lT(c)c=cT(l)", compose(lift_map(k, 2, 2), tangent(c2), flip_map(k, 3)),
                compose(c2, tangent(l1)), t2, tol),
        compare("lT(l)=ll", compose(l1, tangent(l1)), compose(l1, lift_map(k, 2, 2)), t1, tol),
        compare("cT(c)c=T(c)cT(c)", compose(flip_map(k, 3), tangent(c2), flip_map(k, 3)),
                compose(tangent(c2), flip_map(k, 3), tangent(c2)), _towers(s, k, 3), tol),
        compare("cp=T(p)", compose(c2, p_map(k, 2)), tangent(p_map(k)), t2, tol),
        compare("0c=T(0)", compose(zero_map(k, 1), c2), tangent(zero_map(k)), t1, tol),
    ]
    return rep


def naturality(f: SmoothMap, samples=None, tol: float = TOL) -> Report:
    """p, 0, +, l and c commute with T(f) and T^2(f)."""
    s = as_samples(samples)
    a, b = f.in_dim, f.out_dim
    x, t1, t2 = _towers(s, a, 0), _towers(s, a, 1), _towers(s, a, 2)
    Tf, TTf = tangent(f), tangent(f, 2)
    # T_2: two tangent vectors at the same point, laid out (v1, x, v2, x)
    base = t1[:, a:]
    pairs = np.hstack([t1, t1[::-1, :a], base])
    rep = Report(f"naturality of {f.label()}", tol)
    rep.items += [
        compare("T(f)p=pf", compose(Tf, p_map(b)), compose(p_map(a), f), t1, tol),
        compare("0T(f)=f0", compose(zero_map(a), Tf), compose(f, zero_map(b)), x, tol),
        compare("(T(f)xT(f))+=+T(f)",
                compose(pair(compose(block([2 * a, 2 * a], 0), Tf),
                             compose(block([2 * a, 2 * a], 1), Tf)), add_map(b)),
                compose(add_map(a), Tf), pairs, tol),
        compare("T(f)l=lT2(f)", compose(Tf, lift_map(b)), compose(lift_map(a), TTf), t1, tol),
        compare("T2(f)c=cT2(f)", compose(TTf, flip_map(b, 2)), compose(flip_map(a, 2), TTf), t2, tol),
    ]
    return rep


def axiom_suite(samples=None, seed: int = 42, tol: float = TOL, maps: int = 10) -> Report:
    s = as_samples(samples)
    rep = Report("tangent-category axioms", tol)
    for k in (1, 2, 3):
        rep.extend(coherence(k, s, tol), prefix=f"R{k}:")
    for f in random_maps(seed, maps):
        rep.extend(naturality(f, s, tol), prefix=f"{f.label()}:")
    return rep
