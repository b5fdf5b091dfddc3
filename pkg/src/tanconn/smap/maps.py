"""Smooth maps between flat coordinate spaces, evaluable on towers.

A ``SmoothMap`` sends R^in_dim to R^out_dim.  Its ``evaluate`` method takes an
array of shape ``(2**n, in_dim, *batch)`` holding depth-n towers and returns
the image towers; that is T^n of the map.  Plain evaluation is the depth-0
case.

Points of T(X) are always written in the flat tower layout of X, i.e. the
tangent part first and the base point last.  A point of a fibre product
``A x_M B`` is the concatenation ``(a, b)``.  Because T(A x B) is laid out
as a tower over ``(a, b)``, pairing maps into T(A) and T(B) needs the
``interchange`` permutation; :func:`tpair` does that.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import tower as tw
from ..errors import DimensionMismatch
from ..tower import TangentTower
from . import expr as ex


class SmoothMap:
    in_dim: int
    out_dim: int
    name: str = ""

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, points) -> np.ndarray:
        """Plain evaluation of one point (1-d) or a batch (rows)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        batch = pts.reshape(1, -1) if single else pts
        if batch.shape[1] != self.in_dim:
            raise DimensionMismatch(f"{self.label()} expects {self.in_dim} inputs, got {batch.shape[1]}")
        out = self.evaluate(batch.T[None])[0].T
        return out[0] if single else out

    def tower(self, t: TangentTower) -> TangentTower:
        return eval_tower(self, t)

    def then(self, *others: "SmoothMap") -> "SmoothMap":
        return compose(self, *others)

    def label(self) -> str:
        return self.name or type(self).__name__

    def __repr__(self) -> str:
        return f"<{self.label()}: R^{self.in_dim} -> R^{self.out_dim}>"


class ExprMap(SmoothMap):
    def __init__(self, exprs: Sequence[ex.Expr], in_dim: int, name: str = ""):
        self.exprs = tuple(exprs)
        self.in_dim = in_dim
        self.out_dim = sum(ex.width(e) for e in self.exprs)
        self.name = name
        top = max((ex.max_index(e) for e in self.exprs), default=-1)
        if top >= in_dim:
            raise DimensionMismatch(f"component x[{top}] out of range for input arity {in_dim}")

    def evaluate(self, x):
        parts = [ex.evaluate(e, x) for e in self.exprs]
        shape = (x.shape[0], 0) + x.shape[2:]
        return np.concatenate(parts, axis=1) if parts else np.zeros(shape)


class Linear(SmoothMap):
    def __init__(self, matrix, name: str = ""):
        self.matrix = np.asarray(matrix, dtype=float)
        self.out_dim, self.in_dim = self.matrix.shape
        self.name = name

    def evaluate(self, x):
        if x.shape[1] != self.in_dim:
            raise DimensionMismatch(f"{self.label()} expects width {self.in_dim}, got {x.shape[1]}")
        if self.in_dim == 0:
            return np.zeros((x.shape[0], self.out_dim) + x.shape[2:])
        flat = x.reshape(x.shape[0], self.in_dim, -1)
        return (self.matrix @ flat).reshape((x.shape[0], self.out_dim) + x.shape[2:])


class Constant(SmoothMap):
    def __init__(self, value, in_dim: int, name: str = ""):
        self.value = np.asarray(value, dtype=float).ravel()
        self.in_dim = in_dim
        self.out_dim = self.value.size
        self.name = name

    def evaluate(self, x):
        out = np.zeros((x.shape[0], self.out_dim) + x.shape[2:])
        out[0] = self.value.reshape((-1,) + (1,) * (x.ndim - 2))
        return out


class Compose(SmoothMap):
    """Diagrammatic composite: apply ``parts[0]`` first."""

    def __init__(self, parts: Sequence[SmoothMap], name: str = ""):
        self.parts = tuple(parts)
        for f, g in zip(self.parts, self.parts[1:]):
            if f.out_dim != g.in_dim:
                raise DimensionMismatch(f"cannot compose {f!r} with {g!r}")
        self.in_dim = self.parts[0].in_dim
        self.out_dim = self.parts[-1].out_dim
        self.name = name

    def evaluate(self, x):
        for f in self.parts:
            x = f.evaluate(x)
        return x


class Pair(SmoothMap):
    """``<f, g, ...>``: concatenation of outputs."""

    def __init__(self, parts: Sequence[SmoothMap], name: str = ""):
        self.parts = tuple(parts)
        dims = {f.in_dim for f in self.parts}
        if len(dims) != 1:
            raise DimensionMismatch(f"pair legs have different sources {sorted(dims)}")
        self.in_dim = dims.pop()
        self.out_dim = sum(f.out_dim for f in self.parts)
        self.name = name

    def evaluate(self, x):
        return np.concatenate([f.evaluate(x) for f in self.parts], axis=1)


class Tangent(SmoothMap):
    """T(f) in flat coordinates: (tangent, base) -> (tangent, base)."""

    def __init__(self, inner: SmoothMap, name: str = ""):
        self.inner = inner
        self.in_dim = 2 * inner.in_dim
        self.out_dim = 2 * inner.out_dim
        self.name = name

    def evaluate(self, x):
        return tw.absorb(self.inner.evaluate(tw.expand(x, 1)), 1)

    def label(self):
        return self.name or f"T({self.inner.label()})"


# -- builders -----------------------------------------------------------------

def eval_tower(f: SmoothMap, t: TangentTower) -> TangentTower:
    if t.dim != f.in_dim:
        raise DimensionMismatch(f"tower of dim {t.dim} fed to map with in_dim {f.in_dim}")
    return TangentTower(f.evaluate(t.components[:, :, None])[:, :, 0])


def tangent(f: SmoothMap, times: int = 1) -> SmoothMap:
    for _ in range(times):
        if isinstance(f, Linear):
            f = Linear(np.kron(np.eye(2), f.matrix), name=f"T({f.label()})")
        elif isinstance(f, Constant):
            f = Constant(np.concatenate([np.zeros(f.out_dim), f.value]), 2 * f.in_dim,
                         name=f"T({f.label()})")
        elif isinstance(f, Compose):
            f = Compose([tangent(g) for g in f.parts], name=f"T({f.label()})")
        else:
            f = Tangent(f)
    return f


def compose(*maps: SmoothMap, name: str = "") -> SmoothMap:
    """Diagrammatic composite; adjacent linear factors are multiplied out."""
    flat: list[SmoothMap] = []
    for m in maps:
        flat.extend(m.parts if isinstance(m, Compose) and not m.name else [m])
    merged: list[SmoothMap] = []
    for m in flat:
        if merged and isinstance(m, Linear) and isinstance(merged[-1], Linear):
            prev = merged.pop()
            if prev.out_dim != m.in_dim:
                raise DimensionMismatch(f"cannot compose {prev!r} with {m!r}")
            merged.append(Linear(m.matrix @ prev.matrix))
        else:
            merged.append(m)
    if len(merged) == 1:
        only = merged[0]
        if name and isinstance(only, Linear):
            return Linear(only.matrix, name=name)
        if not name or only.name == name:
            return only
    return Compose(merged, name=name)


def pair(*maps: SmoothMap, name: str = "") -> SmoothMap:
    if all(isinstance(m, Linear) for m in maps):
        return Linear(np.vstack([m.matrix for m in maps]), name=name)
    return Pair(maps, name=name)


def identity(k: int) -> Linear:
    return Linear(np.eye(k), name="1")


def select(in_dim: int, indices: Sequence[int], name: str = "") -> Linear:
    m = np.zeros((len(indices), in_dim))
    for row, col in enumerate(indices):
        m[row, col] = 1.0
    return Linear(m, name=name)


def block(in_dims: Sequence[int], index: int) -> Linear:
    """Projection of a concatenation onto its ``index``-th block."""
    start = sum(in_dims[:index])
    return select(sum(in_dims), range(start, start + in_dims[index]), name=f"pi{index}")


def inject(out_dims: Sequence[int], index: int) -> Linear:
    """Inclusion of block ``index`` into a concatenation, zeros elsewhere."""
    return Linear(block(out_dims, index).matrix.T, name=f"in{index}")


def constant(value, in_dim: int, name: str = "") -> Constant:
    return Constant(value, in_dim, name=name)


def product(*maps: SmoothMap) -> SmoothMap:
    """f x g x ... acting blockwise on a concatenation."""
    dims = [m.in_dim for m in maps]
    return pair(*[compose(block(dims, i), m) for i, m in enumerate(maps)])


def twist(a: int, b: int) -> Linear:
    return pair(block([a, b], 1), block([a, b], 0))


def interchange(n: int, dims: Sequence[int]) -> Linear:
    return Linear(tw.interchange_matrix(n, tuple(dims)), name="ix")


def tpair(n: int, *maps: SmoothMap, dims: Sequence[int] | None = None) -> SmoothMap:
    """Pair maps into T^n(A_i) as one map into T^n(A_1 x ... x A_r)."""
    if dims is None:
        dims = [m.out_dim >> n for m in maps]
    return compose(pair(*maps), interchange(n, dims))


def tproj(n: int, dims: Sequence[int], index: int) -> Linear:
    """T^n of a block projection, acting on T^n(A_1 x ... x A_r)."""
    return tangent(block(dims, index), n)


def p_map(k: int, n: int = 1, slot: int | None = None) -> Linear:
    return Linear(tw.proj_matrix(k, n, n if slot is None else slot), name="p")


def zero_map(k: int, n: int = 0, slot: int | None = None) -> Linear:
    return Linear(tw.zero_matrix(k, n, n + 1 if slot is None else slot), name="0")


def lift_map(k: int, n: int = 1, slot: int | None = None) -> Linear:
    return Linear(tw.lift_matrix(k, n, n if slot is None else slot), name="l")


def flip_map(k: int, n: int = 2, i: int | None = None, j: int | None = None) -> Linear:
    if i is None:
        i, j = n - 1, n
    return Linear(tw.flip_matrix(k, n, i, j), name="c")


def add_map(k: int, n: int = 1, slot: int | None = None, sign: float = 1.0) -> Linear:
    return Linear(tw.add_matrix(k, n, n if slot is None else slot, sign), name="+" if sign > 0 else "-")


def neg_map(k: int, n: int = 1, slot: int | None = None) -> Linear:
    return Linear(tw.neg_matrix(k, n, n if slot is None else slot), name="neg")


def fibre_sum(f: SmoothMap, g: SmoothMap, k: int, n: int = 1, slot: int | None = None,
              sign: float = 1.0) -> SmoothMap:
    """``f + g`` (or ``f - g``) along one slot of T^n(X), X of flat dim ``k``."""
    return compose(pair(f, g), add_map(k, n, slot, sign))


def normalize(k: int) -> ExprMap:
    """x / |x|, guarded against |x| ~ 0 by the sqrt domain check."""
    x = ex.Slice(0, k)
    return ExprMap([ex.Binary("/", x, ex.Unary("sqrt", ex.Dot(x, x)))], k, name="normalize")
