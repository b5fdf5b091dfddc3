"""Objects of the concrete tangent category: Euclidean spaces, embedded
submanifolds, fibre products and iterated tangent spaces of those.

Every space has a flat coordinate dimension ``dim``.  Membership of a
depth-n tower in T^n(space) is the vanishing of the constraint map
evaluated on that tower.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tower as tw
from .errors import ConstraintViolation, DimensionMismatch, SamplingFailed
from .smap.maps import Linear, SmoothMap, block, compose, pair, tangent

POINT_TOL = 1e-9
BOX = 2.0
MAX_ATTEMPTS = 10


class Space:
    dim: int
    name: str = ""

    def constraint(self) -> SmoothMap | None:
        return None

    def tangent(self, order: int = 1) -> "Space":
        return TangentSpace(self, order) if order else self

    def __repr__(self):
        return self.name or type(self).__name__


class Euclidean(Space):
    def __init__(self, dim: int, name: str = ""):
        self.dim = dim
        self.name = name or f"R({dim})"


class Submanifold(Space):
    """Zero set of ``constraint`` inside R^ambient, with a retraction onto it."""

    def __init__(self, ambient: int, constraint: SmoothMap, retraction: SmoothMap, name: str = ""):
        if constraint.in_dim != ambient or retraction.in_dim != ambient or retraction.out_dim != ambient:
            raise DimensionMismatch("constraint/retraction arity does not match the ambient dimension")
        self.dim = ambient
        self._constraint = constraint
        self.retraction = retraction
        self.name = name or f"submanifold({ambient})"

    def constraint(self):
        return self._constraint


class FibreProduct(Space):
    """Pairs (a, b) with left_map(a) = right_map(b), stored concatenated."""

    def __init__(self, left: Space, left_map: SmoothMap, right: Space, right_map: SmoothMap,
                 name: str = ""):
        if left_map.in_dim != left.dim or right_map.in_dim != right.dim:
            raise DimensionMismatch("fibre product legs do not match their spaces")
        if left_map.out_dim != right_map.out_dim:
            raise DimensionMismatch("fibre product legs have different codomains")
        self.left, self.right = left, right
        self.left_map, self.right_map = left_map, right_map
        self.dim = left.dim + right.dim
        self.name = name or f"{left!r} x {right!r}"

    def constraint(self):
        dims = [self.left.dim, self.right.dim]
        parts = []
        for side, space in enumerate((self.left, self.right)):
            c = space.constraint()
            if c is not None and c.out_dim:
                parts.append(compose(block(dims, side), c))
        k = self.left_map.out_dim
        diff = Linear(np.hstack([np.eye(k), -np.eye(k)]))
        parts.append(compose(pair(compose(block(dims, 0), self.left_map),
                                  compose(block(dims, 1), self.right_map)), diff))
        return pair(*parts)


class TangentSpace(Space):
    """T^order(base), flat coordinates of a depth-``order`` tower over base."""

    def __new__(cls, base: Space, order: int = 1, name: str = ""):
        if isinstance(base, TangentSpace):
            return TangentSpace(base.base, base.order + order, name)
        return super().__new__(cls)

    def __init__(self, base: Space, order: int = 1, name: str = ""):
        if isinstance(base, TangentSpace):
            return
        self.base = base
        self.order = order
        self.dim = base.dim << order
        self.name = name or ("T" * order if order < 4 else f"T^{order}") + f"({base!r})"

    def constraint(self):
        c = self.base.constraint()
        return None if c is None else tangent(c, self.order)


def sphere(n: int, name: str = "") -> Submanifold:
    """The unit n-sphere in R^(n+1), retracted by normalisation."""
    from .smap.expr import Binary, Dot, Num, Slice
    from .smap.maps import ExprMap, normalize
    if n < 1:
        raise DimensionMismatch(f"sphere dimension must be >= 1, got {n}")
    d = n + 1
    x = Slice(0, d)
    c = ExprMap([Binary("-", Dot(x, x), Num(1.0))], d, name="norm2-1")
    return Submanifold(d, c, normalize(d), name=name or f"S{n}")


@dataclass(frozen=True, eq=False)
class ValidatedPoint:
    space: Space
    coords: np.ndarray
    depth: int
    residuals: np.ndarray  # (2^depth, n_constraints), flat-block order

    def report(self) -> list[dict]:
        return _residual_report(self.residuals)


def _residual_report(res: np.ndarray, tol: float = -1.0) -> list[dict]:
    out = []
    for j in range(res.shape[0]):
        for i in range(res.shape[1]):
            r = float(abs(res[j, i]))
            if r > tol:
                out.append({"constraint": i, "component": j, "residual": r})
    return out


def residuals(space: Space, data: np.ndarray) -> np.ndarray:
    """Constraint values on towers ``data`` of shape (2^n, dim, *batch)."""
    c = space.constraint()
    if c is None or c.out_dim == 0:
        return np.zeros((data.shape[0], 0) + data.shape[2:])
    return c.evaluate(data)


def validate(space: Space, coords, depth: int = 0, tol: float = POINT_TOL) -> ValidatedPoint:
    flat = np.asarray(coords, dtype=float).ravel()
    if flat.size != (space.dim << depth):
        raise DimensionMismatch(f"expected {space.dim << depth} coordinates, got {flat.size}")
    data = tw.unflatten_data(flat, depth)
    res = residuals(space, data[:, :, None])[:, :, 0][::-1]  # descending block order
    if res.size and np.max(np.abs(res)) > tol:
        report = _residual_report(res, tol)
        worst = max(report, key=lambda r: r["residual"])
        raise ConstraintViolation(
            f"point not in T^{depth}({space!r}): constraint {worst['constraint']} "
            f"component {worst['component']} residual {worst['residual']:.3e}", report)
    return ValidatedPoint(space, flat.copy(), depth, res)


# -- sampling -----------------------------------------------------------------

def _jacobian(c: SmoothMap, base: np.ndarray) -> np.ndarray:
    """Jacobians of ``c`` at ``base`` (dim, B) -> (B, out, dim)."""
    dim, count = base.shape
    x = np.zeros((2, dim, count, dim))
    x[0] = base[:, :, None]
    x[1] = np.eye(dim)[:, None, :]
    out = c.evaluate(x)[1]  # (out, B, dim)
    return np.transpose(out, (1, 0, 2))


def _gauss_newton_base(c: SmoothMap, base: np.ndarray, iters: int = 100) -> np.ndarray:
    """Levenberg-Marquardt with damping |g|; robust to redundant constraints."""
    eye = np.eye(c.out_dim)
    for _ in range(iters):
        g = c.evaluate(base[None])[0]
        if np.max(np.abs(g), initial=0.0) < 1e-14:
            break
        jac = _jacobian(c, base)
        damp = np.maximum(np.linalg.norm(g, axis=0), 1e-12)[:, None, None] * eye
        sol = np.linalg.solve(jac @ np.swapaxes(jac, 1, 2) + damp, g.T[:, :, None])[:, :, 0]
        base = base - np.einsum("bji,bj->ib", jac, sol)
    return base


def _project_slots(c: SmoothMap, data: np.ndarray) -> np.ndarray:
    """One Gauss-Newton step per component, processed by subset size."""
    n = tw.depth_of(data.shape[0])
    if n == 0:
        return data
    pinv = np.linalg.pinv(_jacobian(c, data[0]), rcond=1e-10)
    by_level: dict[int, list[int]] = {}
    for mask in range(1, 1 << n):
        by_level.setdefault(bin(mask).count("1"), []).append(mask)
    data = data.copy()
    for level in sorted(by_level):
        g = c.evaluate(data)
        for mask in by_level[level]:
            data[mask] -= np.einsum("bij,jb->ib", pinv, g[mask])
    return data


def _initial(space: Space, depth: int, rng: np.random.Generator, count: int) -> np.ndarray:
    if isinstance(space, Euclidean):
        return rng.uniform(-BOX, BOX, size=(1 << depth, space.dim, count))
    if isinstance(space, Submanifold):
        data = rng.uniform(-BOX, BOX, size=(1 << depth, space.dim, count))
        data[0] = space.retraction.evaluate(data[0][None])[0]
        return data
    if isinstance(space, TangentSpace):
        return tw.absorb(_initial(space.base, depth + space.order, rng, count), space.order)
    if isinstance(space, FibreProduct):
        return np.concatenate([_initial(space.left, depth, rng, count),
                               _initial(space.right, depth, rng, count)], axis=1)
    raise TypeError(f"cannot sample {space!r}")


def _attempt(space: Space, depth: int, rng: np.random.Generator, count: int) -> np.ndarray:
    if isinstance(space, TangentSpace):
        return tw.absorb(_attempt(space.base, depth + space.order, rng, count), space.order)
    data = _initial(space, depth, rng, count)
    c = space.constraint()
    if c is None or c.out_dim == 0:
        return data
    if not isinstance(space, Submanifold):
        data[0] = _gauss_newton_base(c, data[0])
    elif np.max(np.abs(c.evaluate(data[0][None])), initial=0.0) > 1e-14:
        data[0] = _gauss_newton_base(c, data[0], iters=3)
    for _ in range(3):
        data = _project_slots(c, data)
    return data


def sample_data(space: Space, depth: int, seed: int, count: int, tol: float = POINT_TOL) -> np.ndarray:
    """Valid towers as an array of shape (2^depth, dim, count)."""
    rng = np.random.default_rng(seed)
    data = _attempt(space, depth, rng, count)
    for _ in range(MAX_ATTEMPTS):
        bad = _bad_columns(space, data, tol)
        if not bad.any():
            return data
        data[:, :, bad] = _attempt(space, depth, rng, int(bad.sum()))
    bad = _bad_columns(space, data, tol)
    if bad.any():
        raise SamplingFailed(f"{int(bad.sum())} of {count} samples of T^{depth}({space!r}) "
                             f"failed to validate after {MAX_ATTEMPTS} attempts")
    return data


def _bad_columns(space: Space, data: np.ndarray, tol: float) -> np.ndarray:
    res = residuals(space, data)
    finite = np.all(np.isfinite(data), axis=(0, 1))
    if res.shape[1] == 0:
        return ~finite
    return ~finite | (np.max(np.abs(res), axis=(0, 1)) > tol)


def sample_array(space: Space, depth: int, seed: int, count: int) -> np.ndarray:
    """Valid flat points, one per row."""
    return tw.flatten_data(sample_data(space, depth, seed, count)).T.copy()


def sample(space: Space, depth: int, rng_seed: int, count: int) -> list[ValidatedPoint]:
    rows = sample_array(space, depth, rng_seed, count)
    return [validate(space, r, depth) for r in rows]
