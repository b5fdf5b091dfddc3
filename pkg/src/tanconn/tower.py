"""Iterated tangent spaces T^n(R^k) and their structural maps.

A tower of depth ``n`` over ``R^k`` stores ``2**n`` vectors, one per subset
``S`` of the slots ``{1..n}``.  Internally row ``mask`` holds the component
for the subset whose bit ``i-1`` is set iff slot ``i`` belongs to it.  The
flat wire format lists the rows in descending mask order, so that a depth-2
tower flattens to the familiar ``(w, v, y, x)``.

Slot 1 is the innermost application of T.  The structural transformations
act on a chosen slot:

* ``proj``  drops a slot (``p``),
* ``zero``  inserts an all-zero slot (``0``),
* ``add``   adds two towers along a slot (``+``),
* ``lift``  doubles a slot (``l``),
* ``flip``  swaps two slots (``c``).

Every function here accepts arrays with arbitrary trailing axes after the
mask axis, which lets the evaluator push whole batches through at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, SlotError, TowerMismatch


def depth_of(rows: int) -> int:
    n = rows.bit_length() - 1
    if rows != 1 << n:
        raise DimensionMismatch(f"{rows} rows is not a power of two")
    return n


def _check_slot(i: int, lo: int, hi: int, what: str = "slot") -> None:
    if not lo <= i <= hi:
        raise SlotError(f"{what} {i} outside [{lo}, {hi}]")


def _insert_bit(mask: int, pos: int) -> int:
    """Insert a zero bit at bit position ``pos`` (0-based)."""
    low = mask & ((1 << pos) - 1)
    return low | ((mask >> pos) << (pos + 1))


@lru_cache(maxsize=None)
def _proj_index(n: int, i: int) -> np.ndarray:
    return np.array([_insert_bit(m, i - 1) for m in range(1 << (n - 1))], dtype=np.intp)


@lru_cache(maxsize=None)
def _zero_index(n: int, i: int) -> np.ndarray:
    return np.array([_insert_bit(m, i - 1) for m in range(1 << n)], dtype=np.intp)


@lru_cache(maxsize=None)
def _lift_index(n: int, i: int) -> np.ndarray:
    out = []
    for m in range(1 << n):
        new = _insert_bit(m, i)
        if m >> (i - 1) & 1:
            new |= 1 << i
        out.append(new)
    return np.array(out, dtype=np.intp)


@lru_cache(maxsize=None)
def _flip_index(n: int, i: int, j: int) -> np.ndarray:
    out = []
    for m in range(1 << n):
        bi, bj = m >> (i - 1) & 1, m >> (j - 1) & 1
        m2 = m & ~((1 << (i - 1)) | (1 << (j - 1)))
        out.append(m2 | (bj << (i - 1)) | (bi << (j - 1)))
    return np.array(out, dtype=np.intp)


@lru_cache(maxsize=None)
def _slot_rows(n: int, i: int) -> np.ndarray:
    """Boolean mask of the rows whose subset contains slot ``i``."""
    return np.array([bool(m >> (i - 1) & 1) for m in range(1 << n)])


# -- array level --------------------------------------------------------------

def proj_data(d: np.ndarray, i: int) -> np.ndarray:
    n = depth_of(d.shape[0])
    _check_slot(i, 1, n)
    return d[_proj_index(n, i)]


def zero_data(d: np.ndarray, i: int) -> np.ndarray:
    """Insert a zero slot that becomes slot ``i`` (1 <= i <= n+1)."""
    n = depth_of(d.shape[0])
    _check_slot(i, 1, n + 1)
    out = np.zeros((2 * d.shape[0],) + d.shape[1:], dtype=d.dtype)
    out[_zero_index(n, i)] = d
    return out


def add_data(d1: np.ndarray, d2: np.ndarray, i: int, sign: float = 1.0) -> np.ndarray:
    n = depth_of(d1.shape[0])
    _check_slot(i, 1, n)
    if d1.shape != d2.shape:
        raise DimensionMismatch(f"shape {d1.shape} vs {d2.shape}")
    rows = _slot_rows(n, i)
    if not np.array_equal(d1[~rows], d2[~rows]):
        raise TowerMismatch(f"towers differ on components outside slot {i}")
    out = d1.copy()
    out[rows] += sign * d2[rows]
    return out


def neg_data(d: np.ndarray, i: int) -> np.ndarray:
    n = depth_of(d.shape[0])
    _check_slot(i, 1, n)
    out = d.copy()
    out[_slot_rows(n, i)] *= -1.0
    return out


def lift_data(d: np.ndarray, i: int) -> np.ndarray:
    """Double slot ``i``; the new slot is numbered ``i+1``."""
    n = depth_of(d.shape[0])
    _check_slot(i, 1, n)
    out = np.zeros((2 * d.shape[0],) + d.shape[1:], dtype=d.dtype)
    out[_lift_index(n, i)] = d
    return out


def flip_data(d: np.ndarray, i: int, j: int) -> np.ndarray:
    n = depth_of(d.shape[0])
    if i > j:
        i, j = j, i
    _check_slot(i, 1, n)
    _check_slot(j, i + 1, n)
    out = np.empty_like(d)
    out[_flip_index(n, i, j)] = d
    return out


def flatten_data(d: np.ndarray) -> np.ndarray:
    """(2^n, k, *batch) -> (2^n * k, *batch) in descending mask order."""
    return d[::-1].reshape((d.shape[0] * d.shape[1],) + d.shape[2:])


def unflatten_data(flat: np.ndarray, depth: int) -> np.ndarray:
    rows = 1 << depth
    if flat.shape[0] % rows:
        raise DimensionMismatch(f"length {flat.shape[0]} not divisible by {rows}")
    k = flat.shape[0] // rows
    return flat.reshape((rows, k) + flat.shape[1:])[::-1]


def absorb(d: np.ndarray, m: int) -> np.ndarray:
    """View a depth n+m tower over R^k as a depth n tower over T^m(R^k) = R^(2^m k)."""
    rows, k = d.shape[0], d.shape[1]
    outer = rows >> m
    x = d.reshape((outer, 1 << m, k) + d.shape[2:])[:, ::-1]
    return x.reshape((outer, (1 << m) * k) + d.shape[2:])


def expand(d: np.ndarray, m: int) -> np.ndarray:
    """Inverse of :func:`absorb`."""
    outer, width = d.shape[0], d.shape[1]
    k = width >> m
    if k << m != width:
        raise DimensionMismatch(f"width {width} not divisible by 2^{m}")
    x = d.reshape((outer, 1 << m, k) + d.shape[2:])[:, ::-1]
    return x.reshape((outer << m, k) + d.shape[2:])


# -- flat linear maps ---------------------------------------------------------

def _matrix(fn, k: int, n: int, width_in: int) -> np.ndarray:
    eye = np.eye(width_in)
    if width_in == (1 << n) * k:
        out = fn(unflatten_data(eye, n))
    else:  # pair layout: two flat towers side by side
        half = width_in // 2
        out = fn(unflatten_data(eye[:half], n), unflatten_data(eye[half:], n))
    return flatten_data(out)


def proj_matrix(k: int, n: int, i: int) -> np.ndarray:
    return _matrix(lambda d: proj_data(d, i), k, n, (1 << n) * k)


def zero_matrix(k: int, n: int, i: int) -> np.ndarray:
    return _matrix(lambda d: zero_data(d, i), k, n, (1 << n) * k)


def lift_matrix(k: int, n: int, i: int) -> np.ndarray:
    return _matrix(lambda d: lift_data(d, i), k, n, (1 << n) * k)


def flip_matrix(k: int, n: int, i: int, j: int) -> np.ndarray:
    return _matrix(lambda d: flip_data(d, i, j), k, n, (1 << n) * k)


def neg_matrix(k: int, n: int, i: int) -> np.ndarray:
    return _matrix(lambda d: neg_data(d, i), k, n, (1 << n) * k)


def add_matrix(k: int, n: int, i: int, sign: float = 1.0) -> np.ndarray:
    """Fibrewise sum of a pair ``(t1, t2)`` laid out as two flat towers.

    Components outside slot ``i`` are read from ``t1``.
    """
    def fn(a, b):
        rows = _slot_rows(n, i)
        out = a.copy()
        out[rows] += sign * b[rows]
        return out
    return _matrix(fn, k, n, 2 * (1 << n) * k)


def interchange_matrix(n: int, dims: tuple[int, ...]) -> np.ndarray:
    """Permutation from (T^n A_1 flat, ..., T^n A_r flat) to T^n(A_1 x ... x A_r) flat."""
    rows = 1 << n
    total = sum(dims)
    perm = np.zeros((rows * total, rows * total))
    src = 0
    offset = 0
    for k in dims:
        for block in range(rows):  # descending order position
            for c in range(k):
                perm[block * total + offset + c, src] = 1.0
                src += 1
        offset += k
    return perm


# -- value type ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TangentTower:
    """An element of T^n(R^k) stored as a (2^n, k) array in mask order."""

    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        if comps.ndim != 2:
            raise DimensionMismatch("components must be a 2-d array")
        depth_of(comps.shape[0])
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @property
    def depth(self) -> int:
        return depth_of(self.components.shape[0])

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    @classmethod
    def from_flat(cls, flat, depth: int) -> "TangentTower":
        flat = np.asarray(flat, dtype=float).ravel()
        return cls(unflatten_data(flat, depth).copy())

    @classmethod
    def from_subsets(cls, parts: dict, depth: int) -> "TangentTower":
        """Build from ``{frozenset_of_slots: vector}``; missing subsets are zero."""
        k = len(np.atleast_1d(next(iter(parts.values()))))
        comps = np.zeros((1 << depth, k))
        for subset, vec in parts.items():
            mask = sum(1 << (s - 1) for s in subset)
            comps[mask] = vec
        return cls(comps)

    def component(self, subset) -> np.ndarray:
        return self.components[sum(1 << (s - 1) for s in subset)]

    def flatten(self) -> np.ndarray:
        return flatten_data(self.components).copy()

    def proj(self, i: int) -> "TangentTower":
        return TangentTower(proj_data(self.components, i))

    def zero(self, i: int) -> "TangentTower":
        return TangentTower(zero_data(self.components, i))

    def add(self, other: "TangentTower", i: int) -> "TangentTower":
        return TangentTower(add_data(self.components, other.components, i))

    def neg(self, i: int) -> "TangentTower":
        return TangentTower(neg_data(self.components, i))

    def lift(self, i: int) -> "TangentTower":
        return TangentTower(lift_data(self.components, i))

    def flip(self, i: int, j: int) -> "TangentTower":
        return TangentTower(flip_data(self.components, i, j))

    def __eq__(self, other) -> bool:
        return isinstance(other, TangentTower) and np.array_equal(self.components, other.components)

    def __repr__(self) -> str:
        return f"TangentTower(depth={self.depth}, dim={self.dim}, flat={self.flatten().tolist()})"


def t_proj(t: TangentTower, i: int) -> TangentTower:
    return t.proj(i)


def t_zero(t: TangentTower, i: int) -> TangentTower:
    return t.zero(i)


def t_add(t1: TangentTower, t2: TangentTower, i: int) -> TangentTower:
    return t1.add(t2, i)


def t_lift(t: TangentTower, i: int) -> TangentTower:
    return t.lift(i)


def t_flip(t: TangentTower, i: int, j: int) -> TangentTower:
    return t.flip(i, j)
