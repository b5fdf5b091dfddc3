"""Expression trees for the map DSL and their evaluation on towers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .. import nilpotent as nil
from ..errors import DimensionMismatch, DomainError


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Slice:
    start: int
    stop: int


@dataclass(frozen=True)
class Unary:
    op: str  # sin cos exp sqrt neg
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Vec:
    items: tuple


@dataclass(frozen=True)
class Dot:
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, Slice, Unary, Binary, Pow, Vec, Dot]

UNARY_OPS = ("sin", "cos", "exp", "sqrt", "neg")


def width(e: Expr) -> int:
    """Number of output components of ``e``."""
    if isinstance(e, (Num, Var)):
        return 1
    if isinstance(e, Slice):
        return e.stop - e.start
    if isinstance(e, Unary):
        return width(e.arg)
    if isinstance(e, Pow):
        return width(e.base)
    if isinstance(e, Binary):
        a, b = width(e.left), width(e.right)
        if a != b and 1 not in (a, b):
            raise DimensionMismatch(f"operands of '{e.op}' have widths {a} and {b}")
        return max(a, b)
    if isinstance(e, Vec):
        return sum(width(i) for i in e.items)
    if isinstance(e, Dot):
        a, b = width(e.left), width(e.right)
        if a != b:
            raise DimensionMismatch(f"dot of widths {a} and {b}")
        return 1
    raise TypeError(f"not an expression: {e!r}")


def max_index(e: Expr) -> int:
    """Largest input component referenced, or -1."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Slice):
        return e.stop - 1
    if isinstance(e, Num):
        return -1
    if isinstance(e, Unary):
        return max_index(e.arg)
    if isinstance(e, Pow):
        return max_index(e.base)
    if isinstance(e, (Binary, Dot)):
        return max(max_index(e.left), max_index(e.right))
    if isinstance(e, Vec):
        return max((max_index(i) for i in e.items), default=-1)
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, x: np.ndarray) -> np.ndarray:
    """Evaluate on ``x`` of shape (2^n, in_dim, *batch) -> (2^n, width, *batch)."""
    if isinstance(e, Var):
        return x[:, e.index:e.index + 1]
    if isinstance(e, Slice):
        return x[:, e.start:e.stop]
    if isinstance(e, Num):
        out = np.zeros((x.shape[0], 1) + x.shape[2:])
        out[0] = e.value
        return out
    if isinstance(e, Unary):
        a = evaluate(e.arg, x)
        if e.op == "neg":
            return -a
        if e.op == "sqrt":
            return nil.sqrt(a, node=e)
        return getattr(nil, e.op)(a)
    if isinstance(e, Binary):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return nil.mul(a, b)
        if e.op == "/":
            return nil.mul(a, nil.recip(b, node=e))
        raise ValueError(e.op)
    if isinstance(e, Pow):
        return nil.power(evaluate(e.base, x), e.exponent, node=e)
    if isinstance(e, Vec):
        return np.concatenate([evaluate(i, x) for i in e.items], axis=1)
    if isinstance(e, Dot):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        return nil.mul(a, b).sum(axis=1, keepdims=True)
    raise TypeError(f"not an expression: {e!r}")


__all__ = ["Num", "Var", "Slice", "Unary", "Binary", "Pow", "Vec", "Dot", "Expr",
           "UNARY_OPS", "width", "max_index", "evaluate", "DomainError"]
