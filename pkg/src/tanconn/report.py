"""Residual reports shared by the checkers and the command line."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .smap.maps import SmoothMap


@dataclass
class ReportItem:
    equation: str
    max_residual: float | None
    worst_point: list
    passed: bool
    kind: str = "residual"  # "residual", "min_singular_value", "measure", "ill-typed"
    note: str = ""

    def to_dict(self) -> dict:
        d = {"equation": self.equation, "max_residual": self.max_residual,
             "worst_point": self.worst_point}
        if self.kind != "residual":
            d["kind"] = self.kind
        if self.note:
            d["note"] = self.note
        d["pass"] = self.passed
        return d


@dataclass
class Report:
    title: str
    tol: float
    items: list[ReportItem] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def __getitem__(self, equation: str) -> ReportItem:
        for item in self.items:
            if item.equation == equation:
                return item
        raise KeyError(equation)

    def residual(self, equation: str) -> float:
        return self[equation].max_residual

    def max_residual(self) -> float:
        vals = [i.max_residual for i in self.items if i.kind == "residual" and i.max_residual is not None]
        return max(vals, default=0.0)

    def extend(self, other: "Report", prefix: str = "") -> "Report":
        for item in other.items:
            self.items.append(ReportItem(prefix + item.equation, item.max_residual, item.worst_point,
                                         item.passed, item.kind, item.note))
        return self

    def failures(self) -> list[str]:
        return [i.equation for i in self.items if not i.passed]

    def __str__(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'} (tol {self.tol:g})"]
        for i in self.items:
            val = "n/a" if i.max_residual is None else f"{i.max_residual:.3e}"
            lines.append(f"  {'ok  ' if i.passed else 'FAIL'} {i.equation:<28} {val}")
        return "\n".join(lines)


def row_residuals(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape != b.shape:
        raise ValueError(f"compared values have shapes {a.shape} and {b.shape}")
    if a.shape[1] == 0:
        return np.zeros(a.shape[0])
    return np.max(np.abs(a - b), axis=1)


def item_from_rows(equation: str, rows: np.ndarray, points: np.ndarray, tol: float) -> ReportItem:
    rows = np.where(np.isfinite(rows), rows, np.inf)
    j = int(np.argmax(rows)) if rows.size else 0
    worst = float(rows[j]) if rows.size else 0.0
    point = points[j].tolist() if rows.size else []
    return ReportItem(equation, worst, point, bool(worst <= tol))


def compare(equation: str, lhs: SmoothMap | Callable, rhs: SmoothMap | Callable,
            points: np.ndarray, tol: float) -> ReportItem:
    """Max over rows of |lhs(x) - rhs(x)|_inf."""
    return item_from_rows(equation, row_residuals(lhs(points), rhs(points)), points, tol)
