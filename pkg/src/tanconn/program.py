"""Resolution of a parsed DSL program into named geometric objects.

Bundle constructors::

    tangent(S)  t(B)  pullback(f, B)  whitney(B1, B2)  finsler(B)  trivial(a, S)  diffobject(n)

Connection constructors::

    christoffel(n) { psi = (...); }    flat(n)    diffobject(n)    sphere(n)
    derive_h(K, J)   # H from the vertical part of K and a horizontal J
    derive_k(C)      # K from the horizontal part of C
    tconn(C)   pullback(f, C)

Plain maps double as curves (``R(1) -> M``) and as fixed vectors (``R(0) -> X``).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import bundle as bd
from . import connection as cn
from .errors import DimensionMismatch, ParseError, TanconnError
from .smap import expr as ex
from .smap.maps import ExprMap, SmoothMap, normalize
from .smap.parser import (BundleDecl, Call, ConnectionDecl, Euclidean as EuclideanAST, MapDecl,
                          Name, ProgramAST, SpaceDecl, SpaceRef, parse_program)
from .space import Euclidean, Space, Submanifold, TangentSpace, sphere


@dataclass
class Program:
    ast: ProgramAST
    spaces: dict[str, Space] = field(default_factory=dict)
    maps: dict[str, SmoothMap] = field(default_factory=dict)
    bundles: dict[str, bd.DifferentialBundle] = field(default_factory=dict)
    connections: dict[str, cn.Connection] = field(default_factory=dict)
    kinds: dict[str, str] = field(default_factory=dict)  # declaration order

    def names(self) -> list[tuple[str, str]]:
        return list(self.kinds.items())

    def get(self, name: str, kind: str | None = None):
        table = {"space": self.spaces, "map": self.maps, "bundle": self.bundles,
                 "connection": self.connections}
        found = self.kinds.get(name)
        if found is None or (kind is not None and found != kind):
            want = kind or "object"
            raise KeyError(f"no {want} named {name!r}")
        return table[found][name]


class _Resolver:
    def __init__(self, ast: ProgramAST):
        self.prog = Program(ast)

    def error(self, node, message: str):
        raise ParseError(message, getattr(node, "line", 0), getattr(node, "col", 0))

    def declare(self, node, name: str, kind: str):
        if name in self.prog.kinds:
            self.error(node, f"{name!r} is already declared")
        self.prog.kinds[name] = kind

    def run(self) -> Program:
        for d in self.prog.ast.decls:
            try:
                if isinstance(d, SpaceDecl):
                    self.space_decl(d)
                elif isinstance(d, MapDecl):
                    self.map_decl(d)
                elif isinstance(d, BundleDecl):
                    self.declare(d, d.name, "bundle")
                    self.prog.bundles[d.name] = self.bundle_expr(d.body, d.name)
                else:
                    self.declare(d, d.name, "connection")
                    self.prog.connections[d.name] = self.connection_expr(d.body, d.name)
            except ParseError:
                raise
            except TanconnError as exc:
                self.error(getattr(exc, "node", None) or d, f"in {d.name!r}: {exc}")
        return self.prog

    # spaces and maps ---------------------------------------------------------
    def space_decl(self, d: SpaceDecl):
        self.declare(d, d.name, "space")
        b = d.body
        if isinstance(b, EuclideanAST):
            self.prog.spaces[d.name] = Euclidean(b.dim, name=d.name)
            return
        for e in b.constraints:
            self.check_expr(d, e, b.ambient)
        cons = ExprMap(b.constraints, b.ambient, name=f"{d.name}.constraint")
        if b.retraction == "normalize":
            ret = normalize(b.ambient)
        else:
            ret = self.lookup_map(d, b.retraction)
        if (ret.in_dim, ret.out_dim) != (b.ambient, b.ambient):
            self.error(b, f"retraction {b.retraction!r} must map R({b.ambient}) -> R({b.ambient})")
        self.prog.spaces[d.name] = Submanifold(b.ambient, cons, ret, name=d.name)

    def space_ref(self, node, r: SpaceRef) -> Space:
        if r.kind == "R":
            return Euclidean(r.value)
        if r.kind == "T":
            return TangentSpace(self.space_ref(node, r.value))
        if self.prog.kinds.get(r.value) != "space":
            self.error(node, f"unknown space {r.value!r}")
        return self.prog.spaces[r.value]

    def check_expr(self, node, e: ex.Expr, arity: int) -> int:
        top = ex.max_index(e)
        if top >= arity:
            self.error(node, f"component index x[{top}] out of range for input arity {arity}")
        try:
            return ex.width(e)
        except DimensionMismatch as exc:
            self.error(node, str(exc))

    def map_decl(self, d: MapDecl):
        self.declare(d, d.name, "map")
        src, dst = self.space_ref(d, d.source), self.space_ref(d, d.target)
        out = sum(self.check_expr(d, e, src.dim) for e in d.exprs)
        if out != dst.dim:
            self.error(d, f"arity mismatch: {d.name!r} produces {out} components, "
                          f"target has dimension {dst.dim}")
        f = ExprMap(d.exprs, src.dim, name=d.name)
        f.source, f.target = src, dst
        self.prog.maps[d.name] = f

    def lookup_map(self, node, name: str) -> SmoothMap:
        if self.prog.kinds.get(name) != "map":
            self.error(node, f"unknown map {name!r}")
        return self.prog.maps[name]

    # arguments ---------------------------------------------------------------
    def arity(self, c: Call, *counts: int):
        if len(c.args) not in counts:
            want = " or ".join(str(n) for n in counts)
            self.error(c, f"{c.func}() takes {want} argument(s), got {len(c.args)}")

    def int_arg(self, c: Call, i: int) -> int:
        a = c.args[i]
        if not isinstance(a, int):
            self.error(c, f"argument {i + 1} of {c.func}() must be an integer")
        return a

    def name_arg(self, c: Call, i: int, kind: str):
        a = c.args[i]
        if isinstance(a, Call):
            if kind == "bundle":
                return self.bundle_expr(a)
            if kind == "connection":
                return self.connection_expr(a)
            self.error(a, f"argument {i + 1} of {c.func}() must name a {kind}")
        if not isinstance(a, Name):
            self.error(c, f"argument {i + 1} of {c.func}() must name a {kind}")
        if a.name not in self.prog.kinds:
            self.error(a, f"unknown identifier {a.name!r}")
        if self.prog.kinds[a.name] != kind:
            self.error(a, f"{a.name!r} is a {self.prog.kinds[a.name]}, expected a {kind}")
        return self.prog.get(a.name, kind)

    def no_options(self, c: Call):
        if c.options:
            self.error(c, f"{c.func}() takes no options")

    # bundles -----------------------------------------------------------------
    def bundle_expr(self, c: Call, name: str = "") -> bd.DifferentialBundle:
        self.no_options(c)
        f = c.func
        if f == "tangent":
            self.arity(c, 1)
            return bd.tangent_bundle(self.space_arg(c, 0), name)
        if f == "t":
            self.arity(c, 1)
            return bd.t_of_bundle(self.name_arg(c, 0, "bundle"), name)
        if f == "pullback":
            self.arity(c, 2)
            g = self.name_arg(c, 0, "map")
            return bd.pullback_bundle(g, self.name_arg(c, 1, "bundle"), getattr(g, "source", None), name)
        if f == "whitney":
            self.arity(c, 2)
            return bd.whitney_sum(self.name_arg(c, 0, "bundle"), self.name_arg(c, 1, "bundle"), name)
        if f == "finsler":
            self.arity(c, 1)
            return bd.finsler_bundle(self.name_arg(c, 0, "bundle"), name)
        if f == "trivial":
            self.arity(c, 2)
            return bd.trivial_bundle(self.int_arg(c, 0), self.space_arg(c, 1), name)
        if f == "diffobject":
            self.arity(c, 1)
            return bd.differential_object(self.int_arg(c, 0), name)
        self.error(c, f"unknown bundle constructor {f!r}")

    def space_arg(self, c: Call, i: int) -> Space:
        a = c.args[i]
        if isinstance(a, int):
            return Euclidean(a)
        if isinstance(a, Call) and a.func == "sphere":
            self.arity(a, 1)
            return sphere(self.int_arg(a, 0))
        return self.name_arg(c, i, "space")

    # connections -------------------------------------------------------------
    def connection_expr(self, c: Call, name: str = "") -> cn.Connection:
        f = c.func
        if f == "christoffel":
            self.arity(c, 1)
            n = self.int_arg(c, 0)
            opts = dict(c.options)
            if set(opts) - {"psi"}:
                self.error(c, "christoffel() accepts only the option 'psi'")
            exprs = opts.get("psi", (ex.Num(0.0),) * n ** 3)
            width = sum(self.check_expr(c, e, n) for e in exprs)
            if width != n ** 3:
                self.error(c, f"psi needs {n ** 3} components for R({n}), got {width}")
            data = cn.ChristoffelData(n, ExprMap(exprs, n, name="psi"))
            return self.named(cn.christoffel_connection(data), name)
        self.no_options(c)
        if f == "flat":
            self.arity(c, 1)
            return self.named(cn.canonical_affine_connection(self.int_arg(c, 0)), name)
        if f == "diffobject":
            self.arity(c, 1)
            return self.named(cn.canonical_connection_diff_object(self.int_arg(c, 0)), name)
        if f == "sphere":
            self.arity(c, 1)
            return self.named(cn.sphere_connection(self.int_arg(c, 0)), name)
        if f == "derive_h":
            self.arity(c, 2)
            k = self.name_arg(c, 0, "connection")
            j = self.name_arg(c, 1, "connection")
            if (j.bundle.k, j.bundle.m) != (k.bundle.k, k.bundle.m):
                self.error(c, "derive_h() needs both connections on the same bundle")
            h = cn.HorizontalConnection(k.bundle, j.H, name=j.horizontal.name)
            return self.named(cn.horizontal_from_vertical(k.vertical, h), name)
        if f == "derive_k":
            self.arity(c, 1)
            return self.named(cn.vertical_from_horizontal(self.name_arg(c, 0, "connection").horizontal), name)
        if f == "tconn":
            self.arity(c, 1)
            return self.named(cn.t_of_connection(self.name_arg(c, 0, "connection")), name)
        if f == "pullback":
            self.arity(c, 2)
            g = self.name_arg(c, 0, "map")
            return self.named(cn.pullback_connection(g, self.name_arg(c, 1, "connection"),
                                                     getattr(g, "source", None)), name)
        self.error(c, f"unknown connection constructor {f!r}")

    @staticmethod
    def named(c: cn.Connection, name: str) -> cn.Connection:
        return dataclasses.replace(c, name=name) if name else c


def load(text: str) -> Program:
    """Parse and resolve ``text``; every error is a positioned :class:`ParseError`."""
    return _Resolver(parse_program(text)).run()


def load_file(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return load(fh.read())


def vector_of(prog: Program, name_or_values: str, dim: int) -> np.ndarray:
    """A fixed vector: a declared ``R(0) -> X`` map or a comma-separated literal."""
    if name_or_values in prog.maps:
        f = prog.maps[name_or_values]
        if f.in_dim != 0:
            raise DimensionMismatch(f"{name_or_values!r} takes inputs; a constant map from R(0) is needed")
        vec = f(np.zeros(0))
    else:
        try:
            vec = np.array([float(v) for v in name_or_values.split(",")])
        except ValueError:
            raise KeyError(f"no vector named {name_or_values!r}") from None
    if vec.size != dim:
        raise DimensionMismatch(f"vector has {vec.size} components, expected {dim}")
    return vec
