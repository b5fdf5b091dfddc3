"""Command-line front end: ``tanconn FILE COMMAND [ARGS] [options]``.

Exit status is 0 when every residual is within tolerance, 1 when a check
fails and 2 on parse or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .axioms import axiom_suite
from .bundle import DifferentialBundle, Samples, check_bundle
from .connection import Connection, check_full, decompose, reconstruct
from .errors import (BasePointMismatch, DimensionMismatch, LoopNotClosed, NotAffine, ParseError,
                     TanconnError)
from .geometry import almost_complex_residual, bianchi_residuals, curvature_report, flip_equivariance, torsion_report
from .program import Program, load_file, vector_of
from .report import Report, compare, item_from_rows, row_residuals
from .space import TangentSpace
from .transport import CurveObject, lifted_curve, parallel_transport, verify_parallel

COMMANDS = {"check": 1, "curvature": 1, "torsion": 1, "bianchi": 1, "decompose": 1,
            "almost-complex": 1, "transport": 3, "axioms": 0, "suite": 0}
CONFIG_ERRORS = (ParseError, DimensionMismatch, NotAffine, BasePointMismatch, LoopNotClosed)


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    input: str
    command: str | None
    args: tuple = ()
    samples: int = 64
    seed: int = 42
    tol: float = 1e-8
    steps: int = 4096
    format: str = "json"
    out: str | None = None
    interval: tuple = (0.0, 2 * math.pi)
    list_objects: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"--tol must be positive, got {self.tol}")
        if self.samples < 1:
            raise ConfigError(f"--samples must be at least 1, got {self.samples}")
        if self.steps < 2:
            raise ConfigError(f"--steps must be at least 2, got {self.steps}")
        if self.command is None and not self.list_objects:
            raise ConfigError("a command is required (or --list)")
        if self.command is not None:
            if self.command not in COMMANDS:
                raise ConfigError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
            if len(self.args) != COMMANDS[self.command]:
                raise ConfigError(f"{self.command} takes {COMMANDS[self.command]} argument(s), "
                                  f"got {len(self.args)}")


@dataclass
class Outcome:
    command: str
    report: Report
    extra: dict


# -- commands --------------------------------------------------------------------

def _connection(prog: Program, name: str) -> Connection:
    try:
        return prog.get(name, "connection")
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None


def _check(prog: Program, name: str, cfg: RunConfig, s: Samples) -> Report:
    kind = prog.kinds.get(name)
    if kind == "bundle":
        return check_bundle(prog.bundles[name], s, cfg.tol)
    if kind == "connection":
        return check_full(prog.connections[name], s, cfg.tol)
    raise ConfigError(f"no bundle or connection named {name!r}")


def _decompose(c: Connection, cfg: RunConfig, s: Samples) -> Report:
    xi = s(TangentSpace(c.bundle.total))
    e0, t, e1 = decompose(c, xi)
    back = reconstruct(c, e0, t, e1, tol=max(cfg.tol, 1e-6))
    return Report("decomposition", cfg.tol, [item_from_rows("reconstruct(decompose)=1",
                                                            row_residuals(back, xi), xi, cfg.tol)])


def _almost_complex(c: Connection, cfg: RunConfig, s: Samples) -> Report:
    rep = almost_complex_residual(c, s, cfg.tol)
    flip = flip_equivariance(c, s, cfg.tol)
    item = flip["Hc=tauH"]
    item.kind, item.passed = "measure", True
    item.note = "zero exactly when the connection is torsion-free"
    return rep.extend(flip)


def _transport(prog: Program, args, cfg: RunConfig) -> tuple[Report, dict]:
    cname, gname, ename = args
    c = _connection(prog, cname)
    if prog.kinds.get(gname) != "map":
        raise ConfigError(f"no curve named {gname!r}")
    gamma = prog.maps[gname]
    if gamma.in_dim != 1 or gamma.out_dim != c.bundle.m:
        raise ConfigError(f"curve {gname!r} must map R(1) into the base (dimension {c.bundle.m})")
    try:
        e0 = vector_of(prog, ename, c.bundle.k)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    curve = CurveObject(*cfg.interval)
    traj = parallel_transport(c, gamma, e0, curve, cfg.steps)
    rep = verify_parallel(c, gamma, e0, traj, tol=max(cfg.tol, 1e-6))
    final = lifted_curve(traj)[-1]
    closed = bool(np.max(np.abs(gamma([curve.a]) - gamma([curve.b]))) <= 1e-9)
    if closed:
        rep.items.append(item_from_rows("return-to-start", row_residuals(final[None], e0[None]),
                                        final[None], math.inf))
        rep.items[-1].kind = "measure"
    extra = {"initial": e0.tolist(), "final": final.tolist(), "closed": closed,
             "times": traj.times, "states": lifted_curve(traj)}
    return rep, extra


def execute(prog: Program, cfg: RunConfig) -> Outcome:
    s = Samples(cfg.seed, cfg.samples)
    cmd, args = cfg.command, cfg.args
    extra: dict = {}
    if cmd == "check":
        rep = _check(prog, args[0], cfg, s)
    elif cmd == "curvature":
        rep = curvature_report(_connection(prog, args[0]).vertical, s, cfg.tol)
    elif cmd == "torsion":
        rep = torsion_report(_connection(prog, args[0]).vertical, s, cfg.tol)
    elif cmd == "bianchi":
        rep = bianchi_residuals(_connection(prog, args[0]).vertical, s, cfg.tol)
    elif cmd == "decompose":
        rep = _decompose(_connection(prog, args[0]), cfg, s)
    elif cmd == "almost-complex":
        rep = _almost_complex(_connection(prog, args[0]), cfg, s)
    elif cmd == "transport":
        rep, extra = _transport(prog, args, cfg)
    elif cmd == "axioms":
        rep = axiom_suite(s, cfg.seed, min(cfg.tol, 1e-12))
    else:  # suite: every bundle and connection check in declaration order
        rep = Report("suite", cfg.tol)
        for name, kind in prog.names():
            if kind in ("bundle", "connection"):
                rep.extend(_check(prog, name, cfg, s), prefix=f"{name}:")
    return Outcome(" ".join((cmd,) + tuple(args)), rep, extra)


# -- output ----------------------------------------------------------------------

def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, list):
        return [_clean(i) for i in v]
    return v


def render(out: Outcome, cfg: RunConfig) -> str:
    rep = out.report
    if cfg.format == "json":
        doc = {"command": out.command, "input": cfg.input, "seed": cfg.seed, "samples": cfg.samples,
               "tol": cfg.tol, "steps": cfg.steps, "version": __version__,
               "items": [{k: _clean(v) for k, v in i.to_dict().items()} for i in rep.items],
               "pass": rep.passed}
        for key in ("initial", "final", "closed"):
            if key in out.extra:
                doc[key] = out.extra[key]
        return json.dumps(doc, indent=2) + "\n"
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if "states" in out.extra:
            states = out.extra["states"]
            w.writerow(["t"] + [f"e{i}" for i in range(states.shape[1])])
            for t, row in zip(out.extra["times"], states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        else:
            w.writerow(["equation", "max_residual", "pass"])
            for i in rep.items:
                w.writerow([i.equation, "" if i.max_residual is None else repr(i.max_residual),
                            str(i.passed).lower()])
        return buf.getvalue()
    text = f"{out.command}  (seed {cfg.seed}, tanconn {__version__})\n{rep}\n"
    if "final" in out.extra:
        text += "  final: " + " ".join(f"{v:.12g}" for v in out.extra["final"]) + "\n"
    return text


def listing(prog: Program, cfg: RunConfig) -> str:
    rows = prog.names()
    if cfg.format == "json":
        return json.dumps({"input": cfg.input, "version": __version__,
                           "objects": [{"name": n, "kind": k} for n, k in rows]}, indent=2) + "\n"
    if cfg.format == "csv":
        return "name,kind\n" + "".join(f"{n},{k}\n" for n, k in rows)
    return "".join(f"{k:<11} {n}\n" for n, k in rows)


# -- entry point -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _interval(text: str) -> tuple:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a,b but got {text!r}") from None
    return (a, b)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tanconn", description="Check connections written in the tanconn DSL.")
    p.add_argument("file", help="DSL program (UTF-8)")
    p.add_argument("command", nargs="?", help=", ".join(COMMANDS))
    p.add_argument("args", nargs="*")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--format", choices=("json", "csv", "human"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--interval", type=_interval, default=(0.0, 2 * math.pi),
                   help="curve parameter range a,b (default 0,2pi)")
    p.add_argument("--list", action="store_true", dest="list_objects",
                   help="list the named objects in FILE")
    p.add_argument("--version", action="version", version=f"tanconn {__version__}")
    return p


def config_from_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(ns.file, ns.command, tuple(ns.args), ns.samples, ns.seed, ns.tol, ns.steps,
                     ns.format, ns.out, ns.interval, ns.list_objects)


def _emit(text: str, cfg: RunConfig | None):
    if cfg is not None and cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    prog = load_file(cfg.input)
    if cfg.list_objects:
        _emit(listing(prog, cfg), cfg)
        return 0
    out = execute(prog, cfg)
    _emit(render(out, cfg), cfg)
    return 0 if out.report.passed else 1


def main(argv=None) -> int:
    cfg = None
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except (ConfigError, OSError, UnicodeDecodeError) as exc:
        print(f"tanconn: error: {exc}", file=sys.stderr)
        return 2
    except CONFIG_ERRORS as exc:
        where = cfg.input + ":" if cfg and isinstance(exc, ParseError) else ""
        print(f"tanconn: error: {where}{exc}", file=sys.stderr)
        return 2
    except TanconnError as exc:
        print(f"tanconn: check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
