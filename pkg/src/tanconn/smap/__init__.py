"""Expression DSL, its parser, and smooth maps evaluated on towers."""
from .expr import Binary, Dot, Expr, Num, Pow, Slice, Unary, Var, Vec, evaluate
from .maps import (Compose, Constant, ExprMap, Linear, Pair, SmoothMap, Tangent, add_map, block,
                   compose, constant, eval_tower, fibre_sum, flip_map, identity, inject,
                   interchange, lift_map, neg_map, normalize, p_map, pair, product, select,
                   tangent, tpair, tproj, twist, zero_map)
from .parser import expr_source, parse_expr, parse_program, program_source, tokenize


def parse(text: str):
    """Parse and resolve a DSL program into named objects."""
    from ..program import load
    return load(text)


__all__ = [name for name in dir() if not name.startswith("_")]
