import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tanconn.axioms import random_map_source, random_maps
from tanconn.errors import DimensionMismatch, DomainError
from tanconn.smap import (ExprMap, compose, constant, eval_tower, flip_map, identity, inject,
                          lift_map, p_map, pair, parse_expr, select, tangent, twist, zero_map)
from tanconn.tower import TangentTower

square = ExprMap([parse_expr("x[0]*x[0]")], 1, name="square")


def second_order_square(w, v, y, x):
    """Hand-derived T^2 of x^2 in (w, v, y, x) order."""
    return [2 * x * w + 2 * v * y, 2 * x * v, 2 * x * y, x * x]


def test_square_on_depth_one():
    assert eval_tower(square, TangentTower.from_flat([1, 2], 1)).flatten().tolist() == [4, 4]
    assert tangent(square)([1.0, 2.0]).tolist() == [4, 4]


def test_square_on_depth_two():
    want = second_order_square(0, 1, 1, 2)
    assert want == [2, 4, 4, 4]
    got = eval_tower(square, TangentTower.from_flat([0, 1, 1, 2], 2)).flatten()
    assert got.tolist() == want
    assert tangent(square, 2)([0.0, 1.0, 1.0, 2.0]).tolist() == want


def test_depth_two_against_nested_depth_one(rng):
    f = random_maps(7, 1)[0]
    pts = rng.normal(size=(16, 4 * f.in_dim))
    nested = tangent(tangent(f))(pts)
    direct = np.stack([eval_tower(f, TangentTower.from_flat(p, 2)).flatten() for p in pts])
    assert np.max(np.abs(nested - direct)) <= 1e-12


def test_depth_two_against_finite_differences(rng):
    for w, v, y, x in rng.normal(size=(8, 4)):
        got = tangent(square, 2)([w, v, y, x])
        assert np.allclose(got, second_order_square(w, v, y, x), atol=1e-12)


def test_identity_is_a_no_op(rng):
    t = TangentTower(rng.normal(size=(8, 3)))
    assert eval_tower(identity(3), t) == t


def test_twist_and_pairs():
    tau = pair(select(2, [1]), select(2, [0]))
    assert tau([1.0, 2.0]).tolist() == [2, 1]
    assert twist(1, 1)([1.0, 2.0]).tolist() == [2, 1]
    assert inject([1, 2], 1)([5.0, 6.0]).tolist() == [0, 5, 6]
    assert constant([3.0, 4.0], 2)([9.0, 9.0]).tolist() == [3, 4]


def test_compose_with_identity(rng):
    f = random_maps(3, 1)[0]
    pts = rng.normal(size=(10, f.in_dim))
    assert np.array_equal(compose(f, identity(f.out_dim))(pts), f(pts))


def test_U_built_from_pieces_matches_bundle():
    from tanconn.bundle import tangent_bundle
    from tanconn.space import Euclidean
    b = tangent_bundle(Euclidean(1))
    U = pair(tangent(b.q), p_map(2))
    xi = np.array([1.0, 2.0, 3.0, 4.0])
    assert U(xi).tolist() == b.U(xi).tolist() == [2, 4, 3, 4]


def test_structural_maps_are_linear_golden():
    assert lift_map(1)([3.0, 5.0]).tolist() == [3, 0, 0, 5]
    assert zero_map(1)([5.0]).tolist() == [0, 5]
    assert flip_map(1, 2)([1.0, 2.0, 3.0, 4.0]).tolist() == [1, 3, 2, 4]


def test_dimension_errors():
    with pytest.raises(DimensionMismatch):
        ExprMap([parse_expr("x[1]")], 1)
    with pytest.raises(DimensionMismatch):
        compose(square, identity(2))
    with pytest.raises(DimensionMismatch):
        square([1.0, 2.0])


def test_domain_errors_name_the_node():
    recip = ExprMap([parse_expr("1 / x[0]")], 1)
    with pytest.raises(DomainError) as err:
        recip([0.0])
    assert "/" in repr(err.value.node)
    with pytest.raises(DomainError):
        ExprMap([parse_expr("sqrt(x[0])")], 1)([-1.0])


def test_sqrt_checks_only_the_base_component():
    root = ExprMap([parse_expr("sqrt(x[0])")], 1)
    # base 4, tangent -100: fine, d sqrt = v / (2 sqrt x)
    assert np.allclose(tangent(root)([-100.0, 4.0]), [-25.0, 2.0])


def _random_map(rng, a, b):
    return ExprMap([parse_expr(src) for src in random_map_source(rng, a, b)], a)


@settings(max_examples=64, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 2), st.integers(1, 3), st.integers(1, 3),
       st.integers(1, 3))
def test_functoriality(seed, depth, a, b, c):
    rng = np.random.default_rng(seed)
    f, g = _random_map(rng, a, b), _random_map(rng, b, c)
    pts = rng.uniform(-1, 1, size=(4, a << depth))
    lhs = tangent(compose(f, g), depth)(pts)
    rhs = tangent(g, depth)(tangent(f, depth)(pts))
    scale = max(1.0, float(np.max(np.abs(rhs))))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale
