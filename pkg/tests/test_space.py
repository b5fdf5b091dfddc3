import numpy as np
import pytest

from tanconn import tower as tw
from tanconn.errors import ConstraintViolation, DimensionMismatch, SamplingFailed
from tanconn.smap import ExprMap, identity, parse_expr
from tanconn.space import (Euclidean, FibreProduct, Submanifold, TangentSpace, sample, sample_array,
                           sphere, validate)

S2 = sphere(2)


def sphere_depth_two_residuals(p):
    """Direct formulas for the four equations cutting out T^2(S^2) in R^12."""
    w, v, y, x = p[0:3], p[3:6], p[6:9], p[9:12]
    return np.array([x @ x - 1, y @ x, v @ x, v @ y + w @ x])


def test_validate_golden():
    assert validate(S2, [0, 0, 1]).report()[0]["residual"] == 0.0
    pt = validate(S2, [1, 0, 0, 0, 0, 1], depth=1)
    assert np.all(pt.residuals == 0)
    with pytest.raises(ConstraintViolation) as err:
        validate(S2, [0, 0, 1, 0, 0, 1], depth=1)
    worst = max(err.value.report, key=lambda r: r["residual"])
    assert worst == {"constraint": 0, "component": 0, "residual": 2.0}


def test_residual_report_schema():
    with pytest.raises(ConstraintViolation) as err:
        validate(S2, [0, 0, 2])
    assert set(err.value.report[0]) == {"constraint", "component", "residual"}


def test_validate_wrong_length():
    with pytest.raises(DimensionMismatch):
        validate(S2, [0, 0, 1, 0], depth=1)


def test_euclidean_sampling_box():
    pts = sample(Euclidean(2), 1, 42, 3)
    assert len(pts) == 3
    assert all(p.coords.shape == (4,) and np.all(np.abs(p.coords) <= 2) for p in pts)


def test_sampling_is_deterministic():
    a = sample_array(S2, 2, 7, 16)
    b = sample_array(S2, 2, 7, 16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_array(S2, 2, 8, 16))


def test_sphere_points_are_unit():
    pts = sample_array(S2, 0, 42, 64)
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1)) <= 1e-12


def test_sphere_depth_two_constraints():
    pts = sample_array(S2, 2, 42, 64)
    res = np.array([sphere_depth_two_residuals(p) for p in pts])
    assert np.max(np.abs(res)) <= 1e-9


def test_structural_ops_preserve_membership():
    pts = sample_array(S2, 2, 3, 32)
    other = sample_array(S2, 2, 4, 32)
    for p, q in zip(pts, other):
        d = tw.unflatten_data(p, 2)
        outs = [tw.proj_data(d, 1), tw.proj_data(d, 2), tw.flip_data(d, 1, 2), tw.lift_data(d, 1),
                tw.lift_data(d, 2), tw.zero_data(d, 3)]
        # a second tower sharing everything outside slot 2
        e = tw.unflatten_data(q, 2).copy()
        e[[0, 1]] = d[[0, 1]]
        e[2] = e[2] - (e[2] @ d[0]) * d[0]  # v tangent at x
        e[3] = -(e[2] @ d[1]) * d[0]          # fix w.x + v.y = 0
        outs.append(tw.add_data(d, e, 2))
        for o in outs:
            n = tw.depth_of(o.shape[0])
            validate(S2, tw.flatten_data(o), n)


def test_fibre_product_constraint():
    a = Euclidean(2)
    fp = FibreProduct(a, ExprMap([parse_expr("x[0]")], 2), a, ExprMap([parse_expr("x[1]")], 2))
    validate(fp, [3, 1, 5, 3])
    with pytest.raises(ConstraintViolation):
        validate(fp, [3, 1, 5, 4])
    pts = sample_array(fp, 1, 1, 8)
    assert np.max(np.abs(residual_rows(fp, pts))) <= 1e-9


def residual_rows(space, pts):
    return [validate(space, p, 1).residuals for p in pts]


def test_bad_retraction_fails_sampling():
    cons = ExprMap([parse_expr("dot(x[0:2], x[0:2]) - 1")], 2)
    never = Submanifold(2, cons, ExprMap([parse_expr("x[0] + 3"), parse_expr("x[1]")], 2))
    with pytest.raises(SamplingFailed):
        sample_array(never, 0, 0, 4)


def test_submanifold_arity_checked():
    with pytest.raises(DimensionMismatch):
        Submanifold(3, ExprMap([parse_expr("x[0]")], 2), identity(3))


def test_tangent_space_dims():
    assert TangentSpace(S2, 2).dim == 12
    assert sample_array(TangentSpace(S2), 1, 0, 4).shape == (4, 12)
