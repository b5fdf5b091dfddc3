import numpy as np
import pytest

from tanconn import bundle as bd
from tanconn.bundle import (BracketMap, DifferentialBundle, LinearMorphism, bracket, check_bundle,
                            check_lambda2, check_linear, universality_check)
from tanconn.connection import (canonical_affine_connection, complement_of_horizontal,
                                sphere_connection)
from tanconn.errors import PreconditionFailed, RankDeficient
from tanconn.smap import ExprMap, Linear, compose, identity, parse_expr, zero_map, p_map
from tanconn.space import Euclidean, sphere

R1, R2, S2 = Euclidean(1), Euclidean(2), sphere(2)
circle_curve = ExprMap([parse_expr(s) for s in ("cos(x[0])", "sin(x[0])", "0")], 1, name="gamma")

CONSTRUCTIONS = {
    "tangent R1": lambda: bd.tangent_bundle(R1),
    "tangent R2": lambda: bd.tangent_bundle(R2),
    "tangent S2": lambda: bd.tangent_bundle(S2),
    "T of tangent R1": lambda: bd.t_of_bundle(bd.tangent_bundle(R1)),
    "T of tangent S2": lambda: bd.t_of_bundle(bd.tangent_bundle(S2)),
    "pullback along curve": lambda: bd.pullback_bundle(circle_curve, bd.tangent_bundle(S2), R1),
    "whitney R1": lambda: bd.whitney_sum(bd.tangent_bundle(R1), bd.tangent_bundle(R1)),
    "finsler R2": lambda: bd.finsler_bundle(bd.tangent_bundle(R2)),
    "finsler S2": lambda: bd.finsler_bundle(bd.tangent_bundle(S2)),
    "trivial": lambda: bd.trivial_bundle(2, S2),
    "differential object": lambda: bd.differential_object(3),
}


@pytest.mark.parametrize("name", list(CONSTRUCTIONS))
def test_constructions_are_bundles(name, samples):
    b = CONSTRUCTIONS[name]()
    rep = check_bundle(b, samples, 1e-9)
    assert rep.passed, str(rep)


def test_tangent_of_line_is_exact(samples):
    rep = check_bundle(bd.tangent_bundle(R1), samples, 1e-12)
    assert rep.passed and rep.max_residual() <= 1e-12


def test_whitney_fibre_dimension():
    assert len(bd.whitney_sum(bd.tangent_bundle(R1), bd.tangent_bundle(R1)).fibre) == 2


def test_t_of_bundle_lift_golden():
    b = bd.t_of_bundle(bd.tangent_bundle(R1))
    # T(l) gives (1,0,0,2,3,0,0,4); the flip of slots 2,3 then gives (1,0,3,0,0,2,0,4)
    assert b.lift([1.0, 2.0, 3.0, 4.0]).tolist() == [1, 0, 3, 0, 0, 2, 0, 4]


def test_corrupted_lift_is_caught(samples):
    b = bd.tangent_bundle(R1)
    double_base = Linear(np.diag([1.0, 1.0, 1.0, 2.0]))
    bad = DifferentialBundle(b.total, b.base, b.q, b.plus, b.zero, compose(b.lift, double_base),
                             b.fibre)
    rep = check_bundle(bad, samples, 1e-9)
    assert not rep["lift-lift"].passed
    assert rep.residual("lift-lift") >= 0.1


def test_mu_golden():
    b = bd.tangent_bundle(R1)
    assert b.mu([2.0, 5.0, 3.0, 5.0]).tolist() == [2, 0, 3, 5]


def test_mu_then_p_is_second_projection(samples):
    b = bd.tangent_bundle(S2)
    pts = samples(b.e2)
    assert np.max(np.abs(compose(b.mu, p_map(b.k))(pts) - pts[:, b.k:])) <= 1e-12


def test_universality_rank():
    assert universality_check(bd.tangent_bundle(R2)).passed
    assert universality_check(bd.tangent_bundle(S2)).passed
    b = bd.tangent_bundle(R1)
    dead = DifferentialBundle(b.total, b.base, b.q, b.plus, b.zero,
                              compose(b.q, zero_map(1), bd.tangent(b.zero)), b.fibre)
    with pytest.raises(RankDeficient):
        universality_check(dead, raise_on_fail=True)


def test_bracket_of_lift_is_identity(samples):
    b = bd.tangent_bundle(S2)
    pts = samples(b.total)
    e, e2 = bracket(b, b.lift, pts)
    assert np.max(np.abs(e - pts)) <= 1e-12
    assert np.max(np.abs(b.mu(e2) - b.lift(pts))) <= 1e-12


def test_bracket_equals_fK(samples):
    c = sphere_connection(2)
    b = c.bundle
    pts = samples(b.e2)
    got = BracketMap(b, b.mu)(pts)
    assert np.max(np.abs(got - compose(b.mu, c.K)(pts))) <= 1e-9
    assert np.max(np.abs(got - pts[:, :b.k])) <= 1e-9


def test_bracket_of_flat_complement_is_flat_K(samples):
    c = canonical_affine_connection(1)
    K = BracketMap(c.bundle, complement_of_horizontal(c.horizontal))
    xi = np.array([[1.0, 2.0, 3.0, 4.0], [-2.0, 0.5, 7.0, 1.0]])
    assert np.allclose(K(xi), [[1, 4], [-2, 1]], atol=1e-12)


def test_bracket_precondition():
    b = bd.tangent_bundle(R1)
    with pytest.raises(PreconditionFailed):
        bracket(b, identity(2).then(Linear([[1, 0], [1, 0], [0, 1], [0, 1]])), [1.0, 2.0])


def test_bracket_works_on_towers(samples):
    c = sphere_connection(2)
    K = BracketMap(c.bundle, c.bundle.mu)
    pts = samples(bd.TangentSpace(c.bundle.e2))
    want = bd.tangent(compose(c.bundle.mu, c.K))(pts)
    assert np.max(np.abs(bd.tangent(K)(pts) - want)) <= 1e-9


class TestLinearMorphisms:
    def test_projection(self, samples):
        b = bd.tangent_bundle(R2)
        mor = LinearMorphism(p_map(b.k), p_map(b.m), bd.t_of_bundle(b), b)
        assert check_linear(mor, samples).passed

    def test_lift_and_zero(self, samples):
        b = bd.tangent_bundle(S2)
        mor = LinearMorphism(b.lift, zero_map(b.m), b, bd.t_of_bundle(b))
        assert check_linear(mor, samples).passed

    def test_mu_and_identity(self, samples):
        b = bd.tangent_bundle(R2)
        mor = LinearMorphism(b.mu, identity(b.k), bd.finsler_bundle(b), bd.tangent_bundle(b.total))
        assert check_linear(mor, samples).passed

    def test_failure_detected(self, samples):
        b = bd.tangent_bundle(R1)
        bend = ExprMap([parse_expr("x[0] * x[0]"), parse_expr("x[1]")], 2)
        assert not check_linear(LinearMorphism(bend, identity(1), b, b), samples).passed

    @pytest.mark.parametrize("make", [canonical_affine_connection, sphere_connection],
                             ids=["flat", "sphere"])
    def test_bracketing_preserves_linearity(self, make, samples):
        c = make(2)
        b = c.bundle
        K = BracketMap(b, complement_of_horizontal(c.horizontal))
        mor = LinearMorphism(K, b.q, bd.tangent_bundle(b.total), b)
        assert check_linear(mor, samples, 1e-8).passed


@pytest.mark.parametrize("name", ["tangent R2", "tangent S2", "trivial"])
def test_lambda2(name, samples):
    assert check_lambda2(CONSTRUCTIONS[name](), samples).passed
