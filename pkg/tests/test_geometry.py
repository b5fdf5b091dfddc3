import numpy as np
import pytest

from tanconn import connection as cn
from tanconn import geometry as geo
from tanconn.bundle import tangent_bundle
from tanconn.connection import ChristoffelData, constant_symbols
from tanconn.errors import NotAffine, NotTorsionFree
from tanconn.smap import ExprMap, compose, parse_expr
from tanconn.space import Euclidean


def expr_map(in_dim, *sources):
    return ExprMap([parse_expr(s) for s in sources], in_dim)


def christoffel(n, *psi):
    return cn.christoffel_connection(ChristoffelData(n, expr_map(n, *psi)))


flat2 = lambda: christoffel(2, *"0" * 8)
curved2 = lambda: christoffel(2, "0", "0", "0", "x[0]", "0", "0", "0", "0")  # Gamma^0_11 = x_0
sym2 = lambda: christoffel(2, "x[1]", "0.5", "0.5", "0", "0", "x[0]*x[1]", "x[0]*x[1]", "1")
asym2 = lambda: cn.christoffel_connection(constant_symbols(2, {(0, 0, 1): 1.0}))
line_x = lambda: christoffel(1, "x[0]")
sphere = lambda: cn.sphere_connection(2)

# three fixed polynomial (w1, w2, s) triples on R^2
TRIPLES = [
    (("1", "x[0]*x[1]"), ("x[1]", "0.5"), ("x[0]*x[0]", "1 - x[1]")),
    (("x[0] + x[1]", "1"), ("2", "x[0]*x[0]"), ("x[1]", "x[0]")),
    (("x[1]*x[1]", "x[0]"), ("1", "-x[1]"), ("0.3", "x[0]*x[1]")),
]


def field(parts):
    """R^2 -> T(R^2), x -> (X(x), x)."""
    return expr_map(2, *parts, "x[0]", "x[1]")


def classical_riemann(gamma, x, h=1e-5):
    """R^i_ljk = d_j G^i_kl - d_k G^i_jl + G^i_jm G^m_kl - G^i_km G^m_jl, derivatives by differences."""
    n = len(x)
    G = gamma(x)
    dG = np.zeros((n,) + G.shape)  # dG[a] = d G / d x_a
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dG[a] = (gamma(x + e) - gamma(x - e)) / (2 * h)
    R = (np.einsum("jikl->iljk", dG) - np.einsum("kijl->iljk", dG)
         + np.einsum("ijm,mkl->iljk", G, G) - np.einsum("ikm,mjl->iljk", G, G))
    return R


def classical_tensor_value(c, triple, x):
    data = c.K.data if hasattr(c.K, "data") else None
    gamma = lambda p: data.symbols(p)[0]
    X, Y, Z = (field(t)(x)[:2] for t in triple)
    return np.einsum("iljk,j,k,l->i", classical_riemann(gamma, x), X, Y, Z)


class TestCurvature:
    def test_flat(self, samples):
        assert geo.is_flat(flat2().vertical, samples)
        assert geo.is_flat(cn.canonical_connection_diff_object(2).vertical, samples)

    def test_t_and_pullback_of_flat(self, samples):
        assert geo.is_flat(cn.t_of_vertical(flat2().vertical), samples)
        f = expr_map(1, "x[0]*x[0]", "sin(x[0])")
        assert geo.is_flat(cn.pullback_vertical(f, flat2().vertical, Euclidean(1)), samples)

    def test_flatness_stable_under_T(self, samples):
        for make in (flat2, curved2, line_x):
            v = make().vertical
            assert geo.is_flat(cn.t_of_vertical(v), samples) == geo.is_flat(v, samples)

    def test_curved_example(self, samples):
        v = curved2().vertical
        assert not geo.is_flat(v, samples)
        assert geo.curvature_report(v, samples).max_residual() >= 1e-4

    def test_line_connections_are_flat(self, samples):
        # T^2 of a 1-dimensional space has no room for curvature
        assert geo.is_flat(line_x().vertical, samples)

    @pytest.mark.parametrize("triple", TRIPLES, ids=range(3))
    @pytest.mark.parametrize("make", [curved2, sym2], ids=["curved", "symmetric"])
    def test_tensor_matches_classical(self, make, triple, samples):
        c = make()
        R = geo.curvature_tensor(c.vertical, *(field(t) for t in triple))
        pts = samples(Euclidean(2))[:16]
        got = R(pts)
        want = np.array([classical_tensor_value(c, triple, p) for p in pts])
        assert np.max(np.abs(got[:, :2] - want)) <= 1e-6
        assert np.array_equal(got[:, 2:], pts)

    @pytest.mark.parametrize("triple", TRIPLES, ids=range(3))
    @pytest.mark.parametrize("make", [curved2, sym2, flat2], ids=["curved", "symmetric", "flat"])
    def test_three_expressions_agree(self, make, triple, samples):
        c = make()
        w1, w2, s = (field(t) for t in triple)
        direct = geo.curvature_tensor(c.vertical, w1, w2, s)
        standard = geo.curvature_tensor_standard(c.vertical, w1, w2, s)
        flat = flat2().vertical
        second = geo.curvature_tensor_second(c.vertical, flat, w1, w2, s)
        pts = samples(Euclidean(2))
        assert np.max(np.abs(direct(pts) - standard(pts))) <= 1e-8
        assert np.max(np.abs(direct(pts) - second(pts))) <= 1e-8

    def test_flat_tensor_vanishes(self, samples):
        w1, w2, s = (field(t) for t in TRIPLES[0])
        out = geo.curvature_tensor(flat2().vertical, w1, w2, s)(samples(Euclidean(2)))
        assert np.max(np.abs(out[:, :2])) <= 1e-12

    def test_line_tensor_vanishes(self, samples):
        w = expr_map(1, "1 + x[0]*x[0]", "x[0]")
        s = expr_map(1, "sin(x[0])", "x[0]")
        out = geo.curvature_tensor(line_x().vertical, w, w, s)(samples(Euclidean(1)))
        assert np.max(np.abs(out[:, 0])) <= 1e-12


class TestTorsion:
    def test_discrimination(self, samples):
        assert geo.is_torsion_free(sym2().vertical, samples)
        assert geo.is_torsion_free(sphere().vertical, samples)
        assert not geo.is_torsion_free(asym2().vertical, samples)

    def test_asymmetric_tensor_magnitude(self, samples):
        w1, w2 = field(("1", "0")), field(("0", "1"))
        T = geo.torsion_tensor(asym2().vertical, w1, w2)(samples(Euclidean(2)))
        assert np.max(np.abs(T[:, :2])) >= 0.1

    @pytest.mark.parametrize("triple", TRIPLES, ids=range(3))
    @pytest.mark.parametrize("make", [asym2, sym2, curved2], ids=["asymmetric", "symmetric", "curved"])
    def test_standard_expression(self, make, triple, samples):
        v = make().vertical
        w1, w2 = field(triple[0]), field(triple[1])
        pts = samples(Euclidean(2))
        lhs = geo.torsion_tensor(v, w1, w2)(pts)
        rhs = geo.torsion_tensor_standard(v, w1, w2)(pts)
        assert np.max(np.abs(lhs - rhs)) <= 1e-8

    def test_bracket_from_torsion_free_derivative(self, samples):
        v = sym2().vertical
        w1, w2 = field(TRIPLES[1][0]), field(TRIPLES[1][1])
        b = v.bundle
        nab = lambda a, c: cn.covariant_derivative(v, a, c, validate=False)
        diff = b.sub(nab(w1, w2), nab(w2, w1))
        pts = samples(Euclidean(2))
        assert np.max(np.abs(diff(pts) - geo.lie_bracket(w1, w2, Euclidean(2))(pts))) <= 1e-8

    def test_requires_affine(self):
        with pytest.raises(NotAffine):
            geo.torsion(cn.canonical_connection_diff_object(2).vertical)


class TestLieBracket:
    def test_golden(self):
        w1, w2 = expr_map(1, "1", "x[0]"), expr_map(1, "x[0]", "x[0]")
        assert np.allclose(geo.lie_bracket(w1, w2, Euclidean(1))([3.0]), [1, 3], atol=1e-12)

    def test_self_bracket(self, samples):
        w = field(TRIPLES[2][0])
        out = geo.lie_bracket(w, w, Euclidean(2))(samples(Euclidean(2)))
        assert np.max(np.abs(out[:, :2])) <= 1e-12

    def test_jacobi(self, samples):
        M = Euclidean(2)
        a, b, c = (field(t[0]) for t in TRIPLES)
        br = lambda u, v: geo.lie_bracket(u, v, M)
        tb = tangent_bundle(M)
        total = tb.add(tb.add(br(br(a, b), c), br(br(b, c), a)), br(br(c, a), b))
        pts = samples(M)
        assert np.max(np.abs(total(pts)[:, :2])) <= 1e-7

    def test_classical_formula(self, samples):
        a, b = field(TRIPLES[0][0]), field(TRIPLES[0][1])
        pts = samples(Euclidean(2))
        h = 1e-6
        want = []
        for p in pts:
            J = lambda f: np.stack([(f(p + h * e)[:2] - f(p - h * e)[:2]) / (2 * h) for e in np.eye(2)], 1)
            want.append(J(b) @ a(p)[:2] - J(a) @ b(p)[:2])
        got = geo.lie_bracket(a, b, Euclidean(2))(pts)[:, :2]
        assert np.max(np.abs(got - np.array(want))) <= 1e-6


class TestBianchi:
    @pytest.mark.parametrize("make", [sphere, sym2, line_x, flat2], ids=["sphere", "symmetric", "line", "flat"])
    def test_residuals(self, make, samples):
        rep = geo.bianchi_residuals(make().vertical, samples, 1e-8)
        assert rep.passed, str(rep)
        assert {"bianchi-antisym", "bianchi-first", "bianchi-second"} <= {i.equation for i in rep.items}

    def test_flat_is_exact(self, samples):
        rep = geo.bianchi_residuals(flat2().vertical, samples)
        assert rep.max_residual() <= 1e-14

    def test_both_first_identity_variants_reported(self, samples):
        rep = geo.bianchi_residuals(sym2().vertical, samples)
        assert rep["bianchi-first"].passed
        assert rep["bianchi-first-statement"].kind == "ill-typed"

    def test_rejects_torsion(self, samples):
        with pytest.raises(NotTorsionFree):
            geo.bianchi_residuals(asym2().vertical, samples)

    def test_is_not_vacuous(self, samples):
        # the symmetric example has curvature, so the identities are not trivially zero
        assert geo.curvature_report(sym2().vertical, samples).max_residual() >= 0.1


class TestFlipAndComplex:
    def test_flat_equivariance_to_rounding(self, samples):
        rep = geo.flip_equivariance(cn.canonical_affine_connection(1), samples, 1e-15)
        assert rep.passed

    @pytest.mark.parametrize("make,expected", [(sym2, True), (sphere, True), (asym2, False)],
                             ids=["symmetric", "sphere", "asymmetric"])
    def test_equivalence_with_torsion(self, make, expected, samples):
        c = make()
        assert geo.flip_equivariance_check(c, samples) is expected
        assert geo.is_torsion_free(c.vertical, samples) is expected
        assert geo.flip_equivariance(c, samples)["cU=Utau"].max_residual <= 1e-12

    def test_golden(self):
        F = geo.almost_complex(cn.canonical_affine_connection(1))
        assert F([1.0, 2.0, 3.0, 4.0]).tolist() == [-2, 1, 3, 4]
        assert compose(F, F)([1.0, 2.0, 3.0, 4.0]).tolist() == [-1, -2, 3, 4]

    @pytest.mark.parametrize("make", [flat2, sphere, curved2], ids=["flat", "sphere", "curved"])
    def test_square_is_minus_one(self, make, samples):
        assert geo.almost_complex_residual(make(), samples).passed
