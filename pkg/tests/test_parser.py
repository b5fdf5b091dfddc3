import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from tanconn.errors import ParseError
from tanconn.program import load
from tanconn.smap.expr import Binary, Num, Unary, Var
from tanconn.smap.parser import expr_source, parse_expr, parse_program, program_source, tokenize

CORPUS = json.loads((Path(__file__).parent / "golden" / "parser_corpus.json").read_text())


@pytest.mark.parametrize("case", CORPUS["valid"], ids=range(len(CORPUS["valid"])))
def test_valid_corpus_round_trips(case):
    ast = parse_program(case["source"])
    text = program_source(ast)
    assert text == case["canonical"]
    assert parse_program(text) == ast
    assert program_source(parse_program(text)) == text


@pytest.mark.parametrize("case", CORPUS["invalid"], ids=range(len(CORPUS["invalid"])))
def test_invalid_corpus_is_positioned(case):
    with pytest.raises(ParseError) as err:
        parse_program(case["source"])
    assert (err.value.line, err.value.column) == (case["line"], case["column"])
    assert str(err.value) == case["message"]


def test_corpus_sizes():
    assert len(CORPUS["valid"]) == 20
    assert len(CORPUS["invalid"]) == 10


def test_positions_span_lines():
    with pytest.raises(ParseError) as err:
        parse_program("space A = R(1);\n\n  map f : A -> A = (x[0] x[0]);")
    assert (err.value.line, err.value.column) == (3, 26)
    assert err.value.expected


def test_expected_token_set_is_reported():
    with pytest.raises(ParseError) as err:
        parse_program("frob x = R(1);")
    assert "'space'" in err.value.expected and "'connection'" in err.value.expected


def test_comments_and_newlines_are_ignored():
    a = parse_program("map f : R(1) -> R(1) = (x[0]);")
    b = parse_program("# header\nmap f\n :\n R(1) -> R(1)  # trailing\n = (x[0])\n;\n")
    assert a == b


def test_unary_minus_on_numbers_folds():
    assert parse_expr("-2") == Num(-2.0)
    assert parse_expr("-x[0]") == Unary("neg", Var(0))


def test_precedence():
    assert parse_expr("1 + 2 * x[0]") == Binary("+", Num(1.0), Binary("*", Num(2.0), Var(0)))
    assert parse_expr("1 - 2 - 3") == Binary("-", Binary("-", Num(1.0), Num(2.0)), Num(3.0))


def test_tokens_carry_columns():
    toks = tokenize("map f")
    assert [(t.text, t.line, t.col) for t in toks[:2]] == [("map", 1, 1), ("f", 1, 5)]


class TestResolution:
    def test_component_out_of_range(self):
        with pytest.raises(ParseError, match="out of range"):
            load("map f : R(1) -> R(1) = (x[1]);")

    def test_arity_mismatch(self):
        with pytest.raises(ParseError, match="arity mismatch"):
            load("map f : R(1) -> R(2) = (x[0]);")

    def test_unknown_identifier_is_positioned(self):
        with pytest.raises(ParseError) as err:
            load("space A = R(1);\nbundle b = tangent(B);")
        assert "unknown identifier 'B'" in str(err.value)
        assert (err.value.line, err.value.column) == (2, 20)

    def test_wrong_kind(self):
        with pytest.raises(ParseError, match="is a space, expected a connection"):
            load("space A = R(1); connection c = tconn(A);")

    def test_constructor_arity(self):
        with pytest.raises(ParseError, match="takes 1 argument"):
            load("connection c = sphere(1, 2);")

    def test_duplicate_name(self):
        with pytest.raises(ParseError, match="already declared"):
            load("space A = R(1); space A = R(2);")

    def test_christoffel_needs_n_cubed_symbols(self):
        with pytest.raises(ParseError, match="needs 8 components"):
            load("connection c = christoffel(2) { psi = (1, 2); };")

    def test_unknown_constructor(self):
        with pytest.raises(ParseError, match="unknown connection constructor"):
            load("connection c = levi(2);")

    def test_standard_program_loads(self):
        prog = load((Path(__file__).parents[1] / "programs" / "standard.tc").read_text())
        assert prog.kinds["sphere_conn"] == "connection"
        assert prog.maps["e0"].in_dim == 0


_atoms = st.one_of(st.builds(Var, st.integers(0, 3)),
                   st.floats(-100, 100, allow_nan=False).map(lambda v: Num(float(v))))
_exprs = st.recursive(_atoms, lambda inner: st.one_of(
    st.builds(Binary, st.sampled_from("+-*/"), inner, inner),
    st.builds(Unary, st.sampled_from(["sin", "cos", "exp", "sqrt", "neg"]), inner)), max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_exprs)
def test_print_parse_round_trip(e):
    once = parse_expr(expr_source(e))
    assert parse_expr(expr_source(once)) == once
