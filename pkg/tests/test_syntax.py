"""Formula parsing, printing, and axiom decomposition."""

import pytest
from hypothesis import given, strategies as st

from pnmatrix import (
    App,
    NotSimpleError,
    ParseError,
    Signature,
    Var,
    apply_string,
    decompose_simple,
    format_formula,
    lookahead_set,
    parse_formula,
    s_subformulas,
    subformulas,
    substitute,
    variables,
)
from pnmatrix.syntax import (
    formula_depth,
    formula_size,
    sort_key,
    subformula_closure,
)

SIG = Signature((("imp", 2), ("neg", 1)), det=frozenset({"imp"}))
SIG5 = Signature(
    (("and", 2), ("or", 2), ("imp", 2), ("neg", 1), ("circ", 1)),
    det=frozenset({"and", "or", "imp"}),
)


def test_parse_variable_and_application():
    assert parse_formula("p3") == Var(3)
    f = parse_formula("imp(p1,neg(p2))")
    assert f == App("imp", (Var(1), App("neg", (Var(2),))))


def test_format_round_trip():
    texts = [
        "p1",
        "neg(p1)",
        "imp(p1,imp(neg(p1),p2))",
        "imp(neg(neg(p1)),p1)",
    ]
    for text in texts:
        assert format_formula(parse_formula(text)) == text


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_formula("imp(p1")
    with pytest.raises(ParseError):
        parse_formula("p1)")
    with pytest.raises(ParseError):
        parse_formula("imp(p1,p2,p3)", SIG)
    with pytest.raises(ParseError):
        parse_formula("foo(p1)", SIG)
    with pytest.raises(ParseError):
        parse_formula("p1 $")


def test_signature_validation():
    with pytest.raises(ValueError):
        Signature((("imp", 2), ("imp", 1)))
    with pytest.raises(ValueError):
        Signature((("p1", 1),))
    with pytest.raises(ValueError):
        Signature((("f", 1),), det=frozenset({"g"}))
    assert SIG.arity("neg") == 1
    assert "imp" in SIG and "box" not in SIG
    assert SIG.lookahead_connectives == ("neg",)


def test_variables_subformulas_size_depth():
    f = parse_formula("imp(p1,imp(neg(p1),p2))")
    assert variables(f) == frozenset({1, 2})
    assert parse_formula("neg(p1)") in subformulas(f)
    assert formula_size(f) == 6
    assert formula_depth(f) == 3
    assert formula_depth(Var(1)) == 0
    closure = subformula_closure([f])
    assert Var(2) in closure and f in closure


def test_sort_key_orders_by_size_then_text():
    fs = ["neg(p1)", "p2", "p1", "imp(p1,p2)"]
    ordered = sorted((parse_formula(t) for t in fs), key=sort_key)
    assert [format_formula(f) for f in ordered] == [
        "p1",
        "p2",
        "neg(p1)",
        "imp(p1,p2)",
    ]


def test_substitute():
    f = parse_formula("imp(p1,p2)")
    g = substitute(f, {1: parse_formula("neg(p2)"), 2: Var(1)})
    assert format_formula(g) == "imp(neg(p2),p1)"


def test_apply_string_outermost_first():
    sig = Signature((("a", 1), ("b", 1)))
    f = apply_string(("a", "b"), Var(1), sig)
    assert format_formula(f) == "a(b(p1))"
    with pytest.raises(ValueError):
        apply_string(("imp",), Var(1), SIG)


def test_decompose_simple_q_kind():
    ax = parse_formula("imp(p1,imp(neg(p1),p2))")
    simple = decompose_simple(ax, SIG)
    assert simple.base == "imp"
    assert simple.base_arity == 2
    assert simple.reconstruct() == ax
    assert simple.theta == frozenset({(), ("neg",)})
    assert not simple.r_bindings
    assert simple.var_lookaheads()[1] == frozenset({(), ("neg",)})


def test_decompose_simple_deep_string():
    ax = parse_formula("imp(neg(neg(p1)),p1)")
    simple = decompose_simple(ax, SIG)
    assert simple.theta == frozenset({(), ("neg",), ("neg", "neg")})
    assert simple.reconstruct() == ax


def test_decompose_simple_r_kind():
    sig = Signature((("imp", 2), ("box", 1)), det=frozenset({"imp"}))
    ax = parse_formula("imp(box(imp(p1,p2)),imp(box(p1),box(p2)))")
    simple = decompose_simple(ax, sig)
    assert simple.base == "imp"
    assert ("box",) in simple.r_bindings
    assert simple.reconstruct() == ax


def test_decompose_rejects_non_simple():
    with pytest.raises(NotSimpleError):
        decompose_simple(parse_formula("imp(neg(imp(p1,p1)),p1)"), SIG)
    # two different base connectives under look-ahead strings
    with pytest.raises(NotSimpleError):
        decompose_simple(
            parse_formula("or(neg(imp(p1,p2)),neg(or(p1,p2)))"), SIG5
        )


def test_lookahead_set_union_is_prefix_closed():
    a1 = decompose_simple(parse_formula("imp(neg(neg(p1)),p1)"), SIG)
    a2 = decompose_simple(parse_formula("imp(p1,imp(neg(p1),p2))"), SIG)
    theta = lookahead_set([a1, a2])
    assert () in theta
    for w in theta:
        for i in range(len(w)):
            assert w[:i] in theta


def test_s_subformulas_adds_separator_images():
    f = parse_formula("imp(p1,p2)")
    seps = [parse_formula("neg(p1)")]
    out = s_subformulas([f], seps)
    assert parse_formula("neg(imp(p1,p2))") in out
    assert parse_formula("neg(p2)") in out
    assert f in out


@st.composite
def formulas(draw, max_depth=4):
    if max_depth == 0 or draw(st.booleans()):
        return Var(draw(st.integers(min_value=1, max_value=3)))
    name, arity = draw(st.sampled_from([("imp", 2), ("neg", 1)]))
    args = tuple(draw(formulas(max_depth=max_depth - 1)) for _ in range(arity))
    return App(name, args)


@given(formulas())
def test_parse_inverts_format(f):
    assert parse_formula(format_formula(f), SIG) == f


@given(formulas(max_depth=3), formulas(max_depth=2))
def test_substitution_variable_containment(f, g):
    out = substitute(f, {1: g})
    expected = variables(f) - {1}
    if 1 in variables(f):
        expected |= variables(g)
    assert variables(out) == expected
