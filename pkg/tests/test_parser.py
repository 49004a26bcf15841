import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lassorank.core import LE, LT, LinAtom
from lassorank.parser import (And, Assign, BoolConst, Compare, LinExpr, Not, Or,
                              NormalFormTooLarge, ParseError, ProgramAST, desugar_assignments,
                              eval_formula, load_program, normalize, parse_program,
                              render_atom, render_program)

Y_GE_1 = "vars q,y; stem: y = 1; loop: q >= 0 && q' = q - y && y' = y + 1;"


def le(coeffs, const):
    return LinAtom.make(coeffs, const, LE)


class TestParse:
    def test_running_example_ast(self):
        ast = parse_program(Y_GE_1)
        assert ast.variables == ("q", "y")
        assert ast.stem == Compare(LinExpr.of({"y": 1}), "=", LinExpr.of({}, 1))
        assert isinstance(ast.loop, And) and len(ast.loop.args) == 3

    def test_boolean_leaves(self):
        ast = parse_program("vars x; stem: true; loop: false;")
        assert ast.stem == BoolConst(True) and ast.loop == BoolConst(False)

    def test_rational_literal(self):
        ast = parse_program("vars x; stem: x <= 3/4; loop: x' = x;")
        assert ast.stem.rhs.const == Fraction(3, 4)

    @pytest.mark.parametrize("text,fragment", [
        ("vars x; stem: x' = 0; loop: true;", "primed"),
        ("vars x; stem: z = 0; loop: true;", "undeclared"),
        ("vars x; stem: x = ; loop: true;", ""),
        ("vars x; stem: x * x = 1; loop: true;", ""),
    ])
    def test_errors(self, text, fragment):
        with pytest.raises(ParseError) as e:
            parse_program(text)
        assert fragment in str(e.value)
        assert e.value.line == 1 and e.value.col >= 1

    def test_error_position(self):
        with pytest.raises(ParseError) as e:
            parse_program("vars x;\nstem: true;\nloop: x' = x $ 1;")
        assert (e.value.line, e.value.col) == (3, 14)


class TestDesugar:
    def _loop(self, body):
        return desugar_assignments(parse_program("vars q, y; stem: true; loop: %s;" % body)).loop

    def test_full_block(self):
        got = self._loop("assign { q := q - y; y := y + 1 }")
        want = parse_program("vars q, y; stem: true; loop: q' = q - y && y' = y + 1;").loop
        assert got == want

    def test_frame_condition(self):
        got = self._loop("assign { q := q - y }")
        want = parse_program("vars q, y; stem: true; loop: q' = q - y && y' = y;").loop
        assert got == want

    def test_double_assignment_in_source(self):
        with pytest.raises(ParseError, match="assigned twice"):
            self._loop("assign { q := 1; q := 2 }")

    def test_double_assignment_in_ast(self):
        block = Assign((("q", LinExpr.of({}, 1)), ("q", LinExpr.of({}, 2))))
        with pytest.raises(ParseError, match="double assignment"):
            desugar_assignments(ProgramAST(("q", "y"), BoolConst(True), block))


class TestNormalize:
    def test_running_example(self):
        P = load_program(Y_GE_1)
        assert P.varspace == ("q", "y")
        assert set(P.stem[0].atoms) == {le({"y": 1}, 1), le({"y": -1}, -1)}
        assert set(P.loop[0].atoms) == {
            le({"q": -1}, 0),
            le({"q'": 1, "q": -1, "y": 1}, 0),
            le({"q'": -1, "q": 1, "y": -1}, 0),
            le({"y'": 1, "y": -1}, 1),
            le({"y'": -1, "y": 1}, -1),
        }

    def test_true_stem(self):
        P = load_program("vars x; stem: true; loop: x' = x;")
        assert P.stem[0].atoms == (le({}, 0),)

    def test_false_loop(self):
        P = load_program("vars x; stem: true; loop: false;")
        assert P.loop[0].atoms == (le({}, -1),)

    def test_disequality_splits(self):
        P = load_program("vars x, y; stem: true; loop: x != y;")
        got = {p.atoms for p in P.loop}
        assert got == {(LinAtom.make({"x": 1, "y": -1}, 0, LT),),
                       (LinAtom.make({"x": -1, "y": 1}, 0, LT),)}

    @pytest.mark.parametrize("neg,want", [
        ("!(x <= 2)", LinAtom.make({"x": -1}, -2, LT)),
        ("!(x < 2)", LinAtom.make({"x": -1}, -2, LE)),
    ])
    def test_negated_atoms(self, neg, want):
        P = load_program("vars x; stem: %s; loop: true;" % neg)
        assert P.stem[0].atoms == (want,)

    def test_cap(self):
        text = "vars x; stem: true; loop: " + " && ".join(["(x < 0 || x > 1)"] * 7) + ";"
        with pytest.raises(NormalFormTooLarge, match="normal form too large"):
            load_program(text)
        assert len(load_program(text, cap=128).loop) == 128

    def test_render(self):
        text = render_program(load_program(Y_GE_1))
        assert text.splitlines()[0] == "#N = 1, #M = 1"
        assert "  -y + y' <= 1" in text


# -- semantics preservation --------------------------------------------------

NAMES = ["a", "b", "c"]
RELS = ["<=", "<", ">=", ">", "=", "!="]


def random_expr(rng):
    return LinExpr.of({v: rng.randint(-2, 2) for v in NAMES}, rng.randint(-2, 2))


def random_formula(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.1:
            return BoolConst(rng.random() < 0.5)
        return Compare(random_expr(rng), rng.choice(RELS), random_expr(rng))
    kind = rng.choice(["and", "or", "not"])
    if kind == "not":
        return Not(random_formula(rng, depth - 1))
    args = tuple(random_formula(rng, depth - 1) for _ in range(rng.randint(2, 3)))
    return And(args) if kind == "and" else Or(args)


def random_valuation(rng):
    return {v: Fraction(rng.randint(-6, 6), rng.choice([1, 2])) for v in NAMES}


def semantic_check(seed):
    """AST truth equals normal-form truth on 100 valuations; returns mismatches."""
    rng = random.Random(seed)
    f = random_formula(rng, 4)
    P = normalize(ProgramAST(tuple(NAMES), f, BoolConst(True)), cap=10 ** 6)
    bad = 0
    for _ in range(100):
        v = random_valuation(rng)
        if eval_formula(f, v) != P.in_stem(v):
            bad += 1
    return bad


def test_semantics_preserved_on_random_formulas():
    assert sum(semantic_check(seed) for seed in range(200)) == 0


conj_atoms = st.builds(
    lambda c, r, k: Compare(LinExpr.of(c), r, LinExpr.of({}, k)),
    st.fixed_dictionaries({v: st.integers(-2, 2) for v in NAMES}),
    st.sampled_from(["<=", "<", ">=", ">", "="]),
    st.integers(-3, 3))
literal = st.one_of(conj_atoms, conj_atoms.map(lambda c: Not(c) if c.rel != "=" else c))


@settings(max_examples=100, deadline=None)
@given(st.lists(literal, min_size=1, max_size=5), st.lists(literal, min_size=1, max_size=5))
def test_conjunctive_programs_have_one_disjunct(stem, loop):
    P = normalize(ProgramAST(tuple(NAMES), And(tuple(stem)), And(tuple(loop))))
    assert len(P.stem) == 1 and len(P.loop) == 1
