from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lassorank.templates import (BLUE, GE, GT, RED, WHITE, TemplateAtom, canonical_coloring,
                                 coloring_degree, dependency_components,
                                 is_suitable_coloring, make_template, parse_template_spec)

# closed forms of the overview table: conjuncts, atoms, components, degree
TABLE = {
    "affine": (lambda k: 3, lambda k: 3, lambda k: 1, lambda k: 0),
    "phase": (lambda k: 2 * k + 1, lambda k: k * (k + 5) // 2, lambda k: k,
              lambda k: k * (k - 1) // 2),
    "piece": (lambda k: k * k + k + 2, lambda k: 3 * k * k + 2 * k + 1, lambda k: k + 1,
              lambda k: 2 * k * k - 1),
    "lex": (lambda k: 3 * k, lambda k: k * (k + 5) // 2, lambda k: k,
            lambda k: (k - 1) * (k - 2) // 2),
}

CASES = [("affine", 1)] + [(kind, k) for kind in ("phase", "piece", "lex") for k in range(1, 6)]


def measured(kind, k):
    T = make_template(kind, k)
    return (len(T.conjuncts), T.atom_count, len(dependency_components(T)),
            coloring_degree(T, canonical_coloring(T)))


@pytest.mark.parametrize("kind,k", CASES)
def test_overview_table(kind, k):
    assert measured(kind, k) == tuple(f(k) for f in TABLE[kind])


class TestMakeTemplate:
    def test_affine(self):
        T = make_template("affine")
        assert (len(T.conjuncts), T.atom_count) == (3, 3)
        assert str(T).splitlines() == ["  delta > 0", "  f(x) > 0", "  f(x) - f(x') - delta > 0"]

    def test_phase_4(self):
        T = make_template("phase", 4)
        assert (len(T.conjuncts), T.atom_count) == (9, 18)

    def test_piece_2(self):
        T = make_template("piece", 2)
        assert (len(T.conjuncts), T.atom_count) == (8, 17)

    def test_one_phase_is_affine(self):
        assert make_template("phase", 1).conjuncts == make_template("affine").conjuncts

    @pytest.mark.parametrize("kind", ["phase", "piece", "lex"])
    def test_k_zero(self, kind):
        with pytest.raises(ValueError, match="positive"):
            make_template(kind, 0)

    def test_affine_k(self):
        with pytest.raises(ValueError):
            make_template("affine", 2)

    def test_empty_atom(self):
        with pytest.raises(ValueError, match="empty"):
            TemplateAtom.make()

    @pytest.mark.parametrize("text,spec", [("affine", "affine"), ("phase:3", "phase:3"),
                                           ("lex:2", "lex:2"), (" piece:2 ", "piece:2")])
    def test_spec_round_trip(self, text, spec):
        assert parse_template_spec(text).spec == spec

    @pytest.mark.parametrize("text", ["phase", "phase:x", "ranking:2", "affine:1", "lex:0"])
    def test_bad_spec(self, text):
        with pytest.raises(ValueError):
            parse_template_spec(text)


class TestComponents:
    def test_affine(self):
        assert dependency_components(make_template("affine")) == {frozenset({"f", "delta"})}

    def test_phase_4(self):
        got = dependency_components(make_template("phase", 4))
        assert got == {frozenset({"f%d" % i, "delta%d" % i}) for i in range(1, 5)}

    def test_piece_2(self):
        got = dependency_components(make_template("piece", 2))
        assert got == {frozenset({"f1", "f2", "delta"}), frozenset({"g1"}), frozenset({"g2"})}


class TestColoring:
    def test_affine_all_red(self):
        T = make_template("affine")
        eta = {occ: RED for occ, _ in T.occurrences()}
        assert is_suitable_coloring(T, eta) and coloring_degree(T, eta) == 0

    def test_three_phase(self):
        T = make_template("phase", 3)
        eta = canonical_coloring(T)
        assert is_suitable_coloring(T, eta) and coloring_degree(T, eta) == 3

    def test_two_reds(self):
        T = make_template("phase", 2)
        eta = canonical_coloring(T)
        ci = next(ci for ci, conj in enumerate(T.conjuncts) if len(conj) > 1)
        for pos in range(len(T.conjuncts[ci])):
            eta[(ci, pos)] = RED
        assert not is_suitable_coloring(T, eta)

    def test_no_red(self):
        T = make_template("affine")
        eta = {(0, 0): WHITE, (1, 0): RED, (2, 0): RED}
        assert not is_suitable_coloring(T, eta)

    def test_equal_component_blues(self):
        # two blue atoms over f1 in 3-phase fall into one component
        T = make_template("phase", 3)
        eta = canonical_coloring(T)
        eta[(6, 1)] = BLUE
        eta[(6, 2)] = RED
        assert not is_suitable_coloring(T, eta)

    def test_cycle(self):
        # piece:2 conjuncts 1..4 are (-g_i(x), -g_j(x'), f_i(x) - f_j(x') - delta)
        T = make_template("piece", 2)
        base = canonical_coloring(T)
        eta = {occ: (RED if occ[1] == 0 else WHITE) if 1 <= occ[0] <= 4 else c
               for occ, c in base.items()}
        eta[(1, 0)], eta[(1, 2)] = RED, BLUE                      # g1 -> F
        eta[(2, 0)], eta[(2, 1)], eta[(2, 2)] = WHITE, BLUE, RED  # F -> g2
        eta[(3, 0)], eta[(3, 1)] = RED, BLUE                      # g2 -> g1
        assert not is_suitable_coloring(T, eta)
        eta[(3, 1)] = WHITE
        assert is_suitable_coloring(T, eta)

    def test_degree_examples(self):
        assert coloring_degree(make_template("lex", 4), canonical_coloring(make_template("lex", 4))) == 3
        T = make_template("phase", 5)
        assert coloring_degree(T, canonical_coloring(T)) == 10
        T = make_template("piece", 2)
        assert coloring_degree(T, canonical_coloring(T)) == 7

    def test_degree_rejects_unsuitable(self):
        T = make_template("affine")
        with pytest.raises(ValueError, match="not suitable"):
            coloring_degree(T, {(0, 0): WHITE, (1, 0): WHITE, (2, 0): WHITE})


@pytest.mark.parametrize("kind,k", CASES)
def test_canonical_is_suitable_and_minimal(kind, k):
    T = make_template(kind, k)
    eta = canonical_coloring(T)
    assert is_suitable_coloring(T, eta)
    blues = sum(1 for c in eta.values() if c == BLUE)
    assert blues == len(dependency_components(T)) - 1


@st.composite
def colorings(draw):
    kind, k = draw(st.sampled_from(CASES))
    T = make_template(kind, k)
    eta = {}
    for ci, conj in enumerate(T.conjuncts):
        red = draw(st.integers(0, len(conj) - 1))
        for pos in range(len(conj)):
            eta[(ci, pos)] = RED if pos == red else draw(st.sampled_from([WHITE, BLUE]))
    return T, eta


@settings(max_examples=300, deadline=None)
@given(colorings())
def test_blue_bound(pair):
    T, eta = pair
    if is_suitable_coloring(T, eta):
        blues = sum(1 for c in eta.values() if c == BLUE)
        assert blues <= len(dependency_components(T)) - 1
