from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lassorank.core import (LE, LT, LinAtom, Polyhedron, UnboundVariable, eval_atom,
                            equality, fm_eliminate, fm_feasible, polyhedron_contains,
                            simplest_between)
from lassorank.parser import load_program


def atom(coeffs, const, rel=LE):
    return LinAtom.make(coeffs, const, rel)


class TestEvalAtom:
    def test_nonstrict_boundary(self):
        assert eval_atom(atom({"x": 1}, 1), {"x": 1})

    def test_strict_boundary(self):
        assert not eval_atom(atom({"x": 1}, 1, LT), {"x": 1})

    def test_two_variables(self):
        assert eval_atom(atom({"x": 2, "y": -3}, 0), {"x": 3, "y": 2})

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariable, match="unbound variable"):
            eval_atom(atom({"x": 1}, 0), {})

    def test_zero_coefficients_dropped(self):
        a = atom({"x": 0, "y": 2}, 1)
        assert a.coeffs == {"y": 2}

    def test_degenerate_atom(self):
        assert eval_atom(atom({}, 0), {})
        assert not eval_atom(atom({}, -1), {})
        assert not eval_atom(atom({}, 0, LT), {})


class TestPolyhedronContains:
    P = Polyhedron.make([atom({"x": 1}, 1), atom({"x": -1}, -1)])

    def test_single_point(self):
        assert polyhedron_contains(self.P, {"x": 1})

    def test_outside(self):
        assert not polyhedron_contains(self.P, {"x": 2})

    def test_running_example_step(self):
        P = load_program("vars q, y; stem: y = 1; loop: q >= 0 && q' = q - y && y' = y + 1;")
        v = {"q": 2, "y": 1, "q'": 1, "y'": 2}
        assert polyhedron_contains(P.loop[0], {k: Fraction(x) for k, x in v.items()})

    def test_equality_is_two_atoms(self):
        lo, hi = equality({"x": 1}, 3)
        assert {lo.relation, hi.relation} == {LE}
        assert eval_atom(lo, {"x": 3}) and eval_atom(hi, {"x": 3})
        assert not (eval_atom(lo, {"x": 4}) and eval_atom(hi, {"x": 4}))


class TestFourierMotzkin:
    def test_eliminate_between_bounds(self):
        P = Polyhedron.make([atom({"y": 1, "x": -1}, 0), atom({"y": -1}, -1)], ["x", "y"])
        out = fm_eliminate(P, "y")
        assert out.atoms == (atom({"x": -1}, -1),)

    def test_eliminate_unbounded(self):
        P = Polyhedron.make([atom({"x": 1}, 1, LT)], ["x"])
        assert fm_eliminate(P, "x").atoms == ()

    def test_strict_parent_gives_strict_child(self):
        P = Polyhedron.make([atom({"y": 1, "x": -1}, 0), atom({"y": -1}, -1, LT)], ["x", "y"])
        assert fm_eliminate(P, "y").atoms == (atom({"x": -1}, -1, LT),)

    def test_feasible_point(self):
        P = Polyhedron.make([atom({"x": 1}, 1), atom({"x": -1}, -1)])
        assert fm_feasible(P) == ("sat", {"x": 1})

    def test_open_contradiction(self):
        P = Polyhedron.make([atom({"x": 1}, 0, LT), atom({"x": -1}, 0, LT)])
        assert fm_feasible(P) == ("unsat", None)

    def test_witness_rechecks(self):
        P = Polyhedron.make([atom({"x": 1, "y": -1}, 0), atom({"y": 1}, 3, LT)])
        status, v = fm_feasible(P)
        assert status == "sat" and polyhedron_contains(P, v)


class TestSimplestBetween:
    @pytest.mark.parametrize("lo,hi,lo_open,hi_open,expected", [
        (None, None, False, False, 0),
        (Fraction(1, 3), Fraction(1, 2), False, False, Fraction(1, 2)),
        (Fraction(1, 3), Fraction(1, 2), True, True, Fraction(2, 5)),
        (Fraction(-7, 2), None, True, False, 0),
        (Fraction(-7, 2), Fraction(-1, 2), True, True, -1),
        (Fraction(2), Fraction(2), False, False, 2),
        (None, Fraction(-5, 2), False, False, -3),
    ])
    def test_table(self, lo, hi, lo_open, hi_open, expected):
        assert simplest_between(lo, hi, lo_open, hi_open) == expected


# -- properties --------------------------------------------------------------

VARS = ["x", "y", "z"]
coef = st.integers(-3, 3)


@st.composite
def polyhedra(draw, max_atoms=6):
    n = draw(st.integers(1, 3))
    names = VARS[:n]
    atoms = []
    for _ in range(draw(st.integers(0, max_atoms))):
        coeffs = {v: draw(coef) for v in names}
        atoms.append(atom(coeffs, draw(coef), draw(st.sampled_from([LE, LT]))))
    return Polyhedron.make(atoms, names)


def grid(names, den=4, span=3):
    pts = [Fraction(k, den) for k in range(-span * den, span * den + 1)]
    if not names:
        yield {}
        return
    head, rest = names[0], names[1:]
    for p in pts:
        for tail in grid(rest, den, span):
            yield {head: p, **tail}


@settings(max_examples=500, deadline=None)
@given(polyhedra(), st.data())
def test_projection_matches_extension(P, data):
    """A grid point satisfies the projection iff some extension satisfies P."""
    var = data.draw(st.sampled_from(list(P.varspace)))
    proj = fm_eliminate(P, var)
    rest = [v for v in P.varspace if v != var]
    for point in grid(rest, den=2, span=2):
        inside = polyhedron_contains(proj, point)
        fixed = Polyhedron.make([a.substitute(point) for a in P.atoms], [var])
        extends = fm_feasible(fixed)[0] == "sat"
        assert inside == extends


@settings(max_examples=500, deadline=None)
@given(polyhedra())
def test_feasibility_witness_and_grid_oracle(P):
    status, v = fm_feasible(P)
    if status == "sat":
        assert polyhedron_contains(P, v)
    else:
        # no grid point can lie in an empty polyhedron
        names = list(P.varspace)
        assert not any(polyhedron_contains(P, p) for p in grid(names, den=2, span=4))


@settings(max_examples=200, deadline=None)
@given(st.fractions(), st.fractions(), st.booleans(), st.booleans())
def test_simplest_between_is_inside(a, b, lo_open, hi_open):
    lo, hi = min(a, b), max(a, b)
    if lo == hi:
        lo_open = hi_open = False
    x = simplest_between(lo, hi, lo_open, hi_open)
    assert (lo < x if lo_open else lo <= x) and (x < hi if hi_open else x <= hi)
