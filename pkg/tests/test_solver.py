import dataclasses
import shutil
import subprocess
from fractions import Fraction

import pytest

from lassorank.argument import extract_argument, verify_certificate
from lassorank.constraints import GENERAL, NONDECREASING, CAtom, nonlinear_dimension
from lassorank.solver import (CHI, INTERNAL, SMT, BranchCapExceeded, ModelError,
                              NonLinearBranch, Sat, SolverConfig, Unknown, Unsat,
                              candidates_for, chi_candidates, chi_enumerate_solve, emit_smtlib,
                              enumerate_and_solve, parse_smt_model, smt_name,
                              smt_product_variables, solve, solve_linear_branch)

from conftest import system

HAS_Z3 = shutil.which("z3") is not None
needs_z3 = pytest.mark.skipif(not HAS_Z3, reason="z3 not installed")

INTERNAL_ONLY = SolverConfig(strategies=(INTERNAL,))
CHI_ONLY = SolverConfig(strategies=(CHI,))
SMT_ONLY = SolverConfig(strategies=(SMT,))


def verified(S, res):
    arg = extract_argument(S, res.assignment, res.certificate, res.branch_id)
    return verify_certificate(S.program, arg).valid


class TestLinearBranch:
    def test_model(self):
        _, S = system("y_ge_1", "affine", 1, NONDECREASING)
        sub = S.subsystems[0]
        fixed = {k: v[0] for k, v in sub.fixings}
        # II has only products with the fixed xi once fixed, so this is linear
        pt = solve_linear_branch(sub.atoms + (sub.classical,), fixed, sub.multipliers)
        assert pt is not None
        assert all(a.holds(pt) for a in sub.atoms + (sub.classical,))

    def test_bilinear_rejected(self):
        _, S = system("y_ge_1", "affine", 1, GENERAL)
        ic = next(s for s in S.subsystems if s.kind == "IC")
        with pytest.raises(NonLinearBranch, match="non-linear branch routed to linear solver"):
            solve_linear_branch(ic.atoms)


class TestInternal:
    def test_running_example_sat(self):
        _, S = system("y_ge_1", "affine", 1, NONDECREASING)
        res = solve(S, INTERNAL_ONLY)
        assert isinstance(res, Sat) and verified(S, res)

    @pytest.mark.parametrize("name", ["y_ge_1", "two_phase"])
    def test_affine_without_invariant_unsat(self, name):
        _, S = system(name, "affine", 0, NONDECREASING)
        assert isinstance(enumerate_and_solve(S, INTERNAL_ONLY), Unsat)

    def test_two_phase(self):
        _, S = system("two_phase", "phase:2", 0, NONDECREASING)
        res = solve(S)
        assert isinstance(res, Sat) and verified(S, res)

    def test_gcd_piece(self):
        _, S = system("gcd", "piece:2", 2, GENERAL)
        res = solve(S, SolverConfig(strategies=(INTERNAL, CHI)))
        assert isinstance(res, Sat) and verified(S, res)

    def test_determinism(self):
        _, S1 = system("y_ge_1", "affine", 1, NONDECREASING)
        _, S2 = system("y_ge_1", "affine", 1, NONDECREASING)
        a, b = solve(S1, INTERNAL_ONLY), solve(S2, INTERNAL_ONLY)
        assert a.branch_id == b.branch_id and a.assignment == b.assignment

    def test_branch_cap(self):
        _, S = system("gcd", "lex:2", 2, GENERAL)
        with pytest.raises(BranchCapExceeded):
            enumerate_and_solve(S, SolverConfig(strategies=(INTERNAL,), branch_cap=2))

    def test_symbolic_multipliers_give_unknown_or_unsat(self):
        _, S = system("alpha2", "affine", 1, GENERAL)
        res = enumerate_and_solve(S, INTERNAL_ONLY)
        assert isinstance(res, Unknown)


class TestChi:
    def test_alpha_candidate(self):
        _, S = system("alpha2", "affine", 1, GENERAL)
        cands = chi_candidates(S)
        assert cands and all(Fraction(1, 2) in c for c in cands.values())

    def test_always_contain_zero_one(self):
        for name in ("alpha2", "gcd", "y_ge_1"):
            _, S = system(name, "affine", 1, GENERAL)
            for c in chi_candidates(S).values():
                assert {0, 1} <= set(c)

    def test_no_coupling(self):
        _, S = system("gcd", "affine", 1, GENERAL)
        ic = [s for s in S.subsystems if s.kind == "IC"]
        # the gcd loop keeps one variable and subtracts, so only identity ratios appear
        for sub in ic:
            assert set(candidates_for(sub)) <= {0, 1}

    def test_alpha_general_sat_with_half(self):
        _, S = system("alpha2", "affine", 1, GENERAL)
        res = chi_enumerate_solve(S, CHI_ONLY)
        assert isinstance(res, Sat) and verified(S, res)
        chis = [v for k, v in res.assignment.items() if k.endswith("_chi1")]
        assert Fraction(1, 2) in chis

    def test_alpha_nondecreasing_unsat(self):
        _, S = system("alpha2", "affine", 1, NONDECREASING)
        assert isinstance(solve(S, INTERNAL_ONLY), Unsat)

    def test_linear_system_matches_internal(self):
        _, S = system("y_ge_1", "affine", 1, NONDECREASING)
        a, b = enumerate_and_solve(S, INTERNAL_ONLY), chi_enumerate_solve(S, CHI_ONLY)
        assert type(a) is type(b) and a.assignment == b.assignment

    def test_no_symbolic_delegates(self):
        _, S = system("y_ge_1", "affine", 0, GENERAL)
        assert isinstance(chi_enumerate_solve(S, CHI_ONLY), Unsat)

    def test_failure_is_unknown(self):
        # nonterminating over the rationals, with symbolic chi1 in general mode
        _, S = system("int", "affine", 1, GENERAL)
        assert isinstance(chi_enumerate_solve(S, CHI_ONLY), Unknown)


class TestSmt:
    def test_degree_zero_script_has_no_products(self):
        _, S = system("y_ge_1", "affine", 1, NONDECREASING)
        script = emit_smtlib(S)
        assert script.startswith("(set-logic QF_NRA)")
        assert "(* v_" not in script
        assert script.rstrip().endswith("(get-model)")

    def test_names(self):
        assert smt_name("delta") == "v_delta"
        assert smt_name("inv0_1_0_s1") == "v_inv0_1_0_s1"

    def test_gcd_product_variables(self):
        # the structural count; the published example counts 12
        _, S = system("gcd", "lex:2", 1, GENERAL)
        assert len(smt_product_variables(S)) == nonlinear_dimension(S)

    def test_empty_system(self):
        _, S = system("y_ge_1", "affine", 0, NONDECREASING)
        E = dataclasses.replace(S, subsystems=(), variables=())
        script = emit_smtlib(E)
        assert script == "(set-logic QF_NRA)\n(check-sat)\n(get-model)\n"
        if HAS_Z3:
            out = subprocess.run(["z3", "-in"], input=script, capture_output=True, text=True)
            assert out.stdout.splitlines()[0] == "sat"

    def test_parse_fraction(self):
        got = parse_smt_model("(model (define-fun v_delta () Real (/ 1 2)))", ["v_delta"])
        assert got == {"v_delta": Fraction(1, 2)}

    def test_parse_forms(self):
        text = """(
          (define-fun v_a () Real (- 3.0))
          (define-fun v_b () Real 0.25)
          (define-fun v_c () Real (- (/ 7 3)))
          (define-fun v_d () Real 4)
        )"""
        got = parse_smt_model(text, ["v_a", "v_b", "v_c", "v_d"])
        assert got == {"v_a": -3, "v_b": Fraction(1, 4), "v_c": Fraction(-7, 3), "v_d": 4}

    def test_parse_root_object(self):
        text = "((define-fun v_x () Real (root-obj (+ (^ x 2) (- 2)) 1)))"
        res = parse_smt_model(text, ["v_x"])
        assert isinstance(res, Unknown) and "irrational model value" in res.reason

    def test_parse_missing(self):
        with pytest.raises(ModelError):
            parse_smt_model("((define-fun v_x () Real 1))", ["v_y"])

    def test_parse_malformed(self):
        with pytest.raises(ModelError):
            parse_smt_model("((define-fun v_x () Real 1)", ["v_x"])

    @needs_z3
    def test_alpha_general_external(self):
        _, S = system("alpha2", "affine", 1, GENERAL)
        res = solve(S, SMT_ONLY)
        assert isinstance(res, Sat) and res.strategy == SMT and verified(S, res)

    def test_missing_solver_is_unknown(self):
        _, S = system("y_ge_1", "affine", 1, NONDECREASING)
        res = solve(S, SolverConfig(strategies=(SMT,), external_command="no-such-solver-xyz"))
        assert isinstance(res, Unknown)


LINEAR_SUITE = [("y_ge_1", "affine", 1), ("y_ge_1", "affine", 0), ("two_phase", "affine", 0),
                ("two_phase", "affine", 1), ("diff42", "affine", 1), ("alpha2", "affine", 1),
                ("disj", "affine", 0), ("int", "affine", 1)]


@needs_z3
@pytest.mark.parametrize("name,template,L", LINEAR_SUITE)
def test_internal_agrees_with_external(name, template, L):
    _, S = system(name, template, L, NONDECREASING)
    a, b = solve(S, INTERNAL_ONLY), solve(S, SMT_ONLY)
    assert type(a) is type(b)
