"""Cross-module properties on the program corpus."""

import shutil

import pytest

from lassorank.argument import check_decrease, extract_argument, sample_execution, verify_certificate
from lassorank.constraints import GENERAL, NONDECREASING, build_constraints
from lassorank.solver import SMT, Sat, SolverConfig, run_external, solve
from lassorank.templates import parse_template_spec

from conftest import load, system

SAT_SUITE = [("y_ge_1", "affine", 1, NONDECREASING), ("two_phase", "phase:2", 0, NONDECREASING),
             ("gcd", "piece:2", 2, GENERAL), ("gcd", "lex:2", 2, GENERAL),
             ("diff42", "affine", 1, NONDECREASING), ("alpha2", "affine", 1, GENERAL),
             ("disj", "affine", 0, GENERAL)]


@pytest.fixture(scope="module")
def solved():
    cache = {}

    def get(case):
        if case not in cache:
            P, S = system(*case)
            res = solve(S)
            assert isinstance(res, Sat), case
            cache[case] = (P, extract_argument(S, res.assignment, res.certificate, res.branch_id))
        return cache[case]
    return get


@pytest.mark.parametrize("case", SAT_SUITE, ids=lambda c: "%s-%s-%d" % c[:3])
def test_sampled_executions_decrease(solved, case):
    P, arg = solved(case)
    assert verify_certificate(P, arg).valid
    for seed in range(100):
        tr = sample_execution(P, 50, seed)
        assert all(tr.steps_ok)
        assert check_decrease(tr, arg.ranking, arg.invariants, P.varspace), seed


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not installed")
@pytest.mark.parametrize("case", [c for c in SAT_SUITE if c[0] != "gcd"],
                         ids=lambda c: "%s-%s-%d" % c[:3])
def test_omission_preserves_solutions(case):
    name, template, L, mode = case
    P = load(name)
    full = build_constraints(P, parse_template_spec(template), L, mode)
    before = run_external(full, SolverConfig(strategies=(SMT,), timeout=60))
    if isinstance(before, Sat):
        _, S = system(*case)
        assert isinstance(solve(S), Sat)
