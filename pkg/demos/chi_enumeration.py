"""
A loop whose invariant is inductive only with a fractional multiplier.

In ``y := (y + 1) / 2`` entered at ``y = 2`` the invariant ``y >= 1``
holds throughout, yet it is not non-decreasing, so the non-decreasing
mode fails.  In general mode consecution needs the multiplier of the
old invariant row to be 1/2.  Candidate enumeration reads that value off
the loop rows, and the external solver finds it too when z3 is present.
"""

import shutil

from _common import load

from lassorank.constraints import GENERAL, NONDECREASING, build_constraints, omit_quantifiers
from lassorank.solver import CHI, SMT, Sat, SolverConfig, chi_candidates, solve
from lassorank.templates import make_template


def system(mode):
    P = load("alpha2")
    return omit_quantifiers(build_constraints(P, make_template("affine"), 1, mode))


def report(label, res):
    print("%-28s %s" % (label, type(res).__name__))
    if isinstance(res, Sat):
        chis = sorted({str(v) for k, v in res.assignment.items() if k.endswith("_chi1")})
        print("%-28s chi1 values used: %s" % ("", ", ".join(chis)))


def main():
    report("non-decreasing mode:", solve(system(NONDECREASING)))
    S = system(GENERAL)
    cands = chi_candidates(S)
    print("candidates for %s: %s" % (next(iter(cands)),
                                     ", ".join(str(c) for c in next(iter(cands.values())))))
    report("general, chi enumeration:", solve(S, SolverConfig(strategies=(CHI,))))
    if shutil.which("z3"):
        report("general, external solver:", solve(S, SolverConfig(strategies=(SMT,))))


if __name__ == "__main__":
    main()
