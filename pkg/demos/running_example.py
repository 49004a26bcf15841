"""
Walk the running example end to end.

The loop ``q >= 0 && q' = q - y && y' = y + 1`` entered with ``y = 1``
terminates, but an affine ranking function alone cannot show it: ``q``
only decreases because ``y`` stays at least 1.  The script prints the
normal form, shows the proof failing without an invariant, then finds
``q + 1`` together with ``y >= 1`` and replays one execution.
"""

from _common import load

from lassorank.argument import (check_decrease, describe_ranking, extract_argument, rank,
                                sample_execution, verify_certificate)
from lassorank.constraints import NONDECREASING, build_constraints, omit_quantifiers
from lassorank.parser import render_program
from lassorank.solver import Sat, solve
from lassorank.templates import make_template


def synthesize(P, invariants):
    S = omit_quantifiers(build_constraints(P, make_template("affine"), invariants, NONDECREASING))
    return S, solve(S)


def main():
    P = load("y_ge_1")
    print(render_program(P))

    _, res = synthesize(P, 0)
    print("\nwithout an invariant:", type(res).__name__, "-", res.reason)

    S, res = synthesize(P, 1)
    assert isinstance(res, Sat)
    arg = extract_argument(S, res.assignment, res.certificate, res.branch_id)
    print("\nwith one invariant slot (%s strategy):" % res.strategy)
    for line in describe_ranking(arg.ranking, P.varspace):
        print("  " + line)
    for inv in arg.invariants:
        if not inv.trivial:
            print("  invariant " + inv.render(P.varspace))
    print("  certificate check:", "valid" if verify_certificate(P, arg) else "INVALID")

    # the execution from the worked example: (2, 1), (1, 2), (-1, 3)
    tr = sample_execution(P, 10, start={"q": 2, "y": 1})
    for x in tr.states:
        print("  q = %-3s y = %-3s rank %s" % (x["q"], x["y"], rank(arg.ranking, x, P.varspace)))
    print("  ended by", tr.ended, "; rank decreases:",
          check_decrease(tr, arg.ranking, arg.invariants, P.varspace))


if __name__ == "__main__":
    main()
