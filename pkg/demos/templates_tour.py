"""
Programs that need richer templates.

Without a stem, ``y`` in the two-phase loop first climbs to a positive
value and only then does ``q`` fall, so the affine template is
unsatisfiable while a 2-phase function succeeds.  The gcd loop
alternates between two subtractions and is proved with either a 2-piece
or a 2-lexicographic function.
"""

import time

from _common import load

from lassorank.argument import describe_ranking, extract_argument, verify_certificate
from lassorank.constraints import GENERAL, NONDECREASING, build_constraints, omit_quantifiers
from lassorank.solver import Sat, solve
from lassorank.templates import parse_template_spec


def attempt(name, spec, invariants, mode):
    P = load(name)
    S = omit_quantifiers(build_constraints(P, parse_template_spec(spec), invariants, mode))
    start = time.time()
    res = solve(S)
    took = time.time() - start
    print("%s with %s, %d invariant(s), %s: %s (%.1fs)"
          % (name, spec, invariants, mode, type(res).__name__, took))
    if isinstance(res, Sat):
        arg = extract_argument(S, res.assignment, res.certificate, res.branch_id)
        assert verify_certificate(P, arg)
        for line in describe_ranking(arg.ranking, P.varspace):
            print("    " + line)
        for inv in arg.invariants:
            if not inv.trivial:
                print("    invariant " + inv.render(P.varspace))


def main():
    attempt("two_phase", "affine", 0, NONDECREASING)
    attempt("two_phase", "phase:2", 0, NONDECREASING)
    attempt("gcd", "lex:2", 2, GENERAL)
    attempt("gcd", "piece:2", 2, GENERAL)


if __name__ == "__main__":
    main()
