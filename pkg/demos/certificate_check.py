"""
Checking a hand-written argument.

A certificate holds exact Motzkin multipliers for every proof
obligation, so it can be re-checked without trusting any solver.  The
script packages ``q + 1`` with step 1/2 and invariant ``y >= 1``, checks
it, and then shows a few broken variants being rejected with a reason.
"""

import dataclasses
from fractions import Fraction

from _common import load

from lassorank.argument import (AffineFunction, RankingFunction, SupportingInvariant,
                                dumps_argument, replicate, verify_certificate, with_certificate)
from lassorank.constraints import NONDECREASING


def main():
    P = load("y_ge_1")
    rf = RankingFunction("affine", (AffineFunction.make([1, 0], 1),), (Fraction(1, 2),))
    inv = SupportingInvariant(AffineFunction.make([0, 1], -1))
    arg = with_certificate(P, rf, [inv], NONDECREASING)
    print("hand argument valid:", verify_certificate(P, arg).valid)
    print("serialized size: %d bytes" % len(dumps_argument(arg)))

    slow = RankingFunction("affine", rf.functions, (Fraction(2),))
    wrong = SupportingInvariant(AffineFunction.make([0, 1], -2))
    variants = {
        "step 0": dataclasses.replace(arg, ranking=RankingFunction("affine", rf.functions,
                                                                   (Fraction(0),))),
        "step 2": dataclasses.replace(arg, ranking=slow),
        "invariant y >= 2": dataclasses.replace(arg, copies=replicate(rf, [wrong], 1)),
    }
    for name, bad in variants.items():
        print("%-18s %s" % (name + ":", verify_certificate(P, bad).reason))


if __name__ == "__main__":
    main()
