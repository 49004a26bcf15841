import os
from fractions import Fraction

import pytest

from lassorank.constraints import GENERAL, build_constraints, omit_quantifiers
from lassorank.parser import load_program
from lassorank.templates import parse_template_spec

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PROGRAMS = os.path.join(ROOT, "programs")


def program_path(name):
    return os.path.join(PROGRAMS, name + ".lasso")


def load(name):
    with open(program_path(name)) as fh:
        return load_program(fh.read())


def system(name_or_program, template="affine", invariants=1, mode=GENERAL, strict=()):
    P = load(name_or_program) if isinstance(name_or_program, str) else name_or_program
    S = build_constraints(P, parse_template_spec(template), invariants, mode, strict)
    return P, omit_quantifiers(S)


def F(x):
    return Fraction(x)


@pytest.fixture
def y_ge_1():
    return load("y_ge_1")


# -- the running example's hand argument and a corpus of broken variants ----

def running_argument():
    """f = q + 1, delta = 1/2, invariant y - 1 >= 0, with a computed certificate."""
    from lassorank.argument import AffineFunction, RankingFunction, SupportingInvariant, with_certificate
    from lassorank.constraints import NONDECREASING
    P = load("y_ge_1")
    rf = RankingFunction("affine", (AffineFunction.make([1, 0], 1),), (Fraction(1, 2),))
    inv = SupportingInvariant(AffineFunction.make([0, 1], -1))
    return P, with_certificate(P, rf, [inv], NONDECREASING)


def mutations(arg):
    """Twenty wrong variants of ``arg``; the certificate is reused unless noted."""
    import dataclasses
    from lassorank.argument import AffineFunction, RankingFunction, SupportingInvariant, replicate
    from lassorank.constraints import CLASSICAL, NONCLASSICAL, MotzkinCertificate, SubCertificate

    rf = arg.ranking

    def with_rf(f=None, delta=None):
        return dataclasses.replace(arg, ranking=RankingFunction(
            "affine", (f or rf.functions[0],), (Fraction(delta) if delta is not None
                                               else rf.deltas[0],)))

    def with_inv(s, t, strict=False):
        inv = SupportingInvariant(AffineFunction.make(s, t), strict)
        return dataclasses.replace(arg, copies=replicate(rf, [inv], 1))

    def with_entry(k, fn):
        entries = list(arg.certificate.entries)
        tag, sc = entries[k]
        entries[k] = (tag, fn(sc))
        return dataclasses.replace(arg, certificate=MotzkinCertificate(tuple(entries)))

    def scale_first(factor):
        def fn(sc):
            vals = list(sc.values)
            k = next(i for i, (_, x) in enumerate(vals) if x != 0)
            vals[k] = (vals[k][0], vals[k][1] * factor)
            return SubCertificate(tuple(vals), sc.disjunct)
        return fn

    def negate_first(sc):
        vals = list(sc.values)
        vals[0] = (vals[0][0], -1 - abs(vals[0][1]))
        return SubCertificate(tuple(vals), sc.disjunct)

    def flip_disjunct(sc):
        other = NONCLASSICAL if sc.disjunct == CLASSICAL else CLASSICAL
        return SubCertificate(sc.values, other)

    def zero_all(sc):
        return SubCertificate(tuple((v, Fraction(0)) for v, _ in sc.values), sc.disjunct)

    last = len(arg.certificate.entries) - 1
    return [
        ("delta 0", with_rf(delta=0)),
        ("delta -1/2", with_rf(delta=Fraction(-1, 2))),
        ("delta 1", with_rf(delta=1)),
        ("delta 2", with_rf(delta=2)),
        ("invariant y >= 2", with_inv([0, 1], -2)),
        ("invariant y >= 3", with_inv([0, 1], -3)),
        ("invariant y > 1", with_inv([0, 1], -1, strict=True)),
        ("invariant y <= 1", with_inv([0, -1], 1)),
        ("invariant q >= 0", with_inv([1, 0], 0)),
        ("f = -q + 1", with_rf(f=AffineFunction.make([-1, 0], 1))),
        ("f = q - 1", with_rf(f=AffineFunction.make([1, 0], -1))),
        ("f = -q - 1", with_rf(f=AffineFunction.make([-1, 0], -1))),
        ("f = y", with_rf(f=AffineFunction.make([0, 1], 0))),
        ("f = q + y", with_rf(f=AffineFunction.make([1, 1], 0))),
        ("f = q", with_rf(f=AffineFunction.make([1, 0], 0))),
        ("negative multiplier", with_entry(0, negate_first)),
        ("doubled multiplier", with_entry(last, scale_first(2))),
        ("flipped disjunct", with_entry(last, flip_disjunct)),
        ("zeroed initiation", with_entry(0, zero_all)),
        ("zeroed implication", with_entry(last, zero_all)),
    ]
