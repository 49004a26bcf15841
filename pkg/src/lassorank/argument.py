"""
Termination arguments: extraction, ordinal ranks, checking and sampling.

A solved constraint system yields concrete affine functions for the
template symbols and the supporting invariants, plus Motzkin multipliers
for every obligation.  ``verify_certificate`` rebuilds the obligations
from scratch and re-checks the multipliers exactly, so a reported
argument never depends on the solver being right.

Ranks are ordinals below omega^k, stored as coefficient vectors with the
most significant entry first.
"""

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import lp
from .constraints import (GENERAL, NONDECREASING, ConstraintSystem, MotzkinCertificate,
                          SubCertificate, build_constraints, certify_parameters,
                          check_subsystem)
from .core import Q, format_linear
from .parser import LassoProgram, prime
from .templates import Template, make_template

SAMPLE_BOX = Fraction(10) ** 6
START_BOX = Fraction(100)


class ShapeMismatch(ValueError):
    """The certificate does not fit the obligations of this program."""


@dataclass(frozen=True)
class AffineFunction:
    s: Tuple[Fraction, ...]
    t: Fraction

    @staticmethod
    def make(s: Sequence, t=0) -> "AffineFunction":
        return AffineFunction(tuple(Q(x) for x in s), Q(t))

    def __call__(self, x: Mapping[str, Fraction], varspace: Sequence[str]) -> Fraction:
        return sum((c * Q(x[v]) for c, v in zip(self.s, varspace)), Fraction(0)) + self.t

    def render(self, varspace: Sequence[str]) -> str:
        lin = {v: c for v, c in zip(varspace, self.s) if c}
        if not lin:
            return str(self.t)
        text = format_linear(lin)
        if self.t:
            text += " %s %s" % ("-" if self.t < 0 else "+", abs(self.t))
        return text


@dataclass(frozen=True)
class SupportingInvariant:
    func: AffineFunction
    strict: bool = False

    def holds(self, x: Mapping[str, Fraction], varspace: Sequence[str]) -> bool:
        v = self.func(x, varspace)
        return v > 0 if self.strict else v >= 0

    @property
    def trivial(self) -> bool:
        return all(c == 0 for c in self.func.s)

    def render(self, varspace: Sequence[str]) -> str:
        return "%s %s 0" % (self.func.render(varspace), ">" if self.strict else ">=")


@dataclass(frozen=True)
class RankingFunction:
    """Kind-tagged: affine, phase (multiphase), piece or lex.

    ``functions`` are the ranking functions, ``deltas`` their step sizes
    (a single shared one for piece), ``predicates`` the discriminating
    predicates of piece.
    """

    kind: str
    functions: Tuple[AffineFunction, ...]
    deltas: Tuple[Fraction, ...]
    predicates: Tuple[AffineFunction, ...] = ()

    @property
    def k(self) -> int:
        return len(self.functions)

    def template(self) -> Template:
        return make_template(self.kind, 1 if self.kind == "affine" else self.k)

    def parameter_values(self, n: int) -> Dict[str, Fraction]:
        """Values of the template coefficients this function instantiates."""
        T = self.template()
        funcs = self.functions + self.predicates
        if len(funcs) != len(T.functions) or len(self.deltas) != len(T.scalars):
            raise ShapeMismatch("ranking function does not fit template %s" % T.spec)
        out = {}
        for name, f in zip(T.functions, funcs):
            if len(f.s) != n:
                raise ShapeMismatch("function %s has %d coefficients, expected %d"
                                    % (name, len(f.s), n))
            out.update({"%s_s%d" % (name, j): c for j, c in enumerate(f.s)})
            out["%s_t" % name] = f.t
        out.update(zip(T.scalars, self.deltas))
        return out


@dataclass(frozen=True, order=True)
class OrdinalValue:
    """sum_j c_j * omega^j, stored as (c_{k-1}, ..., c_0)."""

    coeffs: Tuple[int, ...]

    def padded(self, k: int) -> Tuple[int, ...]:
        return (0,) * (k - len(self.coeffs)) + tuple(self.coeffs)

    def __str__(self):
        k = len(self.coeffs)
        parts = []
        for pos, c in enumerate(self.coeffs):
            e = k - 1 - pos
            if c == 0:
                continue
            if e == 0:
                parts.append(str(c))
            else:
                w = "w" if e == 1 else "w^%d" % e
                parts.append(w if c == 1 else "%s*%d" % (w, c))
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class TerminationArgument:
    ranking: RankingFunction
    copies: Tuple[Tuple[Tuple[int, int, int], SupportingInvariant], ...]
    certificate: MotzkinCertificate
    branch_id: Tuple[int, ...] = ()
    mode: str = GENERAL
    num_invariants: int = 0

    @property
    def invariants(self) -> Tuple[SupportingInvariant, ...]:
        """Replicated invariants with duplicates removed, in first-seen order."""
        seen = []
        for _, inv in self.copies:
            if inv not in seen:
                seen.append(inv)
        return tuple(seen)


@dataclass(frozen=True)
class Trace:
    states: Tuple[Dict[str, Fraction], ...]
    stem_ok: bool
    steps_ok: Tuple[bool, ...]
    ended: str                   # loop-exit, step cap, bound or no execution


# -- ordinals ----------------------------------------------------------------

def ordinal_equiv(f: AffineFunction, delta: Fraction, x: Mapping[str, Fraction],
                  varspace: Sequence[str]) -> int:
    delta = Q(delta)
    if delta <= 0:
        raise ValueError("step size must be positive, got %s" % delta)
    v = f(x, varspace)
    return math.ceil(v / delta) if v > 0 else 0


def rank(rf: RankingFunction, x: Mapping[str, Fraction], varspace: Sequence[str]
         ) -> OrdinalValue:
    k = rf.k
    if rf.kind == "affine":
        return OrdinalValue((ordinal_equiv(rf.functions[0], rf.deltas[0], x, varspace),))
    if rf.kind == "phase":
        for i, (f, d) in enumerate(zip(rf.functions, rf.deltas)):
            if f(x, varspace) > 0:
                return OrdinalValue((k - 1 - i, ordinal_equiv(f, d, x, varspace)))
        return OrdinalValue((0, 0))
    if rf.kind == "piece":
        vals = [ordinal_equiv(f, rf.deltas[0], x, varspace)
                for f, g in zip(rf.functions, rf.predicates) if g(x, varspace) >= 0]
        return OrdinalValue((max(vals, default=0),))
    if rf.kind == "lex":
        return OrdinalValue(tuple(ordinal_equiv(f, d, x, varspace)
                                  for f, d in zip(rf.functions, rf.deltas)))
    raise ValueError("unknown ranking function kind %r" % rf.kind)


def ordinal_less(a: OrdinalValue, b: OrdinalValue) -> bool:
    k = max(len(a.coeffs), len(b.coeffs))
    return a.padded(k) < b.padded(k)


# -- extraction --------------------------------------------------------------

def _function(asg: Mapping[str, Fraction], name: str, n: int) -> AffineFunction:
    try:
        return AffineFunction(tuple(Q(asg["%s_s%d" % (name, j)]) for j in range(n)),
                              Q(asg["%s_t" % name]))
    except KeyError as e:
        raise KeyError("assignment misses %s" % e.args[0]) from None


def ranking_from_assignment(T: Template, asg: Mapping[str, Fraction], n: int
                            ) -> RankingFunction:
    funcs = [_function(asg, f, n) for f in T.functions]
    try:
        deltas = tuple(Q(asg[d]) for d in T.scalars)
    except KeyError as e:
        raise KeyError("assignment misses %s" % e.args[0]) from None
    if T.kind == "piece":
        return RankingFunction("piece", tuple(funcs[:T.k]), deltas, tuple(funcs[T.k:]))
    return RankingFunction(T.kind, tuple(funcs), deltas)


def extract_argument(S: ConstraintSystem, asg: Mapping[str, Fraction],
                     cert: MotzkinCertificate, branch_id: Tuple[int, ...] = ()
                     ) -> TerminationArgument:
    n = S.program.n
    rf = ranking_from_assignment(S.template, asg, n)
    copies = []
    for c in S.copies:
        f = _function(asg, c.name, n)
        copies.append(((c.l, c.i, c.m), SupportingInvariant(f, c.strict)))
    return TerminationArgument(rf, tuple(copies), cert, tuple(branch_id), S.mode,
                               S.num_invariants)


def replicate(rf: RankingFunction, invariants: Sequence[SupportingInvariant],
              num_loop: int) -> Tuple[Tuple[Tuple[int, int, int], SupportingInvariant], ...]:
    """Place one invariant per slot into every (conjunct, loop disjunct) copy."""
    T = rf.template()
    return tuple(((l, i, m), inv) for i in range(len(T.conjuncts)) for m in range(num_loop)
                 for l, inv in enumerate(invariants))


def _system_for(P: LassoProgram, arg: TerminationArgument) -> ConstraintSystem:
    strict = [False] * arg.num_invariants
    for (l, _, _), inv in arg.copies:
        if l >= arg.num_invariants:
            raise ShapeMismatch("invariant slot %d out of range" % l)
        strict[l] = inv.strict
    return build_constraints(P, arg.ranking.template(), arg.num_invariants, arg.mode, strict)


def _parameters(P: LassoProgram, arg: TerminationArgument, S: ConstraintSystem):
    params = arg.ranking.parameter_values(P.n)
    by_slot = {key: inv for key, inv in arg.copies}
    for c in S.copies:
        inv = by_slot.get((c.l, c.i, c.m))
        if inv is None:
            raise ShapeMismatch("no invariant for copy %s" % c.name)
        if inv.strict != c.strict:
            raise ShapeMismatch("strictness of slot %d differs between copies" % c.l)
        if len(inv.func.s) != P.n:
            raise ShapeMismatch("invariant %s has %d coefficients, expected %d"
                                % (c.name, len(inv.func.s), P.n))
        params.update({c.s(j): x for j, x in enumerate(inv.func.s)})
        params[c.t] = inv.func.t
    if len(by_slot) != len(S.copies):
        raise ShapeMismatch("argument has %d invariant copies, expected %d"
                            % (len(by_slot), len(S.copies)))
    return params


def certify(P: LassoProgram, arg: TerminationArgument) -> Optional[MotzkinCertificate]:
    """Multipliers for a given concrete argument, or None when none exist."""
    S = _system_for(P, arg)
    return certify_parameters(S, _parameters(P, arg, S))


def with_certificate(P: LassoProgram, rf: RankingFunction,
                     invariants: Sequence[SupportingInvariant],
                     mode: str = GENERAL) -> Optional[TerminationArgument]:
    """Package a hand-written argument with its exact certificate."""
    copies = replicate(rf, invariants, len(P.loop))
    draft = TerminationArgument(rf, copies, MotzkinCertificate(()), (), mode, len(invariants))
    cert = certify(P, draft)
    if cert is None:
        return None
    return TerminationArgument(rf, copies, cert, (), mode, len(invariants))


@dataclass(frozen=True)
class Verdict:
    valid: bool
    reason: str = ""

    def __bool__(self):
        return self.valid


def verify_certificate(P: LassoProgram, arg: TerminationArgument) -> Verdict:
    """Re-check every obligation exactly; raises ShapeMismatch on misfit input."""
    for d in arg.ranking.deltas:
        if d <= 0:
            return Verdict(False, "δ > 0 violated")
    S = _system_for(P, arg)
    params = _parameters(P, arg, S)
    tags = [sub.tag for sub in S.subsystems]
    if sorted(tags) != sorted(arg.certificate.tags):
        raise ShapeMismatch("certificate shape mismatch: expected %d subsystems, got %d"
                            % (len(tags), len(arg.certificate.tags)))
    for sub in S.subsystems:
        reason = check_subsystem(sub, params, arg.certificate.get(sub.tag))
        if reason is not None:
            if "shape mismatch" in reason:
                raise ShapeMismatch(reason)
            return Verdict(False, reason)
    return Verdict(True)


# -- executions --------------------------------------------------------------

def _box(names, bound=SAMPLE_BOX):
    rows = []
    for v in names:
        rows.append(lp.row({v: 1}, lp.LE, bound))
        rows.append(lp.row({v: -1}, lp.LE, bound))
    return rows


def _random_start(rows: List[lp.Row], names: Sequence[str], rng: random.Random
                  ) -> Optional[Dict[str, Fraction]]:
    """Fix coordinates one at a time, preferring integers inside the range left."""
    work = rows + _box(names, START_BOX)
    if not lp.is_feasible(work):
        return None
    order = list(names)
    rng.shuffle(order)
    point = {}
    for v in order:
        _, lo, _ = lp.optimize(work, {v: 1})
        _, hi, _ = lp.optimize(work, {v: 1}, maximize=True)
        if lo == hi:
            val = lo
        else:
            ints = range(math.floor(lo) + 1, math.ceil(hi))
            if ints:
                val = Fraction(rng.choice(ints))
            else:
                val = lo + (hi - lo) * Fraction(rng.randint(1, 9), 10)
        point[v] = val
        work = [lp.substitute(r, {v: val}) for r in work]
    return point


def _objective(rng: random.Random, names):
    return {v: Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for v in names}


def _pick_point(rows: List[lp.Row], names: Sequence[str], rng: random.Random
                ) -> Optional[Dict[str, Fraction]]:
    """A point of ``rows`` in the sampling box, steered by a random objective."""
    rows = rows + _box(names)
    inner = lp.feasible_point(rows)
    if inner is None:
        return None
    status, _, vertex = lp.optimize(rows, _objective(rng, names), maximize=True)
    point = {v: inner.get(v, Fraction(0)) for v in names}
    if status == "optimal":
        cand = {v: vertex.get(v, Fraction(0)) for v in names}
        if not all(r.holds(cand) for r in rows):
            # the vertex sits on a strict face; step back towards the interior
            cand = {v: (cand[v] + point[v]) / 2 for v in names}
        point = cand
    return point


def sample_execution(P: LassoProgram, max_steps: int, seed: int = 0,
                     start: Optional[Mapping[str, Fraction]] = None) -> Trace:
    rng = random.Random(seed)
    names = list(P.varspace)
    if start is not None:
        x = {v: Q(start[v]) for v in names}
        if not P.in_stem(x):
            return Trace((), False, (), "no execution")
    else:
        order = list(range(len(P.stem)))
        rng.shuffle(order)
        x = None
        for k in order:
            x = _random_start([lp.from_atom(a) for a in P.stem[k].atoms], names, rng)
            if x is not None:
                break
        if x is None:
            return Trace((), False, (), "no execution")
    states = [x]
    steps = []
    ended = "step cap"
    for _ in range(max_steps):
        order = list(range(len(P.loop)))
        rng.shuffle(order)
        nxt = None
        for m in order:
            rows = [lp.substitute(lp.from_atom(a), x) for a in P.loop[m].atoms]
            y = _pick_point(rows, [prime(v) for v in names], rng)
            if y is not None:
                nxt = {v: y[prime(v)] for v in names}
                break
        if nxt is None:
            # a successor may still exist outside the sampling box
            escaped = any(lp.is_feasible([lp.substitute(lp.from_atom(a), x) for a in L.atoms])
                          for L in P.loop)
            ended = "bound" if escaped else "loop-exit"
            break
        steps.append(P.in_loop(x, nxt))
        states.append(nxt)
        x = nxt
    return Trace(tuple(states), P.in_stem(states[0]), tuple(steps), ended)


def check_decrease(trace: Trace, rf: RankingFunction,
                   invariants: Sequence[SupportingInvariant], varspace: Sequence[str]) -> bool:
    for x in trace.states:
        if not all(inv.holds(x, varspace) for inv in invariants):
            return False
    ranks = [rank(rf, x, varspace) for x in trace.states]
    return all(ordinal_less(b, a) for a, b in zip(ranks, ranks[1:]))


# -- serialization -----------------------------------------------------------

def _fr(x: Fraction) -> str:
    return str(Fraction(x))


def _func_doc(f: AffineFunction):
    return {"s": [_fr(c) for c in f.s], "t": _fr(f.t)}


def _func_load(d) -> AffineFunction:
    return AffineFunction.make([Fraction(c) for c in d["s"]], Fraction(d["t"]))


def argument_to_doc(arg: TerminationArgument) -> dict:
    rf = arg.ranking
    T = rf.template()
    return {
        "template": {"kind": rf.kind, "k": T.k, "spec": T.spec},
        "mode": arg.mode,
        "num_invariants": arg.num_invariants,
        "ranking": {"functions": [_func_doc(f) for f in rf.functions],
                    "deltas": [_fr(d) for d in rf.deltas],
                    "predicates": [_func_doc(g) for g in rf.predicates]},
        "copies": [{"slot": list(key), "strict": inv.strict, **_func_doc(inv.func)}
                   for key, inv in arg.copies],
        "branch_id": list(arg.branch_id),
        "certificate": [{"tag": tag, "disjunct": sc.disjunct,
                         "values": {v: _fr(x) for v, x in sc.values}}
                        for tag, sc in arg.certificate.entries],
    }


def argument_from_doc(doc: dict) -> TerminationArgument:
    """Inverse of ``argument_to_doc``; raises ValueError on malformed input."""
    try:
        r = doc["ranking"]
        rf = RankingFunction(doc["template"]["kind"],
                             tuple(_func_load(f) for f in r["functions"]),
                             tuple(Fraction(d) for d in r["deltas"]),
                             tuple(_func_load(g) for g in r.get("predicates", ())))
        copies = tuple((tuple(int(i) for i in c["slot"]),
                        SupportingInvariant(_func_load(c), bool(c["strict"])))
                       for c in doc["copies"])
        entries = tuple((e["tag"], SubCertificate(
            tuple(sorted((v, Fraction(x)) for v, x in e["values"].items())), e["disjunct"]))
            for e in doc["certificate"])
        mode = doc.get("mode", GENERAL)
        if mode not in (GENERAL, NONDECREASING):
            raise ValueError("unknown mode %r" % mode)
        return TerminationArgument(rf, copies, MotzkinCertificate(entries),
                                   tuple(int(b) for b in doc.get("branch_id", ())), mode,
                                   int(doc["num_invariants"]))
    except (KeyError, TypeError, ZeroDivisionError, AttributeError) as e:
        raise ValueError("malformed argument document: %s" % e) from None


def dumps_argument(arg: TerminationArgument) -> str:
    return json.dumps(argument_to_doc(arg), indent=2, sort_keys=True)


def loads_argument(text: str) -> TerminationArgument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError("malformed argument document: %s" % e) from None
    if not isinstance(doc, dict):
        raise ValueError("malformed argument document: expected an object")
    if "argument" in doc:
        doc = doc["argument"]
    return argument_from_doc(doc)


def describe_ranking(rf: RankingFunction, varspace: Sequence[str]) -> List[str]:
    out = []
    if rf.kind == "piece":
        for i, (f, g) in enumerate(zip(rf.functions, rf.predicates), 1):
            out.append("f%d(x) = %s   if g%d(x) = %s >= 0"
                       % (i, f.render(varspace), i, g.render(varspace)))
        out.append("delta = %s" % rf.deltas[0])
        return out
    for i, (f, d) in enumerate(zip(rf.functions, rf.deltas), 1):
        name = "f" if rf.k == 1 else "f%d" % i
        dn = "delta" if rf.k == 1 else "delta%d" % i
        out.append("%s(x) = %s,  %s = %s" % (name, f.render(varspace), dn, d))
    return out
