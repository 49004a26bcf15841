"""
Exact linear arithmetic over the rationals.

Atoms are ``coeffs . x  rel  constant`` with ``rel`` one of ``<=`` or
``<``.  A polyhedron is a conjunction of such atoms over an ordered
variable space.  Fourier-Motzkin elimination keeps track of strictness,
so projections are exact over Q and not just over the closure.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import floor, ceil, gcd
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

Rational = Fraction
Valuation = Dict[str, Fraction]

LE = "<="
LT = "<"


class UnboundVariable(KeyError):
    def __str__(self):
        return "unbound variable: %s" % self.args[0]


def Q(value: Union[int, str, Fraction]) -> Fraction:
    """Coerce ints, fraction strings and Fractions to a Fraction."""
    if isinstance(value, float):
        raise TypeError("floats are not exact; pass a string or Fraction")
    return Fraction(value)


@dataclass(frozen=True)
class LinAtom:
    """``sum(c * v) rel constant``; zero coefficients are never stored."""

    terms: Tuple[Tuple[str, Fraction], ...]
    constant: Fraction
    strict: bool = False

    @classmethod
    def make(cls, coeffs: Mapping[str, object], constant=0, rel: str = LE):
        if rel not in (LE, LT):
            raise ValueError("relation must be <= or <, got %r" % rel)
        terms = tuple(sorted((v, Q(c)) for v, c in coeffs.items() if Q(c) != 0))
        return cls(terms, Q(constant), rel == LT)

    @property
    def coeffs(self) -> Dict[str, Fraction]:
        return dict(self.terms)

    @property
    def relation(self) -> str:
        return LT if self.strict else LE

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.terms)

    def is_degenerate(self) -> bool:
        return not self.terms

    def holds_trivially(self) -> bool:
        """Truth value of a degenerate atom (``0 rel constant``)."""
        return self.constant > 0 if self.strict else self.constant >= 0

    def lhs(self, v: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for name, c in self.terms:
            if name not in v:
                raise UnboundVariable(name)
            total += c * v[name]
        return total

    def negate(self) -> "LinAtom":
        """Complement: not(a.x <= b) is -a.x < -b and vice versa."""
        return LinAtom(tuple((v, -c) for v, c in self.terms), -self.constant,
                       not self.strict)

    def scaled(self, factor: Fraction) -> "LinAtom":
        if factor <= 0:
            raise ValueError("atoms may only be scaled by positive factors")
        return LinAtom(tuple((v, c * factor) for v, c in self.terms),
                       self.constant * factor, self.strict)

    def primitive(self) -> "LinAtom":
        """Scale so the coefficients are coprime integers."""
        if not self.terms:
            if self.constant == 0:
                return self
            return LinAtom((), Fraction(1 if self.constant > 0 else -1), self.strict)
        den = 1
        for _, c in self.terms:
            den = den * c.denominator // gcd(den, c.denominator)
        num = 0
        for _, c in self.terms:
            num = gcd(num, (c * den).numerator)
        return self.scaled(Fraction(den, num))

    def substitute(self, values: Mapping[str, Fraction]) -> "LinAtom":
        """Plug in the given values, keeping the remaining variables."""
        rest = {}
        const = self.constant
        for v, c in self.terms:
            if v in values:
                const -= c * values[v]
            else:
                rest[v] = c
        return LinAtom.make(rest, const, self.relation)

    def __str__(self):
        return "%s %s %s" % (format_linear(self.coeffs), self.relation,
                             self.constant)


def equality(coeffs: Mapping[str, object], constant=0) -> Tuple[LinAtom, LinAtom]:
    """``coeffs . x = constant`` as the pair ``<=`` and ``>=``."""
    up = LinAtom.make(coeffs, constant, LE)
    return up, LinAtom.make({v: -Q(c) for v, c in coeffs.items()}, -Q(constant), LE)


def format_linear(coeffs: Mapping[str, Fraction]) -> str:
    if not coeffs:
        return "0"
    parts = []
    for v, c in coeffs.items():
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = v if mag == 1 else "%s*%s" % (mag, v)
        parts.append((sign, body))
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in parts[1:]:
        out += " %s %s" % (sign, body)
    return out


@dataclass(frozen=True)
class Polyhedron:
    nonstrict: Tuple[LinAtom, ...]
    strict: Tuple[LinAtom, ...]
    varspace: Tuple[str, ...]

    def __post_init__(self):
        space = set(self.varspace)
        for a in self.nonstrict:
            if a.strict:
                raise ValueError("strict atom in the non-strict list: %s" % a)
        for a in self.strict:
            if not a.strict:
                raise ValueError("non-strict atom in the strict list: %s" % a)
        for a in self.nonstrict + self.strict:
            missing = set(a.variables) - space
            if missing:
                raise ValueError("atom %s uses variables outside the varspace: %s"
                                 % (a, sorted(missing)))

    @classmethod
    def make(cls, atoms: Iterable[LinAtom], varspace: Optional[Sequence[str]] = None):
        atoms = list(atoms)
        if varspace is None:
            seen = []
            for a in atoms:
                for v in a.variables:
                    if v not in seen:
                        seen.append(v)
            varspace = seen
        return cls(tuple(a for a in atoms if not a.strict),
                   tuple(a for a in atoms if a.strict), tuple(varspace))

    @property
    def atoms(self) -> Tuple[LinAtom, ...]:
        return self.nonstrict + self.strict

    def __len__(self):
        return len(self.nonstrict) + len(self.strict)

    def __str__(self):
        return " && ".join(str(a) for a in self.atoms) or "true"


def eval_atom(atom: LinAtom, v: Mapping[str, Fraction]) -> bool:
    lhs = atom.lhs(v)
    return lhs < atom.constant if atom.strict else lhs <= atom.constant


def polyhedron_contains(P: Polyhedron, v: Mapping[str, Fraction]) -> bool:
    for name in P.varspace:
        if name not in v:
            raise UnboundVariable(name)
    return all(eval_atom(a, v) for a in P.atoms)


def _combine(pos: LinAtom, neg: LinAtom, var: str) -> LinAtom:
    """Cancel ``var`` between an upper bound (pos) and a lower bound (neg)."""
    p = pos.coeffs[var]
    n = -neg.coeffs[var]
    merged: Dict[str, Fraction] = {}
    for v, c in pos.terms:
        merged[v] = merged.get(v, 0) + n * c
    for v, c in neg.terms:
        merged[v] = merged.get(v, 0) + p * c
    merged.pop(var, None)
    const = n * pos.constant + p * neg.constant
    return LinAtom.make(merged, const, LT if (pos.strict or neg.strict) else LE)


def _eliminate_atoms(atoms: Sequence[LinAtom], var: str):
    keep, upper, lower = [], [], []
    for a in atoms:
        c = a.coeffs.get(var, 0)
        if c > 0:
            upper.append(a)
        elif c < 0:
            lower.append(a)
        else:
            keep.append(a)
    out = []
    seen = set()
    false_atom = None
    for a in keep + [_combine(u, l, var) for u in upper for l in lower]:
        if a.is_degenerate():
            if a.holds_trivially():
                continue
            false_atom = a.primitive()
            break
        a = a.primitive()
        if a not in seen:
            seen.add(a)
            out.append(a)
    if false_atom is not None:
        return [false_atom]
    # among parallel atoms (same left side) only the tightest survives
    best: Dict[Tuple, LinAtom] = {}
    for a in out:
        key = a.terms
        cur = best.get(key)
        if cur is None or (a.constant, not a.strict) < (cur.constant, not cur.strict):
            best[key] = a
    return list(best.values())


def fm_eliminate(P: Polyhedron, var: str) -> Polyhedron:
    """Project ``var`` out of ``P``.

    A combined atom is strict iff one of its parents is.
    """
    if var not in P.varspace:
        raise ValueError("%s is not in the varspace" % var)
    atoms = _eliminate_atoms(P.atoms, var)
    return Polyhedron.make(atoms, [v for v in P.varspace if v != var])


def is_trivially_false(P: Polyhedron) -> bool:
    return any(a.is_degenerate() and not a.holds_trivially() for a in P.atoms)


def simplest_between(lo: Optional[Fraction], hi: Optional[Fraction],
                     lo_open: bool = False, hi_open: bool = False) -> Fraction:
    """Rational with the smallest denominator (then magnitude) in an interval.

    ``None`` bounds are infinite.  Raises ValueError on an empty interval.
    """
    if lo is not None and hi is not None:
        if lo > hi or (lo == hi and (lo_open or hi_open)):
            raise ValueError("empty interval")
        if lo == hi:
            return lo
    zero_above_lo = lo is None or lo < 0 or (lo == 0 and not lo_open)
    zero_below_hi = hi is None or hi > 0 or (hi == 0 and not hi_open)
    if zero_above_lo and zero_below_hi:
        return Fraction(0)
    if not zero_below_hi:
        # interval lies below zero; mirror it
        return -simplest_between(-hi, None if lo is None else -lo, hi_open, lo_open)
    return _simplest_positive(lo, hi, lo_open, hi_open)


def _simplest_positive(lo, hi, lo_open, hi_open):
    # 0 <= lo, and 0 is excluded from the interval
    n = floor(lo)
    c = n if (n == lo and not lo_open) else n + 1
    if hi is None or c < hi or (c == hi and not hi_open):
        return Fraction(c)
    # the interval sits inside (n, n + 1); write x = n + 1/z
    if lo == n:
        z = _simplest_positive(1 / (hi - n), None, hi_open, False)
    else:
        z = _simplest_positive(1 / (hi - n), 1 / (lo - n), hi_open, lo_open)
    return n + 1 / z


def bounds_for(atoms: Iterable[LinAtom], var: str, values: Mapping[str, Fraction]):
    """Interval of ``var`` allowed by atoms once ``values`` are plugged in."""
    lo, hi, lo_open, hi_open = None, None, False, False
    for a in atoms:
        c = a.coeffs.get(var, 0)
        rest = a.constant - sum(k * values[v] for v, k in a.terms if v != var)
        if c == 0:
            continue
        b = rest / c
        if c > 0:
            if hi is None or b < hi:
                hi, hi_open = b, a.strict
            elif b == hi:
                hi_open = hi_open or a.strict
        else:
            if lo is None or b > lo:
                lo, lo_open = b, a.strict
            elif b == lo:
                lo_open = lo_open or a.strict
    return lo, hi, lo_open, hi_open


def fm_feasible(P: Polyhedron):
    """Return ``("sat", valuation)`` or ``("unsat", None)``.

    Variables are eliminated one at a time and then assigned in reverse,
    each time picking the simplest rational in the allowed interval.
    """
    stages = []
    atoms = list(P.atoms)
    remaining = list(P.varspace)
    while remaining:
        def cost(v):
            up = sum(1 for a in atoms if a.coeffs.get(v, 0) > 0)
            dn = sum(1 for a in atoms if a.coeffs.get(v, 0) < 0)
            return (up * dn - up - dn, remaining.index(v))
        v = min(remaining, key=cost)
        stages.append((v, atoms))
        atoms = _eliminate_atoms(atoms, v)
        remaining.remove(v)
    if any(a.is_degenerate() and not a.holds_trivially() for a in atoms):
        return "unsat", None
    values: Valuation = {}
    for v, stage_atoms in reversed(stages):
        lo, hi, lo_open, hi_open = bounds_for(stage_atoms, v, values)
        values[v] = simplest_between(lo, hi, lo_open, hi_open)
    assert polyhedron_contains(P, values), "back-substitution produced a bad witness"
    return "sat", {v: values[v] for v in P.varspace}
