"""
Exact rational linear programming.

A dense two-phase simplex with Bland's rule over Fractions.  All variables
are free.  Strict rows are handled by maximizing a slack ``eps`` that is
added to every strict row: the system is feasible iff the optimum is
positive.

On top of the simplex sit the helpers the solver needs: implication
checks, redundancy removal, projection (equality substitution followed by
Fourier-Motzkin) and picking a point with small denominators.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import LinAtom, _eliminate_atoms, simplest_between

EQ, LE, LT = "=", "<=", "<"
_EPS = "\x00eps"


@dataclass(frozen=True)
class Row:
    """``terms . x  rel  rhs`` with rel one of ``=``, ``<=`` or ``<``."""

    terms: Tuple[Tuple[str, Fraction], ...]
    rel: str
    rhs: Fraction

    @property
    def coeffs(self) -> Dict[str, Fraction]:
        return dict(self.terms)

    @property
    def variables(self):
        return tuple(v for v, _ in self.terms)

    def is_degenerate(self):
        return not self.terms

    def holds_trivially(self):
        if self.rel == EQ:
            return self.rhs == 0
        return self.rhs > 0 if self.rel == LT else self.rhs >= 0

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        lhs = sum((c * values[v] for v, c in self.terms), Fraction(0))
        if self.rel == EQ:
            return lhs == self.rhs
        return lhs < self.rhs if self.rel == LT else lhs <= self.rhs

    def __str__(self):
        from .core import format_linear
        return "%s %s %s" % (format_linear(self.coeffs), self.rel, self.rhs)


def row(coeffs: Mapping[str, object], rel: str, rhs=0) -> Row:
    if rel not in (EQ, LE, LT):
        raise ValueError("bad relation %r" % rel)
    terms = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if Fraction(c) != 0))
    return Row(terms, rel, Fraction(rhs))


def from_atom(a: LinAtom) -> Row:
    return Row(a.terms, LT if a.strict else LE, a.constant)


def to_atom(r: Row) -> LinAtom:
    if r.rel == EQ:
        raise ValueError("equalities have no single-atom form")
    return LinAtom(r.terms, r.rhs, r.rel == LT)


def split_equalities(rows: Iterable[Row]) -> List[Row]:
    out = []
    for r in rows:
        if r.rel == EQ:
            out.append(Row(r.terms, LE, r.rhs))
            out.append(Row(tuple((v, -c) for v, c in r.terms), LE, -r.rhs))
        else:
            out.append(r)
    return out


def negate(r: Row) -> Row:
    if r.rel == EQ:
        raise ValueError("cannot negate an equality into one row")
    flipped = tuple((v, -c) for v, c in r.terms)
    return Row(flipped, LE if r.rel == LT else LT, -r.rhs)


def substitute(r: Row, values: Mapping[str, Fraction]) -> Row:
    rest = []
    rhs = r.rhs
    for v, c in r.terms:
        if v in values:
            rhs -= c * values[v]
        else:
            rest.append((v, c))
    return Row(tuple(rest), r.rel, rhs)


def normalized(r: Row) -> Row:
    """Scale so the first coefficient has magnitude one (sign kept for <=)."""
    if not r.terms:
        return r
    lead = r.terms[0][1]
    k = abs(lead) if r.rel != EQ else lead
    return Row(tuple((v, c / k) for v, c in r.terms), r.rel, r.rhs / k)


# -- simplex -----------------------------------------------------------------

def _lcm_den(values) -> int:
    out = 1
    for x in values:
        d = x.denominator
        if d != 1:
            out = out * d // math.gcd(out, d)
    return out


def _reduce(line: List[int]) -> List[int]:
    g = 0
    for x in line:
        if x:
            g = math.gcd(g, x)
            if g == 1:
                return line
    return line if g <= 1 else [x // g for x in line]


class _Tableau:
    """Integer tableau: every row is scaled by its own positive factor.

    Scaling a row by a positive number changes neither its solutions nor
    the signs the simplex looks at, so pivots stay fraction-free.
    """

    def __init__(self, rows: Sequence[Row], names: Sequence[str]):
        self.names = list(names)
        index = {v: j for j, v in enumerate(self.names)}
        nfree = len(self.names)
        nslack = sum(1 for r in rows if r.rel != EQ)
        self.ncols = 2 * nfree + nslack
        self.T: List[List[int]] = []
        self.basis: List[int] = []
        need_art = []
        slack = 2 * nfree
        for r in rows:
            scale = _lcm_den([c for _, c in r.terms] + [r.rhs])
            line = [0] * (self.ncols + 1)
            for v, c in r.terms:
                j = index[v]
                k = int(c * scale)
                line[2 * j] = k
                line[2 * j + 1] = -k
            line[-1] = int(r.rhs * scale)
            slack_col = None
            if r.rel != EQ:
                line[slack] = scale
                slack_col = slack
                slack += 1
            if line[-1] < 0:
                line = [-x for x in line]
            if slack_col is not None and line[slack_col] > 0:
                self.basis.append(slack_col)
            else:
                self.basis.append(None)
                need_art.append(len(self.T))
            self.T.append(line)
        # artificial columns go to the right of everything else
        self.first_art = self.ncols
        for _ in need_art:
            for line in self.T:
                line.insert(-1, 0)
            self.ncols += 1
        for k, i in enumerate(need_art):
            col = self.first_art + k
            self.T[i][col] = 1
            self.basis[i] = col

    cost: Optional[List[int]] = None
    cost_scale: int = 1

    def pivot(self, r: int, j: int):
        T = self.T
        prow = T[r]
        p = prow[j]
        if p < 0:
            prow = [-x for x in prow]
            p = -p
        prow = _reduce(prow)
        p = prow[j]
        T[r] = prow
        nz = [k for k, x in enumerate(prow) if x]
        for i, line in enumerate(T):
            if i != r:
                f = line[j]
                if f:
                    new = [x * p for x in line]
                    for k in nz:
                        new[k] -= f * prow[k]
                    T[i] = _reduce(new)
        if self.cost is not None:
            f = self.cost[j]
            if f:
                new = [x * p for x in self.cost]
                for k in nz:
                    new[k] -= f * prow[k]
                self._set_cost(new, self.cost_scale * p)
        self.basis[r] = j

    def _set_cost(self, red: List[int], scale: int):
        g = scale
        for x in red:
            if x:
                g = math.gcd(g, x)
                if g == 1:
                    break
        if g > 1:
            red = [x // g for x in red]
            scale //= g
        self.cost, self.cost_scale = red, scale

    def set_objective(self, c: List[Fraction]):
        """Install a minimization objective (length ncols) as reduced costs."""
        scale = _lcm_den(c)
        red = [int(x * scale) for x in c] + [0]
        for i, b in enumerate(self.basis):
            f = red[b]
            if f:
                line = self.T[i]
                p = line[b]
                red = [x * p for x in red]
                for k, x in enumerate(line):
                    if x:
                        red[k] -= f * x
                scale *= p
        self._set_cost(red, scale)

    def run(self, allowed: int) -> str:
        """Minimize the installed objective over columns < allowed."""
        while True:
            cost = self.cost
            enter = None
            for j in range(allowed):
                if cost[j] < 0:
                    enter = j
                    break
            if enter is None:
                return "optimal"
            best = None
            for i, line in enumerate(self.T):
                a = line[enter]
                if a > 0:
                    num = line[-1]
                    if best is None:
                        best = (num, a, self.basis[i], i)
                        continue
                    bn, ba, bb, _ = best
                    lhs, rhs = num * ba, bn * a
                    if lhs < rhs or (lhs == rhs and self.basis[i] < bb):
                        best = (num, a, self.basis[i], i)
            if best is None:
                return "unbounded"
            self.pivot(best[3], enter)

    def value(self) -> Fraction:
        return Fraction(-self.cost[-1], self.cost_scale)

    def point(self) -> Dict[str, Fraction]:
        y = [Fraction(0)] * self.ncols
        for i, b in enumerate(self.basis):
            line = self.T[i]
            y[b] = Fraction(line[-1], line[b])
        return {v: y[2 * j] - y[2 * j + 1] for j, v in enumerate(self.names)}


def _phase_one(rows: Sequence[Row], names: Sequence[str]) -> Optional[_Tableau]:
    tab = _Tableau(rows, names)
    if tab.first_art == tab.ncols:
        return tab
    c = [Fraction(0)] * tab.first_art + [Fraction(1)] * (tab.ncols - tab.first_art)
    tab.set_objective(c)
    tab.run(tab.ncols)
    if tab.value() > 0:
        return None
    # drive zero-level artificials out of the basis, dropping dead rows
    i = 0
    while i < len(tab.T):
        b = tab.basis[i]
        if b >= tab.first_art:
            line = tab.T[i]
            col = next((k for k in range(tab.first_art) if line[k] != 0), None)
            if col is None:
                del tab.T[i]
                del tab.basis[i]
                continue
            tab.pivot(i, col)
        i += 1
    for line in tab.T:
        del line[tab.first_art:-1]
    tab.ncols = tab.first_art
    tab.cost = None
    return tab


def _names(rows: Iterable[Row], extra: Iterable[str] = ()) -> List[str]:
    seen = {}
    for r in rows:
        for v, _ in r.terms:
            seen.setdefault(v, None)
    for v in extra:
        seen.setdefault(v, None)
    return list(seen)


def _closure(rows: Iterable[Row]) -> List[Row]:
    return [Row(r.terms, LE, r.rhs) if r.rel == LT else r for r in rows]


def optimize(rows: Sequence[Row], objective: Mapping[str, Fraction], maximize=False):
    """Optimize over the closure of ``rows`` (strict rows relaxed to <=).

    Returns ``(status, value, point)`` with status ``optimal``,
    ``unbounded`` or ``infeasible``.
    """
    rows = _closure(rows)
    for r in rows:
        if r.is_degenerate() and not r.holds_trivially():
            return "infeasible", None, None
    rows = [r for r in rows if not r.is_degenerate()]
    names = _names(rows, objective)
    tab = _phase_one(rows, names)
    if tab is None:
        return "infeasible", None, None
    sign = -1 if maximize else 1
    c = [Fraction(0)] * tab.ncols
    for j, v in enumerate(names):
        k = Fraction(objective.get(v, 0)) * sign
        c[2 * j] = k
        c[2 * j + 1] = -k
    tab.set_objective(c)
    status = tab.run(tab.ncols)
    if status == "unbounded":
        return "unbounded", None, None
    return "optimal", sign * tab.value(), tab.point()


def feasible_point(rows: Sequence[Row]) -> Optional[Dict[str, Fraction]]:
    """A point satisfying every row (strict ones strictly), else None."""
    live = []
    for r in rows:
        if r.is_degenerate():
            if not r.holds_trivially():
                return None
            continue
        live.append(r)
    names = _names(live)
    if not any(r.rel == LT for r in live):
        tab = _phase_one(live, names)
        if tab is None:
            return None
        return tab.point()
    lifted = []
    for r in live:
        if r.rel == LT:
            lifted.append(Row(r.terms + ((_EPS, Fraction(1)),), LE, r.rhs))
        else:
            lifted.append(r)
    lifted.append(Row(((_EPS, Fraction(1)),), LE, Fraction(1)))
    status, value, point = optimize(lifted, {_EPS: Fraction(1)}, maximize=True)
    if status != "optimal" or value <= 0:
        return None
    point.pop(_EPS, None)
    for v in names:
        point.setdefault(v, Fraction(0))
    return point


def is_feasible(rows: Sequence[Row]) -> bool:
    return feasible_point(rows) is not None


def implies(rows: Sequence[Row], r: Row) -> bool:
    """Does every point of ``rows`` satisfy ``r``?"""
    if r.is_degenerate():
        return r.holds_trivially() or not is_feasible(rows)
    if r.rel == EQ:
        up = Row(r.terms, LE, r.rhs)
        down = Row(tuple((v, -c) for v, c in r.terms), LE, -r.rhs)
        return implies(rows, up) and implies(rows, down)
    return not is_feasible(list(rows) + [negate(r)])


def implies_all(rows: Sequence[Row], others: Sequence[Row]) -> bool:
    return all(implies(rows, r) for r in others)


def dedupe(rows: Iterable[Row]) -> List[Row]:
    out, seen = [], set()
    for r in rows:
        n = normalized(r)
        if n.is_degenerate() and n.holds_trivially():
            continue
        if n not in seen:
            seen.add(n)
            out.append(n)
    return out


def remove_redundant(rows: Sequence[Row]) -> List[Row]:
    """Drop inequalities implied by the rest (equalities always stay)."""
    rows = dedupe(rows)
    keep = list(rows)
    i = 0
    while i < len(keep):
        r = keep[i]
        if r.rel == EQ:
            i += 1
            continue
        rest = keep[:i] + keep[i + 1:]
        if implies(rest, r):
            keep = rest
        else:
            i += 1
    return keep


def _substitute_equality(rows: List[Row], eq: Row, var: str) -> List[Row]:
    c = eq.coeffs[var]
    # var = (rhs - sum others) / c
    expr = {v: -k / c for v, k in eq.terms if v != var}
    base = eq.rhs / c
    out = []
    for r in rows:
        k = r.coeffs.get(var, 0)
        if not k:
            out.append(r)
            continue
        coeffs = r.coeffs
        del coeffs[var]
        for v, e in expr.items():
            coeffs[v] = coeffs.get(v, 0) + k * e
        out.append(row(coeffs, r.rel, r.rhs - k * base))
    return out


def project(rows: Sequence[Row], eliminate: Iterable[str],
            prune_above: int = 6) -> Optional[List[Row]]:
    """Project ``eliminate`` out of ``rows``; None if the rows are infeasible.

    Equalities mentioning an eliminated variable are used for substitution
    first; the rest goes through Fourier-Motzkin with LP-based pruning once
    the atom count gets large.
    """
    if not is_feasible(rows):
        return None
    drop = set(eliminate)
    work = list(rows)
    while True:
        pick = None
        for r in work:
            if r.rel == EQ:
                hit = [v for v, _ in r.terms if v in drop]
                if hit:
                    pick = (r, hit[0])
                    break
        if pick is None:
            break
        eq, var = pick
        work.remove(eq)
        work = _substitute_equality(work, eq, var)
    eqs = [r for r in work if r.rel == EQ]
    atoms = [to_atom(r) for r in work if r.rel != EQ]
    remaining = sorted({v for a in atoms for v in a.variables if v in drop})
    while remaining:
        def cost(v):
            up = sum(1 for a in atoms if a.coeffs.get(v, 0) > 0)
            dn = sum(1 for a in atoms if a.coeffs.get(v, 0) < 0)
            return (up * dn - up - dn, v)
        v = min(remaining, key=cost)
        remaining.remove(v)
        atoms = _eliminate_atoms(atoms, v)
        if len(atoms) > prune_above:
            pruned = remove_redundant(eqs + [from_atom(a) for a in atoms])
            atoms = [to_atom(r) for r in pruned if r.rel != EQ]
    out = eqs + [from_atom(a) for a in atoms if not (a.is_degenerate() and a.holds_trivially())]
    return remove_redundant(out)


def simple_point(rows: Sequence[Row], order: Optional[Sequence[str]] = None
                 ) -> Optional[Dict[str, Fraction]]:
    """A feasible point whose coordinates have small denominators.

    Coordinates are fixed one at a time in ``order``; each gets the
    simplest rational in the interval still reachable.
    """
    if not is_feasible(rows):
        return None
    names = _names(rows, order or ())
    if order is not None:
        names = list(order) + [v for v in names if v not in order]
    work = list(rows)
    fixed: Dict[str, Fraction] = {}
    for v in names:
        if not any(v in r.coeffs for r in work):
            fixed[v] = Fraction(0)
            continue
        lo_s, lo, _ = optimize(work, {v: 1}, maximize=False)
        hi_s, hi, _ = optimize(work, {v: 1}, maximize=True)
        lo = lo if lo_s == "optimal" else None
        hi = hi if hi_s == "optimal" else None
        lo_open = lo is not None and not is_feasible([substitute(r, {v: lo}) for r in work])
        hi_open = hi is not None and not is_feasible([substitute(r, {v: hi}) for r in work])
        val = simplest_between(lo, hi, lo_open, hi_open)
        fixed[v] = val
        work = [substitute(r, {v: val}) for r in work]
    assert all(r.holds(fixed) for r in rows)
    return fixed
