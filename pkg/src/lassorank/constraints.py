"""
From (program, template, invariant slots) to Motzkin constraint systems.

Every proof obligation is an infeasibility statement ``not exists X. rows``
where a row is ``a . X  (<= or <)  b``.  Its entries ``a`` and ``b`` are
affine in the unknown coefficients (invariant and template parameters),
and every row carries a Motzkin multiplier.  Transposition turns the
obligation into

    sum_r m_r a_r = 0   (per column)
    sum_r m_r b_r <= 0
    sum_{non-strict r} m_r b_r < 0   or   sum_{strict r} m_r > 0

which is bilinear exactly where a multiplier meets a parameter.

Three obligation families are generated:

* initiation ``II``: stem_n and not psi_l is infeasible,
* consecution ``IC``: psi_l(x), loop_m and not psi_l(x') is infeasible,
* implication ``TI``: the invariants of slot (i, m), loop_m and the
  negation of template conjunct i is infeasible.

Invariants are replicated per (i, m) so each implication gets its own
copies; hence #L' = #L * #I * #M.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .core import LinAtom, Polyhedron
from .lp import EQ, LE, LT, Row, row as lp_row, simple_point
from .parser import LassoProgram
from .templates import (Template, TemplateAtom, GT, WHITE, canonical_coloring,
                        coloring_degree, is_suitable_coloring)

GENERAL = "general"
NONDECREASING = "non-decreasing"

# roles
INV_S, INV_T = "inv-s", "inv-t"
FUN_S, FUN_T, SCALAR = "fun-s", "fun-t", "scalar"
LAMBDA, MU, XI, CHI, ZETA = "lambda", "mu", "xi", "chi", "zeta"
MOTZKIN_ROLES = (LAMBDA, MU, XI, CHI, ZETA)
FACTOR_ROLES = (XI, CHI, ZETA)
PARAM_ROLES = (INV_S, INV_T, FUN_S, FUN_T, SCALAR)


@dataclass(frozen=True)
class SolverVar:
    id: str
    role: str

    @property
    def nonneg(self) -> bool:
        return self.role in MOTZKIN_ROLES


# A parameter-affine form: {param id or None (constant): coefficient}
ParamLin = Dict[Optional[str], Fraction]


def _plin(d) -> ParamLin:
    return {k: Fraction(v) for k, v in d.items() if v}


@dataclass(frozen=True)
class Expr:
    """Sum of terms ``c * m * p``; either factor may be absent (None).

    ``m`` ranges over Motzkin variables, ``p`` over parameters.
    """

    terms: Tuple[Tuple[Tuple[Optional[str], Optional[str]], Fraction], ...]

    @staticmethod
    def build(d: Mapping) -> "Expr":
        return Expr(tuple(sorted(((k, Fraction(v)) for k, v in d.items() if v),
                                 key=lambda kv: (kv[0][0] or "", kv[0][1] or ""))))

    def is_bilinear(self) -> bool:
        return any(m is not None and p is not None for (m, p), _ in self.terms)

    def factors(self):
        return {m for (m, p), _ in self.terms if m is not None and p is not None}

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for (m, p), c in self.terms:
            v = c
            if m is not None:
                v *= values[m]
            if p is not None:
                v *= values[p]
            total += v
        return total

    def __str__(self):
        if not self.terms:
            return "0"
        bits = []
        for (m, p), c in self.terms:
            names = [n for n in (m, p) if n is not None]
            body = "*".join(names)
            if not names:
                bits.append(str(c))
            elif c == 1:
                bits.append(body)
            elif c == -1:
                bits.append("-" + body)
            else:
                bits.append("%s*%s" % (c, body))
        return " + ".join(bits).replace("+ -", "- ")


@dataclass(frozen=True)
class CAtom:
    """``expr rel 0`` with rel in {=, <=, <, >}."""

    expr: Expr
    rel: str

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        v = self.expr.evaluate(values)
        return {"=": v == 0, "<=": v <= 0, "<": v < 0, ">": v > 0}[self.rel]

    def __str__(self):
        flag = "  [bilinear]" if self.expr.is_bilinear() else ""
        return "%s %s 0%s" % (self.expr, self.rel, flag)


@dataclass(frozen=True)
class MRow:
    """A row ``coeffs . X (<= or <) rhs`` carrying Motzkin multiplier ``mult``.

    ``mult`` is a variable id, or a Fraction when it is fixed by construction.
    """

    mult: Union[str, Fraction]
    coeffs: Tuple[Tuple[Tuple[Optional[str], Fraction], ...], ...]
    rhs: Tuple[Tuple[Optional[str], Fraction], ...]
    strict: bool

    @staticmethod
    def make(mult, coeffs: Sequence[ParamLin], rhs: ParamLin, strict: bool) -> "MRow":
        return MRow(mult, tuple(tuple(sorted(_plin(c).items(), key=_key)) for c in coeffs),
                    tuple(sorted(_plin(rhs).items(), key=_key)), strict)


def _key(kv):
    return kv[0] or ""


def _times(mult, plin, scale=Fraction(1)) -> Dict:
    out = {}
    for p, c in plin:
        if isinstance(mult, str):
            key = (mult, p)
            out[key] = out.get(key, 0) + c * scale
        else:
            key = (None, p)
            out[key] = out.get(key, 0) + c * mult * scale
    return out


def _add(acc: Dict, more: Dict):
    for k, v in more.items():
        acc[k] = acc.get(k, 0) + v


def transpose_rows(rows: Sequence[MRow], ncols: int):
    """Motzkin transposition of an infeasibility claim.

    Returns ``(atoms, classical, nonclassical)``.
    """
    atoms = []
    for col in range(ncols):
        acc: Dict = {}
        for r in rows:
            _add(acc, _times(r.mult, r.coeffs[col]))
        atoms.append(CAtom(Expr.build(acc), "="))
    total: Dict = {}
    strict_part: Dict = {}
    nonstrict_part: Dict = {}
    for r in rows:
        _add(total, _times(r.mult, r.rhs))
        if r.strict:
            _add(strict_part, _times(r.mult, ((None, Fraction(1)),)))
        else:
            _add(nonstrict_part, _times(r.mult, r.rhs))
    atoms.append(CAtom(Expr.build(total), "<="))
    classical = CAtom(Expr.build(nonstrict_part), "<")
    nonclassical = CAtom(Expr.build(strict_part), ">")
    return tuple(atoms), classical, nonclassical


CLASSICAL, NONCLASSICAL = "classical", "nonclassical"


@dataclass(frozen=True)
class Subsystem:
    kind: str                      # II, IC or TI
    index: Tuple[int, ...]
    rows: Tuple[MRow, ...]
    ncols: int
    atoms: Tuple[CAtom, ...]
    classical: CAtom
    nonclassical: CAtom
    # after quantifier omission: allowed values per fixed multiplier
    fixings: Tuple[Tuple[str, Tuple[Fraction, ...]], ...] = ()

    @property
    def tag(self) -> str:
        return "%s_%s" % (self.kind, "_".join(str(i) for i in self.index))

    @property
    def multipliers(self) -> Tuple[str, ...]:
        return tuple(r.mult for r in self.rows if isinstance(r.mult, str))

    @property
    def params(self) -> Tuple[str, ...]:
        seen = {}
        for r in self.rows:
            for c in r.coeffs:
                for p, _ in c:
                    if p is not None:
                        seen.setdefault(p, None)
            for p, _ in r.rhs:
                if p is not None:
                    seen.setdefault(p, None)
        return tuple(seen)

    @property
    def factors(self) -> Tuple[str, ...]:
        """Multipliers that meet a parameter somewhere in this subsystem."""
        out = []
        for r in self.rows:
            if isinstance(r.mult, str) and (any(p is not None for c in r.coeffs for p, _ in c)
                                            or any(p is not None for p, _ in r.rhs)):
                out.append(r.mult)
        return tuple(out)

    @property
    def fixed(self) -> Dict[str, Tuple[Fraction, ...]]:
        return dict(self.fixings)

    @property
    def symbolic(self) -> Tuple[str, ...]:
        fixed = self.fixed
        return tuple(f for f in self.factors if f not in fixed)

    def disjunct(self, name: str) -> CAtom:
        return self.classical if name == CLASSICAL else self.nonclassical

    def all_atoms(self):
        return self.atoms + (self.classical, self.nonclassical)


@dataclass(frozen=True)
class Copy:
    """One replicated invariant slot (l, i, m)."""

    l: int
    i: int
    m: int
    strict: bool

    @property
    def name(self) -> str:
        return "inv%d_%d_%d" % (self.l, self.i, self.m)

    def s(self, j: int) -> str:
        return "%s_s%d" % (self.name, j)

    @property
    def t(self) -> str:
        return "%s_t" % self.name


@dataclass(frozen=True)
class ConstraintSystem:
    program: LassoProgram
    template: Template
    num_invariants: int
    mode: str
    strict_slots: Tuple[bool, ...]
    copies: Tuple[Copy, ...]
    subsystems: Tuple[Subsystem, ...]
    variables: Tuple[SolverVar, ...]
    coloring: Optional[Tuple[Tuple[Tuple[int, int], str], ...]] = None

    @property
    def dims(self) -> Dict[str, int]:
        T, P = self.template, self.program
        return {"n": P.n, "#N": len(P.stem), "#M": len(P.loop), "#I": len(T.conjuncts),
                "#L": self.num_invariants, "#L'": len(self.copies),
                "#F": len(T.functions), "#D": len(T.scalars)}

    @property
    def omitted(self) -> bool:
        return self.coloring is not None

    def role_of(self, var: str) -> str:
        return self._roles[var]

    @property
    def _roles(self):
        return {v.id: v.role for v in self.variables}

    def bilinear_atoms(self) -> List[Tuple[str, CAtom]]:
        out = []
        for sub in self.subsystems:
            fixed = sub.fixed
            for a in sub.all_atoms():
                if a.expr.factors() - set(fixed):
                    out.append((sub.tag, a))
        return out

    def template_params(self) -> Tuple[str, ...]:
        return template_param_ids(self.template, self.program.n)


def template_param_ids(T: Template, n: int) -> Tuple[str, ...]:
    out = []
    for f in T.functions:
        out.extend("%s_s%d" % (f, j) for j in range(n))
        out.append("%s_t" % f)
    out.extend(T.scalars)
    return tuple(out)


def _const_rows(P: Polyhedron, names: Sequence[str], prefix: str) -> List[MRow]:
    rows = []
    for r, a in enumerate(P.nonstrict):
        coeffs = [{None: a.coeffs.get(v, 0)} for v in names]
        rows.append(MRow.make("%s_lam%d" % (prefix, r), coeffs, {None: a.constant}, False))
    for r, a in enumerate(P.strict):
        coeffs = [{None: a.coeffs.get(v, 0)} for v in names]
        rows.append(MRow.make("%s_mu%d" % (prefix, r), coeffs, {None: a.constant}, True))
    return rows


def expand_template_atom(atom: TemplateAtom, n: int):
    """Atom as ``c . (x; x') + e`` with c and e affine in template parameters."""
    cx = [dict() for _ in range(n)]
    cy = [dict() for _ in range(n)]
    e: Dict = {}
    for f, a in atom.alpha:
        for j in range(n):
            cx[j]["%s_s%d" % (f, j)] = cx[j].get("%s_s%d" % (f, j), 0) + a
        e["%s_t" % f] = e.get("%s_t" % f, 0) + a
    for f, b in atom.beta:
        for j in range(n):
            cy[j]["%s_s%d" % (f, j)] = cy[j].get("%s_s%d" % (f, j), 0) + b
        e["%s_t" % f] = e.get("%s_t" % f, 0) + b
    for d, g in atom.gamma:
        e[d] = e.get(d, 0) + g
    return cx + cy, e


def _neg(d: Mapping) -> Dict:
    return {k: -v for k, v in d.items()}


def motzkin_transpose(A: Sequence[Sequence], b: Sequence, B: Sequence[Sequence] = (),
                      d: Sequence = (), prefix: str = "m") -> Subsystem:
    """(M2) for ``not (A x <= b and B x < d)`` with fresh multipliers.

    Entries may be numbers or parameter-affine dicts.
    """
    ncols = len(A[0]) if A else (len(B[0]) if B else 0)

    def as_plin(v):
        return v if isinstance(v, dict) else {None: v}

    rows = []
    for r, (a, c) in enumerate(zip(A, b)):
        rows.append(MRow.make("%s_lam%d" % (prefix, r), [as_plin(x) for x in a], as_plin(c), False))
    for r, (a, c) in enumerate(zip(B, d)):
        rows.append(MRow.make("%s_mu%d" % (prefix, r), [as_plin(x) for x in a], as_plin(c), True))
    atoms, cl, ncl = transpose_rows(rows, ncols)
    return Subsystem("M", (), tuple(rows), ncols, atoms, cl, ncl)


def _subsystem(kind, index, rows, ncols) -> Subsystem:
    atoms, cl, ncl = transpose_rows(rows, ncols)
    return Subsystem(kind, tuple(index), tuple(rows), ncols, atoms, cl, ncl)


def initiation(P: LassoProgram, c: Copy, nidx: int) -> Subsystem:
    n = P.n
    tag = "II_%d_%d_%d_%d" % (c.l, c.i, c.m, nidx)
    rows = _const_rows(P.stem[nidx], P.varspace, tag)
    # not psi(x):  s.x < -t  (or <= for a strict invariant)
    rows.append(MRow.make(tag + "_xi", [{c.s(j): 1} for j in range(n)], {c.t: -1},
                          not c.strict))
    return _subsystem("II", (c.l, c.i, c.m, nidx), rows, n)


def consecution(P: LassoProgram, c: Copy, midx: int, mode: str) -> Subsystem:
    n = P.n
    tag = "IC_%d_%d_%d_%d" % (c.l, c.i, c.m, midx)
    rows = _const_rows(P.loop[midx], P.varspace + P.primed, tag)
    chi1 = Fraction(1) if mode == NONDECREASING else tag + "_chi1"
    zero = [{} for _ in range(n)]
    # psi(x):  -s.x <= t
    rows.append(MRow.make(chi1, [{c.s(j): -1} for j in range(n)] + zero, {c.t: 1}, c.strict))
    # not psi(x'):  s.x' < -t
    rows.append(MRow.make(tag + "_chi2", zero + [{c.s(j): 1} for j in range(n)],
                          {c.t: -1}, not c.strict))
    return _subsystem("IC", (c.l, c.i, c.m, midx), rows, 2 * n)


def implication(P: LassoProgram, T: Template, i: int, m: int,
                copies: Sequence[Copy]) -> Subsystem:
    n = P.n
    tag = "TI_%d_%d" % (i, m)
    rows = _const_rows(P.loop[m], P.varspace + P.primed, tag)
    zero = [{} for _ in range(n)]
    for c in copies:
        rows.append(MRow.make("%s_xi%d" % (tag, c.l), [{c.s(j): -1} for j in range(n)] + zero,
                              {c.t: 1}, c.strict))
    for pos, atom in enumerate(T.conjuncts[i]):
        coeffs, e = expand_template_atom(atom, n)
        # not (c.X + e > 0) is c.X <= -e ; not (c.X + e >= 0) is c.X < -e
        rows.append(MRow.make("%s_zeta%d" % (tag, pos), coeffs, _neg(e), atom.rel != GT))
    return _subsystem("TI", (i, m), rows, 2 * n)


def build_constraints(P: LassoProgram, T: Template, num_invariants: int = 1,
                      mode: str = GENERAL, strict_invariants: Sequence[bool] = ()
                      ) -> ConstraintSystem:
    if mode not in (GENERAL, NONDECREASING):
        raise ValueError("mode must be general or non-decreasing")
    if num_invariants < 0:
        raise ValueError("number of invariants must be non-negative")
    strict = tuple(bool(x) for x in strict_invariants) + (False,) * num_invariants
    strict = strict[:num_invariants]
    nI, nM = len(T.conjuncts), len(P.loop)
    copies = tuple(Copy(l, i, m, strict[l]) for i in range(nI) for m in range(nM)
                   for l in range(num_invariants))
    subs = []
    for c in copies:
        for nidx in range(len(P.stem)):
            subs.append(initiation(P, c, nidx))
    for c in copies:
        for midx in range(nM):
            subs.append(consecution(P, c, midx, mode))
    for i in range(nI):
        for m in range(nM):
            subs.append(implication(P, T, i, m, [c for c in copies if c.i == i and c.m == m]))
    variables = []
    for c in copies:
        variables.extend(SolverVar(c.s(j), INV_S) for j in range(P.n))
        variables.append(SolverVar(c.t, INV_T))
    for f in T.functions:
        variables.extend(SolverVar("%s_s%d" % (f, j), FUN_S) for j in range(P.n))
        variables.append(SolverVar("%s_t" % f, FUN_T))
    variables.extend(SolverVar(d, SCALAR) for d in T.scalars)
    for sub in subs:
        for r in sub.rows:
            if isinstance(r.mult, str):
                variables.append(SolverVar(r.mult, _mult_role(r.mult)))
    return ConstraintSystem(P, T, num_invariants, mode, strict, copies, tuple(subs),
                            tuple(variables))


def _mult_role(name: str) -> str:
    tail = name.rsplit("_", 1)[1]
    for prefix, role in (("lam", LAMBDA), ("mu", MU), ("xi", XI), ("chi", CHI), ("zeta", ZETA)):
        if tail.startswith(prefix):
            return role
    raise ValueError(name)


ONE_ZERO = (Fraction(1), Fraction(0))
ONE = (Fraction(1),)


def omit_quantifiers(S: ConstraintSystem, eta: Optional[Mapping] = None) -> ConstraintSystem:
    """Fix Motzkin coefficients to finite value sets as licensed by ``eta``.

    II: xi in {0,1};  IC: chi2 in {0,1};  TI: zeta of red/blue atoms in
    {0,1}, xi of strict invariants in {0,1} and of non-strict ones in {1}.
    White atoms and (in general mode) chi1 stay symbolic.
    """
    T = S.template
    if eta is None:
        eta = canonical_coloring(T)
    if not is_suitable_coloring(T, eta):
        raise ValueError("coloring is not suitable for this template")
    out = []
    for sub in S.subsystems:
        fix = []
        if sub.kind == "II":
            fix.append((sub.tag + "_xi", ONE_ZERO))
        elif sub.kind == "IC":
            fix.append((sub.tag + "_chi2", ONE_ZERO))
        elif sub.kind == "TI":
            i, m = sub.index
            for c in S.copies:
                if c.i == i and c.m == m:
                    fix.append(("%s_xi%d" % (sub.tag, c.l), ONE_ZERO if c.strict else ONE))
            for pos in range(len(T.conjuncts[i])):
                if eta.get((i, pos), WHITE) != WHITE:
                    fix.append(("%s_zeta%d" % (sub.tag, pos), ONE_ZERO))
        out.append(Subsystem(sub.kind, sub.index, sub.rows, sub.ncols, sub.atoms,
                             sub.classical, sub.nonclassical, tuple(fix)))
    return ConstraintSystem(S.program, S.template, S.num_invariants, S.mode, S.strict_slots,
                            S.copies, tuple(out), S.variables,
                            tuple(sorted(dict(eta).items())))


def branch_count(S: ConstraintSystem) -> int:
    """Size of the explicit branch product: fixings times (M2) disjuncts."""
    total = 1
    for sub in S.subsystems:
        k = 2
        for _, vals in sub.fixings:
            k *= len(vals)
        total *= k
    return total


def nonlinear_variables(S: ConstraintSystem) -> List[str]:
    """Symbolic multipliers that occur as a factor of some product."""
    out = []
    for sub in S.subsystems:
        fixed = sub.fixed
        for a in sub.all_atoms():
            for f in sorted(a.expr.factors()):
                if f not in fixed and f not in out:
                    out.append(f)
    return out


def nonlinear_dimension(S: ConstraintSystem) -> int:
    return len(nonlinear_variables(S))


def predicted_dimensions(P: LassoProgram, T: Template, num_invariants: int,
                         mode: str, eta: Optional[Mapping] = None) -> Tuple[int, int]:
    """(naive bound, bound after the transformations)."""
    n = P.n
    naive = (n + 1) * num_invariants + (n + 1) * len(T.functions) + len(T.scalars)
    deg = coloring_degree(T, eta if eta is not None else canonical_coloring(T))
    nM = len(P.loop)
    bound = nM * deg
    if mode == GENERAL:
        bound += num_invariants * len(T.conjuncts) * nM
    return naive, bound


def dump_system(S: ConstraintSystem) -> str:
    lines = []
    d = S.dims
    lines.append("dimensions: " + ", ".join("%s=%d" % kv for kv in d.items()))
    lines.append("mode: %s" % S.mode)
    for sub in S.subsystems:
        lines.append("[%s]" % sub.tag)
        for f, vals in sub.fixings:
            lines.append("  fix %s in {%s}" % (f, ", ".join(str(v) for v in vals)))
        for a in sub.atoms:
            lines.append("  " + str(a))
        lines.append("  (%s)  or  (%s)" % (sub.classical, sub.nonclassical))
    return "\n".join(lines)


def linearize(a: CAtom, values: Mapping[str, Fraction]) -> Row:
    """Turn an atom into an LP row once every product has a known factor."""
    coeffs: Dict[str, Fraction] = {}
    rhs = Fraction(0)
    for (m, p), c in a.expr.terms:
        mv = values.get(m) if m is not None else None
        pv = values.get(p) if p is not None else None
        if m is not None and mv is not None:
            c = c * mv
            m = None
        if p is not None and pv is not None:
            c = c * pv
            p = None
        if m is not None and p is not None:
            raise ValueError("non-linear term %s*%s" % (m, p))
        v = m if m is not None else p
        if v is None:
            rhs -= c
        else:
            coeffs[v] = coeffs.get(v, 0) + c
    rel = {"=": EQ, "<=": LE, "<": LT}.get(a.rel)
    if rel is None:             # expr > 0  is  -expr < 0
        return lp_row({k: -v for k, v in coeffs.items()}, LT, -rhs)
    return lp_row(coeffs, rel, rhs)


@dataclass(frozen=True)
class SubCertificate:
    values: Tuple[Tuple[str, Fraction], ...]
    disjunct: str


@dataclass(frozen=True)
class MotzkinCertificate:
    """Multiplier values and the chosen (M2) disjunct, per subsystem tag."""

    entries: Tuple[Tuple[str, SubCertificate], ...]

    def get(self, tag: str) -> Optional[SubCertificate]:
        return dict(self.entries).get(tag)

    @property
    def tags(self):
        return tuple(t for t, _ in self.entries)


def check_subsystem(sub: Subsystem, params: Mapping[str, Fraction],
                    cert: SubCertificate) -> Optional[str]:
    """None if the certificate discharges ``sub``; otherwise the reason."""
    values = dict(params)
    mults = dict(cert.values)
    if set(mults) != set(sub.multipliers):
        return "certificate shape mismatch in %s" % sub.tag
    for v, x in mults.items():
        if x < 0:
            return "negative multiplier %s in %s" % (v, sub.tag)
    values.update(mults)
    if cert.disjunct not in (CLASSICAL, NONCLASSICAL):
        return "unknown disjunct %r in %s" % (cert.disjunct, sub.tag)
    for k, a in enumerate(sub.atoms + (sub.disjunct(cert.disjunct),)):
        if not a.holds(values):
            what = "column %d" % k if a.rel == "=" else (
                "constant row" if a.rel == "<=" else cert.disjunct + " disjunct")
            return "%s violated in %s" % (what, sub.tag)
    return None


def certify_subsystem(sub: Subsystem, params: Mapping[str, Fraction]
                      ) -> Optional[SubCertificate]:
    """With all parameters known a subsystem is linear in its multipliers."""
    for d in (CLASSICAL, NONCLASSICAL):
        rows = [linearize(a, params) for a in sub.atoms + (sub.disjunct(d),)]
        rows.extend(lp_row({m: -1}, LE, 0) for m in sub.multipliers)
        sol = simple_point(rows, list(sub.multipliers))
        if sol is not None:
            mv = {m: sol.get(m, Fraction(0)) for m in sub.multipliers}
            return SubCertificate(tuple(sorted(mv.items())), d)
    return None


def certify_parameters(S: ConstraintSystem, params: Mapping[str, Fraction]
                       ) -> Optional[MotzkinCertificate]:
    entries = []
    for sub in S.subsystems:
        cert = certify_subsystem(sub, params)
        if cert is None:
            return None
        entries.append((sub.tag, cert))
    return MotzkinCertificate(tuple(entries))
