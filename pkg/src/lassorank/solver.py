"""
Deciding branched Motzkin constraint systems.

After quantifier omission each subsystem offers finitely many *options*:
a value for every fixed multiplier plus a choice of (M2) disjunct.  Once
an option is chosen the subsystem is linear in its own multipliers and
the parameters, so its multipliers can be projected away, leaving a
polyhedron over parameters only.

Subsystems are grouped into blocks, one per implication obligation
(i, m) together with the initiation and consecution obligations of the
invariant copies it owns.  Invariant coefficients are private to a block
and template coefficients are shared, so the search is a depth-first
walk over blocks whose partial states are polyhedra over template
coefficients, checked with exact LP.

Symbolic multipliers (chi1 in general mode, zeta of uncolored atoms)
make options non-linear.  ``internal-linear`` skips them, ``chi``
replaces them with finitely many candidate values, ``smt`` hands the
whole system to an external solver.
"""

import itertools
import logging
import math
import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from . import lp
from .constraints import (CLASSICAL, MOTZKIN_ROLES, NONCLASSICAL, CAtom, ConstraintSystem,
                          Copy, MotzkinCertificate, SubCertificate, Subsystem, Expr, certify_parameters,
                          consecution, initiation, linearize, nonlinear_variables)

log = logging.getLogger(__name__)

INTERNAL = "internal-linear"
CHI = "chi-enumeration"
SMT = "external-smt"
STRATEGIES = (INTERNAL, CHI, SMT)


class BranchCapExceeded(RuntimeError):
    pass


class NonLinearBranch(ValueError):
    pass


class SolverDefect(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    strategies: Tuple[str, ...] = STRATEGIES
    external_command: Optional[str] = "z3"
    timeout: float = 60.0
    branch_cap: int = 2 ** 16
    chi_depth: int = 1

    def __post_init__(self):
        if not self.strategies:
            raise ValueError("at least one strategy must be enabled")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError("unknown strategy %r" % s)


@dataclass(frozen=True)
class Sat:
    assignment: Dict[str, Fraction]
    branch_id: Tuple[int, ...]
    certificate: MotzkinCertificate
    strategy: str = INTERNAL


@dataclass(frozen=True)
class Unsat:
    reason: str = "constraints unsatisfiable"


@dataclass(frozen=True)
class Unknown:
    reason: str


SolverResult = Union[Sat, Unsat, Unknown]


# -- linear branches ----------------------------------------------------------

def solve_linear_branch(atoms: Sequence[CAtom], fixed: Mapping[str, Fraction] = None,
                        nonneg: Iterable[str] = (), order: Sequence[str] = None):
    """Exact model of a conjunction of linear atoms, or None when unsatisfiable.

    ``fixed`` plugs in values first (e.g. the {0,1} fixings of a branch);
    ``nonneg`` lists variables constrained to be >= 0.
    """
    fixed = dict(fixed or {})
    rows = []
    for a in atoms:
        try:
            rows.append(linearize(a, fixed))
        except ValueError:
            raise NonLinearBranch("non-linear branch routed to linear solver") from None
    rows.extend(lp.row({v: -1}, lp.LE, 0) for v in nonneg if v not in fixed)
    point = lp.simple_point(rows, order)
    if point is None:
        return None
    point.update(fixed)
    return point


# -- chi candidates -----------------------------------------------------------

def _coupling(sub: Subsystem):
    """Constant program rows of ``sub`` as (x-part, x'-part) coefficient lists."""
    n = sub.ncols // 2
    out = []
    for r in sub.rows:
        if isinstance(r.mult, str) and (r.mult.rsplit("_", 1)[1][:3] in ("lam", "mu")):
            col = [dict(c).get(None, Fraction(0)) for c in r.coeffs]
            out.append((col[:n], col[n:]))
    return out


def _rational_roots(a: Fraction, b: Fraction, c: Fraction) -> List[Fraction]:
    """Rational roots of a*x^2 + b*x + c."""
    if a == 0:
        return [-c / b] if b != 0 else []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    num, den = disc.numerator, disc.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return []
    root = Fraction(rn, rd)
    return sorted({(-b + root) / (2 * a), (-b - root) / (2 * a)})


def candidates_for(sub: Subsystem, depth: int = 1) -> List[Fraction]:
    """{1, 0} plus the non-negative roots of the coupling polynomials."""
    found = set()
    rows = _coupling(sub)
    for ax, ay in rows:
        for j in range(len(ax)):
            if ay[j] != 0:
                found.add(-ax[j] / ay[j])
    if depth >= 2:
        n = len(rows[0][0]) if rows else 0
        for (ax1, ay1), (ax2, ay2) in itertools.combinations(rows, 2):
            for j1, j2 in itertools.combinations(range(n), 2):
                # det of [[p(1,j1), p(1,j2)], [p(2,j1), p(2,j2)]], p = a + a' chi
                a = ay1[j1] * ay2[j2] - ay1[j2] * ay2[j1]
                b = (ax1[j1] * ay2[j2] + ay1[j1] * ax2[j2]
                     - ax1[j2] * ay2[j1] - ay1[j2] * ax2[j1])
                c = ax1[j1] * ax2[j2] - ax1[j2] * ax2[j1]
                found.update(_rational_roots(a, b, c))
    extra = sorted(x for x in found if x >= 0 and x not in (0, 1))
    return [Fraction(1), Fraction(0)] + extra


def chi_candidates(S: ConstraintSystem, depth: int = 1) -> Dict[str, List[Fraction]]:
    out = {}
    for sub in S.subsystems:
        sym = sub.symbolic
        if sym:
            cands = candidates_for(sub, depth)
            for v in sym:
                out[v] = cands
    return out


# -- options ------------------------------------------------------------------

@dataclass(frozen=True)
class Option:
    index: int
    values: Tuple[Tuple[str, Fraction], ...]
    disjunct: str
    rows: Optional[Tuple[lp.Row, ...]]      # projection onto parameters


def _option_rows(sub: Subsystem, values: Mapping[str, Fraction], disjunct: str):
    rows = [linearize(a, values) for a in sub.atoms + (sub.disjunct(disjunct),)]
    rows.extend(lp.row({m: -1}, lp.LE, 0) for m in sub.multipliers if m not in values)
    return rows


def _enumerate(sub: Subsystem, cands: Optional[Mapping[str, List[Fraction]]]):
    """Yield (values, disjunct, linear?) in branch order."""
    fixed = sub.fixings
    sym = sub.symbolic
    fixed_lists = [vals for _, vals in fixed]
    if sym and cands is not None:
        sym_lists = [cands[v] for v in sym]
    else:
        sym_lists = []
    for fv in itertools.product(*fixed_lists):
        for sv in itertools.product(*sym_lists):
            values = dict(zip([v for v, _ in fixed], fv))
            if sym_lists:
                values.update(zip(sym, sv))
            linear = not sym or bool(sym_lists)
            for d in (CLASSICAL, NONCLASSICAL):
                yield values, d, linear


def _rename_row(r: lp.Row, mapping: Mapping[str, str]) -> lp.Row:
    return lp.Row(tuple(sorted((mapping.get(v, v), c) for v, c in r.terms)), r.rel, r.rhs)


def _dominance_filter(items, rows_of):
    """Drop items whose rows imply those of another kept item (first wins ties)."""
    kept = []
    for it in items:
        rows = rows_of(it)
        if any(lp.implies_all(rows, rows_of(k)) for k in kept):
            continue
        kept = [k for k in kept if not lp.implies_all(rows_of(k), rows)] + [it]
    return kept


@dataclass(frozen=True)
class _Shape:
    """Feasible invariant coefficients: one option per II/IC subsystem of a copy."""
    picks: Tuple[Tuple[str, Option], ...]       # (canonical tag, option)
    rows: Tuple[lp.Row, ...]


@dataclass(frozen=True)
class _BlockOption:
    picks: Tuple[Tuple[int, Option], ...]        # (subsystem position, option)
    rows: Tuple[lp.Row, ...]                     # over template and local parameters
    proj: Tuple[lp.Row, ...]                     # over template parameters


class _Search:
    """Block-wise search over option combinations.

    Initiation and consecution only mention the invariant coefficients of
    their copy, so their feasible combinations are collected once per
    strictness into a library of invariant shapes.  A block then picks a
    TI option and one shape per copy; its invariant coefficients are
    projected away, and the remaining search over blocks only shares
    template coefficients.
    """

    def __init__(self, S: ConstraintSystem, cfg: SolverConfig, chi: bool = False,
                 relax: bool = False):
        self.S = S
        self.cfg = cfg
        self.chi = chi
        self.relax = relax
        self.nodes = 0
        self._options: Dict[str, List[Option]] = {}
        self._library: Dict[bool, List[_Shape]] = {}
        self._by_tag = {sub.tag: pos for pos, sub in enumerate(S.subsystems)}

    def tick(self, k: int = 1):
        self.nodes += k
        if self.nodes > self.cfg.branch_cap:
            raise BranchCapExceeded("branch cap of %d explored nodes exceeded"
                                    % self.cfg.branch_cap)

    def skip(self, sub: Subsystem) -> bool:
        return self.relax and bool(sub.symbolic)

    def options(self, sub: Subsystem) -> List[Option]:
        """Projections of every linear option of ``sub``, minus dominated ones."""
        if sub.tag in self._options:
            return self._options[sub.tag]
        cands = None
        if self.chi and sub.symbolic:
            c = candidates_for(sub, self.cfg.chi_depth)
            cands = {v: c for v in sub.symbolic}
        found: List[Option] = []
        for idx, (values, d, linear) in enumerate(_enumerate(sub, cands)):
            if not linear:
                continue
            self.tick()
            proj = lp.project(_option_rows(sub, values, d), sub.multipliers)
            if proj is None:
                continue
            found.append(Option(idx, tuple(sorted(values.items())), d, tuple(proj)))
            if not proj:
                found = [found[-1]]
                break
        kept = _dominance_filter(found, lambda o: o.rows)
        self._options[sub.tag] = kept
        return kept

    def _canonical(self, kind: str, k: int, strict: bool) -> Subsystem:
        S = self.S
        canon = Copy(0, 0, 0, strict)
        if kind == "II":
            csub = initiation(S.program, canon, k)
        else:
            csub = consecution(S.program, canon, k, S.mode)
        # fixings as omission assigns them to any copy
        model = next(s for s in S.subsystems if s.kind == kind and s.index[3] == k)
        fix = tuple((csub.tag + v[len(model.tag):], vals) for v, vals in model.fixings)
        return replace(csub, fixings=fix)

    def library(self, strict: bool) -> List[_Shape]:
        if strict in self._library:
            return self._library[strict]
        P = self.S.program
        subs = [self._canonical("II", k, strict) for k in range(len(P.stem))]
        subs += [self._canonical("IC", k, strict) for k in range(len(P.loop))]
        subs = [sub for sub in subs if not self.skip(sub)]
        shapes: List[_Shape] = []

        def rec(j, picks, rows):
            if j == len(subs):
                shapes.append(_Shape(tuple(picks), tuple(lp.remove_redundant(rows))))
                return
            for o in self.options(subs[j]):
                self.tick()
                more = rows + list(o.rows)
                if o.rows and not lp.is_feasible(more):
                    continue
                rec(j + 1, picks + [(subs[j].tag, o)], more)

        rec(0, [], [])
        lib = _dominance_filter(shapes, lambda sh: sh.rows)
        self._library[strict] = lib
        return lib

    def _place(self, shape: _Shape, c: Copy):
        """Rename a canonical shape to copy ``c``."""
        canon = Copy(0, 0, 0, c.strict)
        mapping = {canon.t: c.t}
        mapping.update({canon.s(j): c.s(j) for j in range(self.S.program.n)})
        picks = []
        for ctag, o in shape.picks:
            kind, k = ctag.split("_")[0], int(ctag.rsplit("_", 1)[1])
            tag = "%s_%d_%d_%d_%d" % (kind, c.l, c.i, c.m, k)
            values = tuple((tag + v[len(ctag):], x) for v, x in o.values)
            opt = Option(o.index, values, o.disjunct,
                         tuple(_rename_row(r, mapping) for r in o.rows))
            picks.append((self._by_tag[tag], opt))
        return picks, [_rename_row(r, mapping) for r in shape.rows]

    def blocks(self) -> List[Tuple[int, List[Copy], List[str]]]:
        """(TI position, copies, block-local parameters) per implication."""
        S = self.S
        out = []
        for pos, sub in enumerate(S.subsystems):
            if sub.kind != "TI":
                continue
            copies = [c for c in S.copies if (c.i, c.m) == sub.index]
            local = [v for c in copies for v in [c.s(j) for j in range(S.program.n)] + [c.t]]
            out.append((pos, copies, local))
        return out

    def block_options(self, ti_pos: int, copies: List[Copy], local: List[str]
                      ) -> List[_BlockOption]:
        ti = self.S.subsystems[ti_pos]
        ti_opts = [None] if self.skip(ti) else self.options(ti)
        libs = [self.library(c.strict) for c in copies]
        found = []
        for o in ti_opts:
            for shapes in itertools.product(*libs):
                self.tick()
                picks = [] if o is None else [(ti_pos, o)]
                rows = [] if o is None else list(o.rows)
                for sh, c in zip(shapes, copies):
                    p, r = self._place(sh, c)
                    picks.extend(p)
                    rows.extend(r)
                proj = lp.project(rows, local) if local else \
                    (lp.remove_redundant(rows) if lp.is_feasible(rows) else None)
                if proj is None:
                    continue
                found.append(_BlockOption(tuple(picks), tuple(rows), tuple(proj)))
                if not proj:
                    return [found[-1]]
        return _dominance_filter(found, lambda b: b.proj)

    def run(self):
        """One block option per block with a jointly feasible projection, or None."""
        blocks = self.blocks()
        choices = []
        for b in blocks:
            opts = self.block_options(*b)
            if not opts:
                return None
            choices.append(opts)
        # most constrained blocks first; ties keep subsystem order
        order = sorted(range(len(blocks)), key=lambda j: len(choices[j]))
        picked: List = [None] * len(blocks)

        def dfs(d, G):
            if d == len(order):
                return True
            j = order[d]
            failed = []
            for bo in choices[j]:
                self.tick()
                G2 = G + list(bo.proj)
                if bo.proj and not lp.is_feasible(G2):
                    continue
                if any(lp.implies_all(G2, f) for f in failed):
                    continue
                picked[j] = bo
                if dfs(d + 1, lp.remove_redundant(G2) if len(G2) > 12 else G2):
                    return True
                failed.append(list(bo.proj))
                # every later option lies inside this failed region
                if lp.implies_all(G, bo.proj):
                    return False
            return False

        if not dfs(0, []):
            return None
        return blocks, picked


def _assemble(S: ConstraintSystem, blocks, picked, strategy: str) -> Sat:
    tparams = list(S.template_params())
    glob = [r for bo in picked for r in bo.proj]
    tvals = lp.simple_point(glob, tparams) if glob else {}
    if tvals is None:
        raise SolverDefect("projected template constraints became infeasible")
    values = {p: tvals.get(p, Fraction(0)) for p in tparams}
    for (_, _, local), bo in zip(blocks, picked):
        rows = [lp.substitute(r, values) for r in bo.rows]
        ivals = lp.simple_point(rows, local) if rows else {}
        if ivals is None:
            raise SolverDefect("invariant coefficients could not be completed")
        for v in local:
            values[v] = ivals.get(v, Fraction(0))
    picks: Dict[int, Option] = {}
    for bo in picked:
        picks.update(bo.picks)
    entries = []
    branch = []
    assignment = dict(values)
    for pos, sub in enumerate(S.subsystems):
        o = picks.get(pos)
        if o is None:
            raise SolverDefect("no option chosen for %s" % sub.tag)
        fixed = dict(o.values)
        rows = _option_rows(sub, {**values, **fixed}, o.disjunct)
        free = [m for m in sub.multipliers if m not in fixed]
        sol = lp.simple_point(rows, free) if rows else {}
        if sol is None:
            raise SolverDefect("multipliers for %s could not be completed" % sub.tag)
        mv = {m: sol.get(m, Fraction(0)) for m in free}
        mv.update(fixed)
        cert = SubCertificate(tuple(sorted(mv.items())), o.disjunct)
        branch.append(o.index)
        entries.append((sub.tag, cert))
        assignment.update(mv)
    return Sat(assignment, tuple(branch), MotzkinCertificate(tuple(entries)), strategy)


def _has_symbolic(S: ConstraintSystem) -> bool:
    return any(sub.symbolic for sub in S.subsystems)


def enumerate_and_solve(S: ConstraintSystem, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Search the linear branches; non-linear options are skipped."""
    if not S.omitted:
        raise ValueError("omit quantifiers before enumerating branches")
    if not _has_symbolic(S):
        search = _Search(S, cfg, None)
        found = search.run()
        if found is None:
            return Unsat("constraints unsatisfiable")
        return _assemble(S, found[0], found[1], INTERNAL)
    # every branch is non-linear; dropping those subsystems is a relaxation,
    # so its unsatisfiability carries over
    if _Search(S, cfg, relax=True).run() is None:
        return Unsat("constraints unsatisfiable (already without the non-linear subsystems)")
    return Unknown("non-linear branches skipped")


def chi_enumerate_solve(S: ConstraintSystem, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Substitute candidate values for every symbolic multiplier."""
    if not S.omitted:
        raise ValueError("omit quantifiers before enumerating branches")
    if not _has_symbolic(S):
        return enumerate_and_solve(S, cfg)
    found = _Search(S, cfg, chi=True).run()
    if found is None:
        return Unknown("no candidate for the non-linear multipliers succeeded")
    return _assemble(S, found[0], found[1], CHI)


# -- SMT-LIB ------------------------------------------------------------------

def smt_name(var: str) -> str:
    return "v_" + re.sub(r"[^A-Za-z0-9_]", "_", var)


def _smt_num(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        body = str(abs(x.numerator))
    else:
        body = "(/ %d %d)" % (abs(x.numerator), x.denominator)
    return "(- %s)" % body if x < 0 else body


def _smt_expr(a: CAtom) -> str:
    terms = []
    for (m, p), c in a.expr.terms:
        names = [smt_name(v) for v in (m, p) if v is not None]
        if not names:
            terms.append(_smt_num(c))
        elif c == 1:
            terms.append(names[0] if len(names) == 1 else "(* %s)" % " ".join(names))
        else:
            terms.append("(* %s %s)" % (_smt_num(c), " ".join(names)))
    if not terms:
        return "0"
    return terms[0] if len(terms) == 1 else "(+ %s)" % " ".join(terms)


def _smt_atom(a: CAtom) -> str:
    op = {"=": "=", "<=": "<=", "<": "<", ">": ">"}[a.rel]
    return "(%s %s 0)" % (op, _smt_expr(a))


def substitute_atom(a: CAtom, values: Mapping[str, Fraction]) -> CAtom:
    """Plug known values into an atom, keeping the remaining products symbolic."""
    acc: Dict = {}
    for (m, p), c in a.expr.terms:
        if m in values:
            c, m = c * values[m], None
        if p in values:
            c, p = c * values[p], None
        acc[(m, p)] = acc.get((m, p), 0) + c
    return CAtom(Expr.build(acc), a.rel)


def _subsystem_smt(sub: Subsystem) -> str:
    """One assertion per subsystem; each fixing combination is its own case.

    The fixed multipliers are substituted inside each case, so a system whose
    multipliers are all fixed is emitted without any product term.
    """
    names = [v for v, _ in sub.fixings]
    cases = []
    for vals in itertools.product(*[vs for _, vs in sub.fixings]):
        values = dict(zip(names, vals))
        parts = ["(= %s %s)" % (smt_name(v), _smt_num(x)) for v, x in values.items()]
        parts += [_smt_atom(substitute_atom(at, values)) for at in sub.atoms]
        parts.append("(or %s %s)" % (_smt_atom(substitute_atom(sub.classical, values)),
                                     _smt_atom(substitute_atom(sub.nonclassical, values))))
        cases.append("(and %s)" % " ".join(parts))
    return cases[0] if len(cases) == 1 else "(or %s)" % " ".join(cases)


def emit_smtlib(S: ConstraintSystem) -> str:
    lines = ["(set-logic QF_NRA)"]
    for v in S.variables:
        lines.append("(declare-const %s Real)" % smt_name(v.id))
    for v in S.variables:
        if v.nonneg:
            lines.append("(assert (>= %s 0))" % smt_name(v.id))
    for sub in S.subsystems:
        lines.append("; %s" % sub.tag)
        lines.append("(assert %s)" % _subsystem_smt(sub))
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def smt_product_variables(S: ConstraintSystem) -> List[str]:
    """Motzkin variables that still multiply a parameter in the emitted script."""
    return sorted(nonlinear_variables(S))


class ModelError(ValueError):
    pass


def _sexprs(text: str):
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    stack = [[]]
    for t in tokens:
        if t == "(":
            stack.append([])
        elif t == ")":
            if len(stack) == 1:
                raise ModelError("unbalanced parentheses in model")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(t)
    if len(stack) != 1:
        raise ModelError("unbalanced parentheses in model")
    return stack[0]


class _Irrational(Exception):
    pass


def _smt_value(e) -> Fraction:
    if isinstance(e, str):
        try:
            return Fraction(e)
        except ValueError:
            raise ModelError("bad numeral %r" % e) from None
    if not e:
        raise ModelError("empty term")
    head = e[0]
    if head in ("root-obj", "root-of", "algebraic"):
        raise _Irrational()
    args = [_smt_value(x) for x in e[1:]]
    if head == "-" and len(args) == 1:
        return -args[0]
    if head == "-":
        return args[0] - sum(args[1:])
    if head == "+":
        return sum(args, Fraction(0))
    if head == "*":
        out = Fraction(1)
        for a in args:
            out *= a
        return out
    if head == "/" and len(args) == 2:
        return args[0] / args[1]
    if head == "to_real":
        return args[0]
    raise ModelError("unsupported term head %r" % head)


def parse_smt_model(text: str, varlist: Sequence[str]):
    """Map ``varlist`` (SMT names) to exact values, or Unknown on an irrational."""
    defs = {}
    pending = _sexprs(text)
    while pending:
        f = pending.pop(0)
        if not isinstance(f, list) or not f:
            continue
        if f[0] == "model":
            pending.extend(f[1:])
        elif f[0] == "define-fun":
            if len(f) != 5:
                raise ModelError("malformed define-fun")
            defs[f[1]] = f[4]
        elif isinstance(f[0], list):
            pending.extend(f)
    out = {}
    for v in varlist:
        if v not in defs:
            raise ModelError("model does not define %s" % v)
        try:
            out[v] = _smt_value(defs[v])
        except _Irrational:
            return Unknown("irrational model value for %s" % v)
    return out


def run_external(S: ConstraintSystem, cfg: SolverConfig) -> SolverResult:
    if not cfg.external_command:
        return Unknown("no external solver configured")
    script = emit_smtlib(S)
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(script)
        path = fh.name
    try:
        cmd = shlex.split(cfg.external_command) + [path]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=cfg.timeout)
        except subprocess.TimeoutExpired:
            return Unknown("external solver timed out after %gs" % cfg.timeout)
        except OSError as e:
            return Unknown("external solver failed to start: %s" % e)
    finally:
        os.unlink(path)
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    if first == "unsat":
        return Unsat("constraints unsatisfiable (external solver)")
    if first != "sat":
        return Unknown("external solver answered %r" % (first or proc.stderr.strip()[:200]))
    params = [v.id for v in S.variables if v.role not in MOTZKIN_ROLES]
    model = parse_smt_model(rest, [smt_name(v) for v in params])
    if isinstance(model, Unknown):
        return model
    values = {v: model[smt_name(v)] for v in params}
    cert = certify_parameters(S, values)
    if cert is None:
        return Unknown("external model did not yield a certificate")
    assignment = dict(values)
    for _, sc in cert.entries:
        assignment.update(dict(sc.values))
    return Sat(assignment, (), cert, SMT)


def _reverify(S: ConstraintSystem, res: Sat) -> SolverResult:
    from .argument import ShapeMismatch, extract_argument, verify_certificate
    try:
        arg = extract_argument(S, res.assignment, res.certificate, res.branch_id)
        verdict = verify_certificate(S.program, arg)
    except (ShapeMismatch, KeyError) as e:
        verdict = e
    if verdict is True or getattr(verdict, "valid", False):
        return res
    log.error("solver defect: %s model failed re-verification: %s", res.strategy,
              getattr(verdict, "reason", verdict))
    return Unknown("model failed re-verification")


def solve(S: ConstraintSystem, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Run the strategy cascade; stop at the first verified Sat or an Unsat.

    A strategy that hits the branch cap hands over to the next one; the
    cap error is re-raised only if no later strategy settles the system.
    """
    last: SolverResult = Unknown("no strategy ran")
    capped: Optional[BranchCapExceeded] = None
    for strategy in cfg.strategies:
        try:
            if strategy == INTERNAL:
                res = enumerate_and_solve(S, cfg)
            elif strategy == CHI:
                res = chi_enumerate_solve(S, cfg)
            else:
                res = run_external(S, cfg)
        except BranchCapExceeded as e:
            log.info("%s: %s", strategy, e)
            capped = e
            continue
        log.info("%s: %s", strategy, type(res).__name__)
        if isinstance(res, Sat):
            res = _reverify(S, res)
        if isinstance(res, (Sat, Unsat)):
            return res
        last = res
    if capped is not None and isinstance(last, Unknown) and last.reason == "no strategy ran":
        raise capped
    return last
