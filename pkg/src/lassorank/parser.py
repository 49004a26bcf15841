"""
Lasso-program DSL and its disjunctive normal form.

A program file looks like::

    # the running example
    vars q, y;
    stem: y = 1;
    loop: q >= 0 && assign { q := q - y; y := y + 1 };

Formulas combine linear comparisons with ``&&``, ``||`` and ``!``.
Arithmetic allows ``+ - * /`` as long as every product has a constant
factor and every divisor is a constant.  ``assign { v := e; ... }`` is
sugar for ``v' = e`` plus ``w' = w`` for every declared ``w`` the block
leaves alone.
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .core import LinAtom, Polyhedron, LE, LT, eval_atom

DEFAULT_DNF_CAP = 64


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = "" if line is None else "line %d, column %d: " % (line, col)
        super().__init__(where + message)


class NormalFormTooLarge(ValueError):
    pass


def prime(v: str) -> str:
    return v + "'"


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class LinExpr:
    coeffs: Tuple[Tuple[str, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def of(coeffs: Mapping[str, Fraction], const=0) -> "LinExpr":
        return LinExpr(tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c)),
                       Fraction(const))

    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LinExpr") -> "LinExpr":
        d = dict(self.coeffs)
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return LinExpr.of(d, self.const + other.const)

    def scale(self, k: Fraction) -> "LinExpr":
        return LinExpr.of({v: c * k for v, c in self.coeffs}, self.const * k)

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self + other.scale(Fraction(-1))

    def value(self, v: Mapping[str, Fraction]) -> Fraction:
        return self.const + sum((c * v[name] for name, c in self.coeffs), Fraction(0))

    def variables(self):
        return {v for v, _ in self.coeffs}


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Compare:
    lhs: LinExpr
    rel: str
    rhs: LinExpr


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: Tuple[object, ...]


@dataclass(frozen=True)
class Or:
    args: Tuple[object, ...]


@dataclass(frozen=True)
class Assign:
    items: Tuple[Tuple[str, LinExpr], ...]
    line: int = 0
    col: int = 0


Formula = Union[BoolConst, Compare, Not, And, Or, Assign]


@dataclass(frozen=True)
class ProgramAST:
    variables: Tuple[str, ...]
    stem: Formula
    loop: Formula


@dataclass(frozen=True)
class LassoProgram:
    varspace: Tuple[str, ...]
    stem: Tuple[Polyhedron, ...]
    loop: Tuple[Polyhedron, ...]

    @property
    def n(self) -> int:
        return len(self.varspace)

    @property
    def primed(self) -> Tuple[str, ...]:
        return tuple(prime(v) for v in self.varspace)

    def in_stem(self, x: Mapping[str, Fraction]) -> bool:
        return any(all(eval_atom(a, x) for a in P.atoms) for P in self.stem)

    def in_loop(self, x: Mapping[str, Fraction], x2: Mapping[str, Fraction]) -> bool:
        v = dict(x)
        v.update({prime(k): x2[k] for k in self.varspace})
        return any(all(eval_atom(a, v) for a in P.atoms) for P in self.loop)


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_]*'?)
  | (?P<op>&&|\|\||:=|<=|>=|!=|[<>=!+\-*/(){};:,])
""", re.VERBOSE)

KEYWORDS = {"vars", "stem", "loop", "assign", "true", "false"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    out = []
    pos, line, start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError("unexpected character %r" % text[pos], line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            tok_text = m.group()
            if kind == "ident" and tok_text in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, tok_text, line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


# -- parser ------------------------------------------------------------------

_RELS = ("<=", "<", ">=", ">", "=", "!=")


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.i = 0
        self.declared: set = set()

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text) -> Optional[Token]:
        if self.tok.kind in ("op", "kw") and self.tok.text == text:
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text) -> Token:
        t = self.accept(text)
        if t is None:
            shown = self.tok.text or "end of input"
            self.error("expected %r, found %r" % (text, shown))
        return t

    def program(self) -> ProgramAST:
        self.expect("vars")
        names = []
        while True:
            t = self.tok
            if t.kind != "ident" or t.text.endswith("'"):
                self.error("expected a variable name")
            if t.text in names:
                self.error("variable %s declared twice" % t.text)
            names.append(t.text)
            self.i += 1
            if not self.accept(","):
                break
        self.expect(";")
        self.declared = set(names)
        self.expect("stem")
        self.expect(":")
        stem_tok = self.tok
        stem = self.formula()
        self.expect(";")
        for v in _formula_vars(stem):
            if v.endswith("'"):
                self.error("primed variable %s in stem" % v, stem_tok)
        if _has_assign(stem):
            self.error("assign block in stem", stem_tok)
        self.expect("loop")
        self.expect(":")
        loop = self.formula()
        self.expect(";")
        if self.tok.kind != "eof":
            self.error("trailing input")
        return ProgramAST(tuple(names), stem, loop)

    def formula(self):
        args = [self.conj()]
        while self.accept("||"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.accept("&&"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        if self.accept("!"):
            return Not(self.unary())
        return self.primary()

    def primary(self):
        if self.accept("true"):
            return BoolConst(True)
        if self.accept("false"):
            return BoolConst(False)
        t = self.accept("assign")
        if t:
            return self.assign_block(t)
        if self.tok.text == "(":
            # either a parenthesized formula or an expression like (y + q)/2
            save = self.i
            try:
                return self.comparison()
            except ParseError:
                self.i = save
            self.expect("(")
            f = self.formula()
            self.expect(")")
            return f
        return self.comparison()

    def assign_block(self, start: Token):
        self.expect("{")
        items = []
        seen = set()
        while not self.accept("}"):
            t = self.tok
            if t.kind != "ident" or t.text.endswith("'"):
                self.error("expected an assigned variable")
            if t.text not in self.declared:
                self.error("undeclared variable %s" % t.text)
            if t.text in seen:
                self.error("variable %s assigned twice in one block" % t.text)
            seen.add(t.text)
            self.i += 1
            self.expect(":=")
            items.append((t.text, self.expr()))
            if not self.accept(";"):
                self.expect("}")
                break
        return Assign(tuple(items), start.line, start.col)

    def comparison(self):
        lhs = self.expr()
        t = self.tok
        if t.kind != "op" or t.text not in _RELS:
            self.error("expected a comparison operator")
        self.i += 1
        rhs = self.expr()
        if lhs.is_const() and rhs.is_const():
            return BoolConst(_compare(lhs.const, t.text, rhs.const))
        return Compare(lhs, t.text, rhs)

    def expr(self) -> LinExpr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = e + self.term()
            elif self.accept("-"):
                e = e - self.term()
            else:
                return e

    def term(self) -> LinExpr:
        e = self.factor()
        while True:
            t = self.tok
            if self.accept("*"):
                f = self.factor()
                if e.is_const():
                    e = f.scale(e.const)
                elif f.is_const():
                    e = e.scale(f.const)
                else:
                    self.error("non-linear product", t)
            elif self.accept("/"):
                f = self.factor()
                if not f.is_const():
                    self.error("division by a non-constant", t)
                if f.const == 0:
                    self.error("division by zero", t)
                e = e.scale(1 / f.const)
            else:
                return e

    def factor(self) -> LinExpr:
        t = self.tok
        if self.accept("-"):
            return self.factor().scale(Fraction(-1))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "num":
            self.i += 1
            return LinExpr.of({}, Fraction(int(t.text)))
        if t.kind == "ident":
            base = t.text[:-1] if t.text.endswith("'") else t.text
            if base not in self.declared:
                self.error("undeclared variable %s" % base)
            self.i += 1
            return LinExpr.of({t.text: Fraction(1)})
        self.error("expected an expression, found %r" % (t.text or "end of input"))


def _compare(a: Fraction, rel: str, b: Fraction) -> bool:
    return {"<=": a <= b, "<": a < b, ">=": a >= b, ">": a > b,
            "=": a == b, "!=": a != b}[rel]


def _formula_vars(f) -> set:
    if isinstance(f, Compare):
        return f.lhs.variables() | f.rhs.variables()
    if isinstance(f, Not):
        return _formula_vars(f.arg)
    if isinstance(f, (And, Or)):
        out = set()
        for a in f.args:
            out |= _formula_vars(a)
        return out
    if isinstance(f, Assign):
        out = {prime(v) for v, _ in f.items}
        for _, e in f.items:
            out |= e.variables()
        return out
    return set()


def _has_assign(f) -> bool:
    if isinstance(f, Assign):
        return True
    if isinstance(f, Not):
        return _has_assign(f.arg)
    if isinstance(f, (And, Or)):
        return any(_has_assign(a) for a in f.args)
    return False


def parse_program(text: str) -> ProgramAST:
    return _Parser(tokenize(text)).program()


# -- desugaring and normal form ----------------------------------------------

def _desugar(f, variables):
    if isinstance(f, Assign):
        assigned = [v for v, _ in f.items]
        if len(set(assigned)) != len(assigned):
            raise ParseError("double assignment in one block", f.line, f.col)
        parts = [Compare(LinExpr.of({prime(v): 1}), "=", e) for v, e in f.items]
        parts += [Compare(LinExpr.of({prime(w): 1}), "=", LinExpr.of({w: 1}))
                  for w in variables if w not in assigned]
        return And(tuple(parts)) if len(parts) != 1 else parts[0]
    if isinstance(f, Not):
        return Not(_desugar(f.arg, variables))
    if isinstance(f, And):
        return And(tuple(_desugar(a, variables) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_desugar(a, variables) for a in f.args))
    return f


def desugar_assignments(ast: ProgramAST) -> ProgramAST:
    return ProgramAST(ast.variables, _desugar(ast.stem, ast.variables),
                      _desugar(ast.loop, ast.variables))


_NEGATED = {"<=": ">", "<": ">=", ">=": "<", ">": "<=", "=": "!=", "!=": "="}


def _nnf(f, positive=True):
    """Negation normal form with boolean constants simplified away."""
    if isinstance(f, BoolConst):
        return BoolConst(f.value == positive)
    if isinstance(f, Compare):
        return f if positive else Compare(f.lhs, _NEGATED[f.rel], f.rhs)
    if isinstance(f, Not):
        return _nnf(f.arg, not positive)
    if isinstance(f, Assign):
        raise ValueError("desugar assignments before normalizing")
    conj = isinstance(f, And) == positive
    args = [_nnf(a, positive) for a in f.args]
    # absorbing and neutral constants
    absorbing = not conj
    if any(isinstance(a, BoolConst) and a.value == absorbing for a in args):
        return BoolConst(absorbing)
    args = [a for a in args if not isinstance(a, BoolConst)]
    if not args:
        return BoolConst(conj)
    if len(args) == 1:
        return args[0]
    return And(tuple(args)) if conj else Or(tuple(args))


def _atoms_of(c: Compare) -> List[List[LinAtom]]:
    """A comparison as a DNF over atoms (only != yields two disjuncts)."""
    diff = c.lhs - c.rhs            # lhs - rhs  rel  0
    coeffs = dict(diff.coeffs)
    neg = {v: -k for v, k in coeffs.items()}
    const = -diff.const
    if c.rel == "<=":
        return [[LinAtom.make(coeffs, const, LE)]]
    if c.rel == "<":
        return [[LinAtom.make(coeffs, const, LT)]]
    if c.rel == ">=":
        return [[LinAtom.make(neg, -const, LE)]]
    if c.rel == ">":
        return [[LinAtom.make(neg, -const, LT)]]
    if c.rel == "=":
        return [[LinAtom.make(coeffs, const, LE), LinAtom.make(neg, -const, LE)]]
    return [[LinAtom.make(coeffs, const, LT)], [LinAtom.make(neg, -const, LT)]]


TRUE_ATOM = LinAtom.make({}, 0, LE)
FALSE_ATOM = LinAtom.make({}, -1, LE)


def _dnf(f, cap: int) -> List[List[LinAtom]]:
    if isinstance(f, BoolConst):
        return [[TRUE_ATOM if f.value else FALSE_ATOM]]
    if isinstance(f, Compare):
        return _atoms_of(f)
    if isinstance(f, Or):
        out = []
        for a in f.args:
            out.extend(_dnf(a, cap))
            if len(out) > cap:
                raise NormalFormTooLarge("normal form too large (more than %d disjuncts)" % cap)
        return out
    # And: cross product
    out = [[]]
    for a in f.args:
        part = _dnf(a, cap)
        if len(out) * len(part) > cap:
            raise NormalFormTooLarge("normal form too large (more than %d disjuncts)" % cap)
        out = [x + y for x in out for y in part]
    return out


def _polyhedra(f, varspace, cap) -> Tuple[Polyhedron, ...]:
    out = []
    for conj in _dnf(_nnf(f), cap):
        atoms = []
        for a in conj:
            if a not in atoms:
                atoms.append(a)
        out.append(Polyhedron.make(atoms, varspace))
    return tuple(out)


def normalize(ast: ProgramAST, cap: int = DEFAULT_DNF_CAP) -> LassoProgram:
    if _has_assign(ast.stem) or _has_assign(ast.loop):
        ast = desugar_assignments(ast)
    xs = tuple(ast.variables)
    return LassoProgram(xs, _polyhedra(ast.stem, xs, cap),
                        _polyhedra(ast.loop, xs + tuple(prime(v) for v in xs), cap))


def load_program(text: str, cap: int = DEFAULT_DNF_CAP) -> LassoProgram:
    return normalize(desugar_assignments(parse_program(text)), cap)


def eval_formula(f, v: Mapping[str, Fraction]) -> bool:
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Compare):
        return _compare(f.lhs.value(v), f.rel, f.rhs.value(v))
    if isinstance(f, Not):
        return not eval_formula(f.arg, v)
    if isinstance(f, And):
        return all(eval_formula(a, v) for a in f.args)
    if isinstance(f, Or):
        return any(eval_formula(a, v) for a in f.args)
    raise ValueError("desugar assignments before evaluating")


def render_atom(a: LinAtom, order: Sequence[str]) -> str:
    """Canonical text of an atom: terms in varspace order, constant on the right."""
    rank = {v: i for i, v in enumerate(order)}
    terms = sorted(a.terms, key=lambda t: rank.get(t[0], len(rank)))
    if not terms:
        lhs = "0"
    else:
        bits = []
        for v, c in terms:
            mag = abs(c)
            body = v if mag == 1 else "%s*%s" % (mag, v)
            bits.append(("-" if c < 0 else "+", body))
        lhs = ("-" if bits[0][0] == "-" else "") + bits[0][1]
        for s, b in bits[1:]:
            lhs += " %s %s" % (s, b)
    return "%s %s %s" % (lhs, a.relation, a.constant)


def render_program(P: LassoProgram) -> str:
    order = P.varspace + P.primed
    lines = ["#N = %d, #M = %d" % (len(P.stem), len(P.loop))]
    for k, poly in enumerate(P.stem):
        lines.append("stem[%d]:" % k)
        lines.extend("  " + render_atom(a, order) for a in poly.atoms)
    for k, poly in enumerate(P.loop):
        lines.append("loop[%d]:" % k)
        lines.extend("  " + render_atom(a, order) for a in poly.atoms)
    return "\n".join(lines)
