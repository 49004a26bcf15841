"""
Linear ranking-function templates.

A template is a CNF whose atoms have the shape

    sum_f  alpha_f * f(x) + beta_f * f(x')  +  sum_d gamma_d * d   (> or >=)  0

over affine function symbols ``f`` and scalar variables ``d``.  Four
families are provided (affine, k-phase, k-piece, k-lexicographic), each
with the coloring used to fix Motzkin coefficients and its degree.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Mapping, Tuple

GT = ">"
GE = ">="
WHITE, RED, BLUE = "white", "red", "blue"
KINDS = ("affine", "phase", "piece", "lex")


def _frozen(d):
    return tuple(sorted((k, Fraction(v)) for k, v in d.items() if v))


@dataclass(frozen=True)
class TemplateAtom:
    alpha: Tuple[Tuple[str, Fraction], ...]
    beta: Tuple[Tuple[str, Fraction], ...]
    gamma: Tuple[Tuple[str, Fraction], ...]
    rel: str = GT

    @staticmethod
    def make(alpha=None, beta=None, gamma=None, rel=GT):
        a = TemplateAtom(_frozen(alpha or {}), _frozen(beta or {}),
                         _frozen(gamma or {}), rel)
        if not (a.alpha or a.beta or a.gamma):
            raise ValueError("empty template atoms are not allowed")
        if rel not in (GT, GE):
            raise ValueError("template atoms use > or >=")
        return a

    @property
    def symbols(self) -> FrozenSet[str]:
        return frozenset(k for k, _ in self.alpha + self.beta + self.gamma)

    def __str__(self):
        parts = []
        for f, c in self.alpha:
            parts.append((c, "%s(x)" % f))
        for f, c in self.beta:
            parts.append((c, "%s(x')" % f))
        for d, c in self.gamma:
            parts.append((c, d))
        text = ""
        for i, (c, body) in enumerate(parts):
            mag = abs(c)
            term = body if mag == 1 else "%s*%s" % (mag, body)
            if i == 0:
                text = ("-" if c < 0 else "") + term
            else:
                text += (" - " if c < 0 else " + ") + term
        return "%s %s 0" % (text, self.rel)


@dataclass(frozen=True)
class Template:
    kind: str
    k: int
    functions: Tuple[str, ...]
    scalars: Tuple[str, ...]
    conjuncts: Tuple[Tuple[TemplateAtom, ...], ...]

    @property
    def atom_count(self) -> int:
        return sum(len(c) for c in self.conjuncts)

    def occurrences(self):
        for ci, conj in enumerate(self.conjuncts):
            for pos, atom in enumerate(conj):
                yield (ci, pos), atom

    @property
    def spec(self) -> str:
        return self.kind if self.kind == "affine" else "%s:%d" % (self.kind, self.k)

    def __str__(self):
        return "\n".join("  " + " || ".join(str(a) for a in conj) for conj in self.conjuncts)


def _pos(f):            # f(x) > 0
    return TemplateAtom.make(alpha={f: 1})


def _dec(f, d, g=None):
    # g(x') < f(x) - d, written f(x) - g(x') - d > 0
    g = g or f
    if g == f:
        return TemplateAtom.make(alpha={f: 1}, beta={f: -1}, gamma={d: -1})
    return TemplateAtom.make(alpha={f: 1}, beta={g: -1}, gamma={d: -1})


def _positive(d):       # d > 0
    return TemplateAtom.make(gamma={d: 1})


def _affine(kind="affine"):
    conj = ((_positive("delta"),), (_pos("f"),), (_dec("f", "delta"),))
    return Template(kind, 1, ("f",), ("delta",), conj)


def _phase(k):
    fs = tuple("f%d" % i for i in range(1, k + 1))
    ds = tuple("delta%d" % i for i in range(1, k + 1))
    conj = [(_positive(d),) for d in ds]
    conj.append(tuple(_pos(f) for f in fs))
    for i in range(k):
        conj.append((_dec(fs[i], ds[i]),) + tuple(_pos(fs[j]) for j in range(i)))
    return Template("phase", k, fs, ds, tuple(conj))


def _piece(k):
    fs = tuple("f%d" % i for i in range(1, k + 1))
    gs = tuple("g%d" % i for i in range(1, k + 1))
    conj = [(_positive("delta"),)]
    for i in range(k):
        for j in range(k):
            conj.append((TemplateAtom.make(alpha={gs[i]: -1}),
                         TemplateAtom.make(beta={gs[j]: -1}),
                         _dec(fs[i], "delta", fs[j])))
    conj.extend((_pos(f),) for f in fs)
    conj.append(tuple(TemplateAtom.make(alpha={g: 1}, rel=GE) for g in gs))
    return Template("piece", k, fs + gs, ("delta",), tuple(conj))


def _lex(k):
    fs = tuple("f%d" % i for i in range(1, k + 1))
    ds = tuple("delta%d" % i for i in range(1, k + 1))
    conj = [(_positive(d),) for d in ds]
    conj.extend((_pos(f),) for f in fs)
    for i in range(k - 1):
        weak = TemplateAtom.make(alpha={fs[i]: 1}, beta={fs[i]: -1}, rel=GE)
        conj.append((weak,) + tuple(_dec(fs[j], ds[j]) for j in range(i)))
    conj.append(tuple(_dec(fs[i], ds[i]) for i in range(k)))
    return Template("lex", k, fs, ds, tuple(conj))


def make_template(kind: str, k: int = 1) -> Template:
    if kind not in KINDS:
        raise ValueError("unknown template kind %r" % kind)
    if k < 1:
        raise ValueError("template size k must be positive, got %d" % k)
    if kind == "affine":
        if k != 1:
            raise ValueError("the affine template has k = 1")
        return _affine()
    if k == 1 and kind in ("phase", "lex"):
        t = _affine()
        return Template(kind, 1, t.functions, t.scalars, t.conjuncts)
    return {"phase": _phase, "piece": _piece, "lex": _lex}[kind](k)


def parse_template_spec(text: str) -> Template:
    """``affine``, ``phase:k``, ``piece:k`` or ``lex:k``."""
    text = text.strip()
    if text == "affine":
        return make_template("affine")
    kind, sep, num = text.partition(":")
    if not sep or kind not in KINDS or kind == "affine":
        raise ValueError("bad template spec %r (use affine, phase:k, piece:k, lex:k)" % text)
    try:
        k = int(num)
    except ValueError:
        raise ValueError("bad template size in %r" % text) from None
    return make_template(kind, k)


def dependency_components(T: Template) -> FrozenSet[FrozenSet[str]]:
    parent = {s: s for s in T.functions + T.scalars}

    def find(s):
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    for _, atom in T.occurrences():
        syms = sorted(atom.symbols)
        for s in syms[1:]:
            parent[find(s)] = find(syms[0])
    groups: Dict[str, set] = {}
    for s in parent:
        groups.setdefault(find(s), set()).add(s)
    return frozenset(frozenset(g) for g in groups.values())


def _component_of(T: Template):
    comp = {}
    for c in dependency_components(T):
        for s in c:
            comp[s] = c
    return comp


def is_suitable_coloring(T: Template, eta: Mapping[Tuple[int, int], str]) -> bool:
    comp = _component_of(T)

    def atom_comp(atom):
        return comp[next(iter(atom.symbols))]

    blues = []
    edges = set()
    for ci, conj in enumerate(T.conjuncts):
        colors = [eta.get((ci, pos), WHITE) for pos in range(len(conj))]
        if colors.count(RED) != 1:
            return False
        red = atom_comp(conj[colors.index(RED)])
        for pos, col in enumerate(colors):
            if col == BLUE:
                blue = atom_comp(conj[pos])
                blues.append(blue)
                edges.add((red, blue))
    if len(set(blues)) != len(blues):
        return False
    # acyclicity by repeatedly removing sinks
    nodes = {a for e in edges for a in e}
    live = set(edges)
    while nodes:
        sinks = {n for n in nodes if not any(a == n for a, _ in live)}
        if not sinks:
            return False
        nodes -= sinks
        live = {(a, b) for a, b in live if b not in sinks}
    return True


def canonical_coloring(T: Template) -> Dict[Tuple[int, int], str]:
    eta = {occ: WHITE for occ, _ in T.occurrences()}
    k = T.k
    conj = T.conjuncts
    if T.kind == "affine" or (k == 1 and T.kind in ("phase", "lex")):
        for ci in range(len(conj)):
            eta[(ci, 0)] = RED
        return eta
    if T.kind == "phase":
        for ci in range(k):
            eta[(ci, 0)] = RED
        eta[(k, 0)] = RED
        for i in range(k):
            ci = k + 1 + i
            if i == 0:
                eta[(ci, 0)] = RED
            else:
                eta[(ci, 0)] = BLUE
                eta[(ci, 1)] = RED
    elif T.kind == "piece":
        eta[(0, 0)] = RED
        for i in range(k):
            for j in range(k):
                ci = 1 + i * k + j
                eta[(ci, 2)] = RED
                if i == j:
                    eta[(ci, 0)] = BLUE
        for i in range(k):
            eta[(1 + k * k + i, 0)] = RED
        eta[(1 + k * k + k, 0)] = RED
    elif T.kind == "lex":
        for ci in range(2 * k):
            eta[(ci, 0)] = RED
        for i in range(k - 1):
            ci = 2 * k + i
            if i == 0:
                eta[(ci, 0)] = RED
            else:
                eta[(ci, 0)] = BLUE
                eta[(ci, 1)] = RED
        last = 3 * k - 1
        eta[(last, 0)] = RED
        if k > 1:
            eta[(last, k - 1)] = BLUE
    return eta


def coloring_degree(T: Template, eta: Mapping[Tuple[int, int], str]) -> int:
    if not is_suitable_coloring(T, eta):
        raise ValueError("coloring is not suitable for this template")
    return sum(1 for occ, _ in T.occurrences() if eta.get(occ, WHITE) == WHITE)
