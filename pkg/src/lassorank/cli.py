"""
Command-line front end.

    lassorank synthesize PROGRAM --template affine --invariants 1 --nondecreasing
    lassorank check PROGRAM ARGUMENT.json
    lassorank normalize PROGRAM
    lassorank emit-smt PROGRAM --template lex:2 -o out.smt2
    lassorank execute PROGRAM --steps 20 --seed 3

Exit codes: 0 terminating / valid / done, 1 not proven / invalid,
2 input error, 3 solver failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .argument import (ShapeMismatch, TerminationArgument, argument_to_doc, check_decrease,
                       describe_ranking, extract_argument, loads_argument, sample_execution,
                       verify_certificate)
from .constraints import (GENERAL, NONDECREASING, build_constraints, nonlinear_dimension,
                          omit_quantifiers, predicted_dimensions)
from .parser import DEFAULT_DNF_CAP, NormalFormTooLarge, ParseError, load_program, render_program
from .solver import (CHI, INTERNAL, SMT, BranchCapExceeded, Sat, SolverConfig, SolverDefect,
                     Unknown, Unsat, emit_smtlib, solve)
from .templates import parse_template_spec

EXIT_OK, EXIT_NOT_PROVEN, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("lassorank")


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    path: str
    template: str = "affine"
    invariants: int = 1
    mode: str = GENERAL
    strict_slots: Tuple[int, ...] = ()
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    output_format: str = "human"
    try_all: Optional[int] = None
    dnf_cap: int = DEFAULT_DNF_CAP

    def validate(self):
        if self.invariants < 0:
            raise InputError("--invariants must be non-negative")
        for slot in self.strict_slots:
            if not 0 <= slot < self.invariants:
                raise InputError("--strict-invariant %d is not a slot below --invariants %d"
                                 % (slot, self.invariants))
        if self.try_all is not None and self.try_all < 1:
            raise InputError("--try-all needs k >= 1")
        if self.dnf_cap < 1:
            raise InputError("--dnf-cap must be positive")
        try:
            parse_template_spec(self.template)
        except ValueError as e:
            raise InputError(str(e)) from None


def _solver_config(args) -> SolverConfig:
    strategies = []
    command = "z3"
    for part in (args.solver or "internal,chi,smt").split(","):
        part = part.strip()
        if part == "internal":
            strategies.append(INTERNAL)
        elif part == "chi":
            strategies.append(CHI)
        elif part == "smt" or part.startswith("smt:"):
            strategies.append(SMT)
            if part.startswith("smt:"):
                command = part[4:]
                if not command:
                    raise InputError("empty external solver command")
        else:
            raise InputError("unknown solver %r (use internal, chi, smt or smt:<command>)"
                             % part)
    if args.timeout <= 0:
        raise InputError("--timeout must be positive")
    if args.branch_cap < 1:
        raise InputError("--branch-cap must be positive")
    if args.chi_depth < 1:
        raise InputError("--chi-depth must be at least 1")
    try:
        return SolverConfig(tuple(strategies), command, args.timeout, args.branch_cap,
                            args.chi_depth)
    except ValueError as e:
        raise InputError(str(e)) from None


def _run_config(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command, path=args.program,
        template=getattr(args, "template", "affine"),
        invariants=getattr(args, "invariants", 1),
        mode=NONDECREASING if getattr(args, "nondecreasing", False) else GENERAL,
        strict_slots=tuple(getattr(args, "strict_invariant", None) or ()),
        solver=_solver_config(args) if hasattr(args, "solver") else SolverConfig(),
        seed=getattr(args, "seed", 0),
        output_format=getattr(args, "format", "human"),
        try_all=getattr(args, "try_all", None),
        dnf_cap=getattr(args, "dnf_cap", DEFAULT_DNF_CAP))
    cfg.validate()
    return cfg


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise InputError("cannot read %s: %s" % (path, e.strerror or e)) from None


def _load(cfg: RunConfig):
    text = _read(cfg.path)
    try:
        return load_program(text, cfg.dnf_cap)
    except ParseError as e:
        raise InputError("%s: %s" % (cfg.path, e)) from None
    except NormalFormTooLarge as e:
        raise InputError("%s: %s" % (cfg.path, e)) from None


def _system(P, cfg: RunConfig, template: str):
    T = parse_template_spec(template)
    strict = [i in cfg.strict_slots for i in range(cfg.invariants)]
    S = omit_quantifiers(build_constraints(P, T, cfg.invariants, cfg.mode, strict))
    return T, S


def _dims(P, T, S, cfg: RunConfig):
    naive, bound = predicted_dimensions(P, T, cfg.invariants, cfg.mode, dict(S.coloring))
    actual = nonlinear_dimension(S)
    return {"actual": actual, "predicted_bound": bound, "naive_bound": naive,
            "linear": actual == 0}


def _frac(x) -> str:
    return str(Fraction(x))


# -- synthesize ---------------------------------------------------------------

def _attempt(P, cfg: RunConfig, template: str):
    T, S = _system(P, cfg, template)
    res = solve(S, cfg.solver)
    arg = None
    if isinstance(res, Sat):
        arg = extract_argument(S, res.assignment, res.certificate, res.branch_id)
        if not verify_certificate(P, arg):
            res, arg = Unknown("model failed re-verification"), None
    return T, S, res, arg


def _report(P, cfg: RunConfig, T, S, res, arg: Optional[TerminationArgument]):
    dims = _dims(P, T, S, cfg)
    doc = {
        "status": "TERMINATING" if arg is not None else "NOT PROVEN",
        "program": {"path": cfg.path, "variables": list(P.varspace),
                    "#N": len(P.stem), "#M": len(P.loop)},
        "template": {"kind": T.kind, "k": T.k, "spec": T.spec},
        "invariant_slots": cfg.invariants,
        "mode": cfg.mode,
        "nonlinear_dimension": dims,
    }
    if arg is None:
        doc["reason"] = getattr(res, "reason", "")
        return doc
    vs = P.varspace
    rf = arg.ranking
    doc["strategy"] = res.strategy
    doc["branch_id"] = list(arg.branch_id)
    doc["ranking"] = {
        "kind": rf.kind,
        "functions": [{"s": [_frac(c) for c in f.s], "t": _frac(f.t), "text": f.render(vs)}
                      for f in rf.functions],
        "deltas": [_frac(d) for d in rf.deltas],
        "predicates": [{"s": [_frac(c) for c in g.s], "t": _frac(g.t), "text": g.render(vs)}
                       for g in rf.predicates],
    }
    doc["invariants"] = [{"s": [_frac(c) for c in inv.func.s], "t": _frac(inv.func.t),
                          "strict": inv.strict, "trivial": inv.trivial, "text": inv.render(vs)}
                         for inv in arg.invariants]
    doc["certificate"] = {"verified": True, "subsystems": len(arg.certificate.entries)}
    doc["argument"] = argument_to_doc(arg)
    return doc


def _human(doc) -> str:
    lines = ["lassorank %s" % __version__]
    prog = doc["program"]
    lines.append("program: %s (variables %s; #N = %d, #M = %d)"
                 % (prog["path"], ", ".join(prog["variables"]), prog["#N"], prog["#M"]))
    lines.append("template: %s" % doc["template"]["spec"])
    lines.append("invariant slots: %d (%s)" % (doc["invariant_slots"], doc["mode"]))
    lines.append("status: %s" % doc["status"])
    if doc["status"] != "TERMINATING":
        lines.append("reason: %s" % doc["reason"])
    else:
        lines.append("strategy: %s" % doc["strategy"])
        lines.append("ranking function (%s):" % doc["ranking"]["kind"])
        lines.extend("  " + line for line in doc["_ranking_text"])
        lines.append("supporting invariants:")
        if not doc["invariants"]:
            lines.append("  (none)")
        for inv in doc["invariants"]:
            lines.append("  %s%s" % (inv["text"], "  (trivial)" if inv["trivial"] else ""))
        lines.append("branch: %s" % ".".join(str(b) for b in doc["branch_id"]))
        lines.append("certificate: verified (%d subsystems)" % doc["certificate"]["subsystems"])
    d = doc["nonlinear_dimension"]
    lines.append("non-linear dimension: %d" % d["actual"])
    lines.append("predicted bound: %d (naive %d)" % (d["predicted_bound"], d["naive_bound"]))
    lines.append("linear: %s" % ("yes" if d["linear"] else "no"))
    return "\n".join(lines)


def _emit(doc, cfg: RunConfig, out):
    if cfg.output_format == "structured":
        clean = {k: v for k, v in doc.items() if not k.startswith("_")}
        out.write(json.dumps(clean, indent=2, sort_keys=True) + "\n")
    else:
        out.write(_human(doc) + "\n")


def try_all_templates(k: int) -> List[str]:
    specs = ["affine"]
    for kind in ("phase", "lex", "piece"):
        specs.extend("%s:%d" % (kind, j) for j in range(2, k + 1))
    return specs


def cmd_synthesize(cfg: RunConfig, out=None, argument_path: Optional[str] = None) -> int:
    out = out or sys.stdout
    P = _load(cfg)
    specs = try_all_templates(cfg.try_all) if cfg.try_all else [cfg.template]
    last = None
    for spec in specs:
        T, S, res, arg = _attempt(P, cfg, spec)
        doc = _report(P, cfg, T, S, res, arg)
        if arg is not None:
            doc["_ranking_text"] = describe_ranking(arg.ranking, P.varspace)
        last = doc
        if arg is not None:
            break
    _emit(last, cfg, out)
    if argument_path and "argument" in last:
        with open(argument_path, "w") as fh:
            fh.write(json.dumps(last["argument"], indent=2, sort_keys=True) + "\n")
    return EXIT_OK if last["status"] == "TERMINATING" else EXIT_NOT_PROVEN


# -- other commands -----------------------------------------------------------

def cmd_check(cfg: RunConfig, argument_path: str, out=None) -> int:
    out = out or sys.stdout
    P = _load(cfg)
    try:
        arg = loads_argument(_read(argument_path))
    except ValueError as e:
        raise InputError(str(e)) from None
    try:
        verdict = verify_certificate(P, arg)
    except ShapeMismatch as e:
        out.write("INVALID: %s\n" % e)
        return EXIT_NOT_PROVEN
    except ValueError as e:
        raise InputError("malformed argument: %s" % e) from None
    if verdict:
        out.write("VALID\n")
        return EXIT_OK
    out.write("INVALID: %s\n" % verdict.reason)
    return EXIT_NOT_PROVEN


def cmd_normalize(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    P = _load(cfg)
    out.write(render_program(P) + "\n")
    return EXIT_OK


def cmd_emit_smt(cfg: RunConfig, output: Optional[str], out=None) -> int:
    out = out or sys.stdout
    P = _load(cfg)
    T, S = _system(P, cfg, cfg.template)
    script = emit_smtlib(S)
    d = _dims(P, T, S, cfg)
    summary = ["non-linear dimension: %d" % d["actual"],
               "predicted bound: %d (naive %d)" % (d["predicted_bound"], d["naive_bound"]),
               "linear: %s" % ("yes" if d["linear"] else "no")]
    if output:
        try:
            with open(output, "w") as fh:
                fh.write(script)
        except OSError as e:
            raise InputError("cannot write %s: %s" % (output, e.strerror or e)) from None
        out.write("wrote %s\n" % output)
        out.write("\n".join(summary) + "\n")
    else:
        out.write("".join("; %s\n" % line for line in summary))
        out.write(script)
    return EXIT_OK


def _parse_start(text: Optional[str], varspace: Sequence[str]):
    if text is None:
        return None
    out = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or name not in varspace:
            raise InputError("bad --start entry %r" % part)
        try:
            out[name] = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError("bad value in --start entry %r" % part) from None
    missing = [v for v in varspace if v not in out]
    if missing:
        raise InputError("--start misses %s" % ", ".join(missing))
    return out


def cmd_execute(cfg: RunConfig, steps: int, start: Optional[str], out=None) -> int:
    out = out or sys.stdout
    P = _load(cfg)
    if steps < 0:
        raise InputError("--steps must be non-negative")
    tr = sample_execution(P, steps, cfg.seed, _parse_start(start, P.varspace))
    if not tr.states:
        out.write("no execution\n")
        return EXIT_OK
    if cfg.output_format == "structured":
        out.write(json.dumps({"states": [{v: _frac(x[v]) for v in P.varspace}
                                         for x in tr.states],
                              "length": len(tr.states), "ended": tr.ended,
                              "stem_ok": tr.stem_ok, "steps_ok": list(tr.steps_ok)},
                             indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    for i, x in enumerate(tr.states):
        out.write("s%d: %s\n" % (i, ", ".join("%s = %s" % (v, x[v]) for v in P.varspace)))
    out.write("length: %d\n" % len(tr.states))
    out.write("ended: %s\n" % tr.ended)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _common(p):
    p.add_argument("program", help="lasso program file")
    p.add_argument("--dnf-cap", type=int, default=DEFAULT_DNF_CAP,
                   help="largest allowed number of disjuncts (default %(default)s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("human", "structured"), default="human")


def _synthesis(p):
    p.add_argument("--template", default="affine",
                   help="affine, phase:k, piece:k or lex:k (default affine)")
    p.add_argument("--invariants", type=int, default=1, help="invariant slots (default 1)")
    p.add_argument("--nondecreasing", action="store_true",
                   help="restrict invariants to non-decreasing ones")
    p.add_argument("--strict-invariant", type=int, action="append", metavar="SLOT",
                   help="make invariant SLOT strict (repeatable)")
    p.add_argument("--solver", default=None,
                   help="comma-separated cascade of internal, chi, smt[:command]"
                        " (default internal,chi,smt)")
    p.add_argument("--timeout", type=float, default=60.0, help="external solver timeout (s)")
    p.add_argument("--chi-depth", type=int, default=1)
    p.add_argument("--branch-cap", type=int, default=2 ** 16)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, "%s: error: %s\n" % (self.prog, message))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lassorank",
                     description="Ranking functions and supporting invariants for "
                                 "linear lasso programs.")
    parser.add_argument("--version", action="version", version="lassorank " + __version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", help="search for a verified termination argument")
    _common(p)
    _synthesis(p)
    p.add_argument("--try-all", type=int, metavar="K",
                   help="try affine, phase:2..K, lex:2..K, piece:2..K in turn")
    p.add_argument("--save-argument", metavar="FILE",
                   help="write the argument document for 'check'")

    p = sub.add_parser("check", help="re-verify a saved argument against a program")
    _common(p)
    p.add_argument("argument", help="argument document (JSON)")

    p = sub.add_parser("normalize", help="print the disjunctive normal form")
    _common(p)

    p = sub.add_parser("emit-smt", help="write the SMT-LIB constraint script")
    _common(p)
    _synthesis(p)
    p.add_argument("-o", "--output", help="script file (default: standard output)")

    p = sub.add_parser("execute", help="sample an execution")
    _common(p)
    p.add_argument("--steps", type=int, default=20, help="step cap (default 20)")
    p.add_argument("--start", help="forced start state, e.g. q=2,y=1")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _run_config(args)
        if args.command == "synthesize":
            return cmd_synthesize(cfg, argument_path=args.save_argument)
        if args.command == "check":
            return cmd_check(cfg, args.argument)
        if args.command == "normalize":
            return cmd_normalize(cfg)
        if args.command == "emit-smt":
            return cmd_emit_smt(cfg, args.output)
        return cmd_execute(cfg, args.steps, args.start)
    except InputError as e:
        sys.stderr.write("error: %s\n" % e)
        return EXIT_INPUT
    except (BranchCapExceeded, SolverDefect) as e:
        sys.stderr.write("solver failure: %s\n" % e)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
