"""Command-line front end.

Subcommands: solve, check-hopf, classify, lambda, prelie-verify, build,
selftest.  Input is a system file, a family file (header 'family ...'), '-'
for stdin, or the same text inline.  Exit status: 0 on success (Hopf,
classified, suites green), 1 on a negative verdict (not Hopf, unclassifiable,
inconsistent table, failed suite), 2 on input errors.

The structured output format is line oriented: a 'cdse-report 1' header, then
one record per line, fields separated by ' | ' where a field may contain
spaces.  Ordering is deterministic, so reports are diff-stable.
"""

import argparse
import itertools
import os
import random
import sys
from fractions import Fraction

from .families import (Case1, Case2, Unclassifiable, classify_single,
                       is_family_text, parse_family_text)
from .hopf import coproduct, forest_coproduct, graft_operator, pairing
from .linear import ForestSum, TensorSum, WordSum, forest_sum_text, tensor
from .prelie import (circ, circ_recursive, fdb_circ, fdb_circ_recursive,
                     fdb_image, fdb_solution, fdb_solution_recursive, star)
from .series import EvaluationError, ParseError
from .solver import (INCONSISTENT, NotHopfCompatible, SystemFormatError,
                     check_hopf, extract_lambda, parse_system_text, solve,
                     solve_oracle, system_text)
from .trees import (Decoration, TreeSyntaxError, forest_text,
                    forests_of_degree, trees_of_degree)


class InputProblem(ValueError):
    pass


_INPUT_ERRORS = (InputProblem, SystemFormatError, NotHopfCompatible,
                 ParseError, EvaluationError, TreeSyntaxError, OSError)


def _read_input(arg: str) -> str:
    if arg == "-":
        return sys.stdin.read()
    if os.path.exists(arg):
        with open(arg, "r", encoding="utf-8") as fh:
            return fh.read()
    stripped = arg.lstrip()
    if "\n" in arg or stripped.startswith(("family", "vars")):
        return arg
    raise InputProblem(f"no such file: {arg}")


def _load_system(arg: str, strict: bool):
    text = _read_input(arg)
    if is_family_text(text):
        return parse_family_text(text, strict=strict)
    return parse_system_text(text, strict=strict)


def _emit(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _frac(x) -> str:
    return str(x)


# ----------------------------------------------------------------- commands

def _cmd_solve(args):
    S = _load_system(args.input, args.strict)
    sol = solve(S, args.order)
    lines = []
    if args.format == "structured":
        lines += ["cdse-report 1", "command solve",
                  f"order {args.order}", f"vars {S.nvars}"]
        for (i, n), comp in sol.generators():
            lines.append(f"component {i} {n} | {forest_sum_text(comp)}")
        lines.append("status ok")
    else:
        for (i, n), comp in sol.generators():
            lines.append(f"x_{i}({n}) = {forest_sum_text(comp)}")
        quiet = [i for i in range(1, S.nvars + 1)
                 if not any(ii == i for (ii, _), _ in sol.generators())]
        for i in quiet:
            lines.append(f"x_{i} = 0 up to order {args.order}")
    _emit(lines, args.output)
    return 0


def _cmd_check_hopf(args):
    S = _load_system(args.input, args.strict)
    rep = check_hopf(S, args.order)
    lines = []
    if args.format == "structured":
        lines += ["cdse-report 1", "command check-hopf",
                  f"order {rep.order}", f"checks {rep.checks}",
                  f"verdict {'hopf' if rep.is_hopf else 'not-hopf'}"]
        for fail in rep.failures:
            lines.append(f"failure eq {fail.eq} degree {fail.degree} "
                         f"left {fail.left_degree} pairing {fail.pairing}")
            for (a, b) in sorted(fail.witness, key=lambda fg: (fg[0].key,
                                                               fg[1].key)):
                lines.append(f"witness {fail.witness[(a, b)]} | "
                             f"{forest_text(a)} | {forest_text(b)}")
    else:
        if rep.is_hopf:
            lines.append(f"Hopf to order {rep.order}: all {rep.checks} "
                         f"coproduct slices stayed in the solution span")
        else:
            lines.append(f"not Hopf: {len(rep.failures)} of {rep.checks} "
                         f"slices escaped (order {rep.order})")
            for fail in rep.failures:
                lines.append("  " + fail.describe())
                for (a, b) in sorted(fail.witness, key=lambda fg: (fg[0].key,
                                                                   fg[1].key)):
                    lines.append(f"    witness term {fail.witness[(a, b)]} * "
                                 f"{forest_text(a)} (x) {forest_text(b)}")
    _emit(lines, args.output)
    return 0 if rep.is_hopf else 1


def _cmd_classify(args):
    if args.order < 3:
        raise InputProblem("classify needs -N at least 3")
    S = _load_system(args.input, args.strict)
    if S.nvars != 1:
        raise InputProblem("classify handles single-equation systems")
    J = S.degrees(1, args.order)
    if not J:
        raise InputProblem("equation 1 has no operators")
    series = {q: S.op_series(1, q, args.order) for q in J}
    verdict = classify_single(J, series, args.order)
    lines = []
    structured = args.format == "structured"
    if structured:
        lines += ["cdse-report 1", "command classify"]
    if isinstance(verdict, Case1):
        if structured:
            lines += ["verdict case1", f"lambda {verdict.lam}",
                      f"mu {verdict.mu}",
                      ("nonconstant "
                       + " ".join(map(str, sorted(verdict.nonconstant)))).rstrip(),
                      ("constant "
                       + " ".join(map(str, sorted(verdict.constant)))).rstrip()]
            if verdict.as_case2:
                m, alpha = verdict.as_case2
                lines.append(f"as-case2 m {m} alpha {alpha}")
        else:
            lines.append(f"first kind: lambda = {verdict.lam}, "
                         f"mu = {verdict.mu}")
            lines.append("  nonconstant degrees: "
                         + (",".join(map(str, sorted(verdict.nonconstant))) or "(none)"))
            lines.append("  constant degrees: "
                         + (",".join(map(str, sorted(verdict.constant))) or "(none)"))
            if verdict.as_case2:
                m, alpha = verdict.as_case2
                lines.append(f"  also second kind with m = {m}, "
                             f"alpha = {alpha}")
        code = 0
    elif isinstance(verdict, Case2):
        if structured:
            lines += ["verdict case2", f"m {verdict.modulus}",
                      f"alpha {verdict.alpha}"]
        else:
            lines.append(f"second kind: m = {verdict.modulus}, "
                         f"alpha = {verdict.alpha}")
        code = 0
    else:
        if structured:
            lines += ["verdict unclassifiable", f"reason {verdict.reason}"]
        else:
            lines.append(f"unclassifiable: {verdict.reason}")
        code = 1
    _emit(lines, args.output)
    return code


def _cmd_lambda(args):
    S = _load_system(args.input, args.strict)
    sol = solve(S, args.order)
    table = extract_lambda(S, sol, args.order)
    lines = []
    structured = args.format == "structured"
    if structured:
        lines += ["cdse-report 1", "command lambda", f"order {table.order}"]
    else:
        lines.append(f"lambda table to order {table.order}")
    bad = False
    cuts = sorted({(i, key) for (i, key, _) in table.entries})
    for (i, key, n), val in table.items():
        if val == INCONSISTENT:
            bad = True
        if structured:
            lines.append(f"entry {i} | {key[0]} {key[1]} | {n} | {val}")
        else:
            lines.append(f"  i={i} cut=({key[0]},{key[1]}) n={n} : {val}")
    for i, (j, q) in cuts:
        fit = table.affine_fit(i, j, q)
        if fit is None:
            continue
        A, B = fit
        if structured:
            lines.append(f"fit {i} | {j} {q} | {A} | {B}")
        else:
            lines.append(f"  fit i={i} cut=({j},{q}) : {A} + {B}*(n-1)")
    holds, exceptions = table.q_independence()
    if structured:
        lines.append(f"qindep {'holds' if holds else 'fails'}")
        lines.append(f"status {'fail' if bad else 'ok'}")
    else:
        lines.append("q-independence: " + ("holds" if holds else
                                           f"fails at {exceptions}"))
        if bad:
            lines.append("inconsistent entries present: system is not Hopf")
    _emit(lines, args.output)
    return 1 if bad else 0


def _cmd_build(args):
    S = _load_system(args.input, args.strict)
    _emit([system_text(S).rstrip("\n")], args.output)
    return 0


# ------------------------------------------------------------ verify suites

_LABELS = (Decoration(1, 1), Decoration(2, 1))


def _sampled(items, cap, seed):
    items = list(items)
    if len(items) <= cap:
        return items
    return random.Random(seed).sample(items, cap)


def _suite_lines(results, fmt):
    lines = []
    ok = True
    for name, passed, checks in results:
        ok = ok and passed
        if fmt == "structured":
            lines.append(f"suite {name} | {'pass' if passed else 'fail'} | "
                         f"{checks}")
        else:
            lines.append(f"{'PASS' if passed else 'FAIL'} {name} "
                         f"({checks} checks)")
    if fmt == "structured":
        lines.append(f"status {'ok' if ok else 'fail'}")
    return lines, ok


def _cmd_prelie_verify(args):
    N = args.order
    results = []

    trees = []
    for d in range(1, min(N, 5) + 1):
        trees += [(t, d) for t in trees_of_degree(_LABELS, d)]

    triples = [(a, b, c)
               for a, da in trees for b, db in trees for c, dc in trees
               if da + db + dc <= min(N + 2, 5)]
    triples = _sampled(triples, 600, args.seed)
    bad = 0
    for a, b, c in triples:
        x = ForestSum.of_tree(a)
        y = ForestSum.of_tree(b)
        z = ForestSum.of_tree(c)
        assoc_xyz = circ(circ(x, y), z) - circ(x, circ(y, z))
        assoc_yxz = circ(circ(y, x), z) - circ(y, circ(x, z))
        if assoc_xyz != assoc_yxz:
            bad += 1
    results.append(("pre-lie-identity", bad == 0, len(triples)))

    pairs = []
    for d in range(2, min(N + 1, 5) + 1):
        for k in range(1, d):
            for F in forests_of_degree(_LABELS, k):
                for G in forests_of_degree(_LABELS, d - k):
                    pairs.append((F, G))
    pairs = _sampled(pairs, 400, args.seed)
    bad = sum(1 for F, G in pairs
              if circ(ForestSum.term(F), ForestSum.term(G))
              != circ_recursive(ForestSum.term(F), ForestSum.term(G)))
    results.append(("grafting-closed-vs-recursive", bad == 0, len(pairs)))

    checks = 0
    bad = 0
    for d in range(2, min(N, 4) + 1):
        for k in range(1, d):
            lefts = forests_of_degree(_LABELS, k)
            rights = forests_of_degree(_LABELS, d - k)
            for H in forests_of_degree(_LABELS, d):
                dH = forest_coproduct(H)
                for F in lefts:
                    for G in rights:
                        got = pairing(star(ForestSum.term(F),
                                           ForestSum.term(G)),
                                      ForestSum.term(H))
                        want = sum((c * pairing(ForestSum.term(F),
                                                ForestSum.term(a))
                                    * pairing(ForestSum.term(G),
                                              ForestSum.term(b))
                                    for (a, b), c in dH.terms.items()),
                                   Fraction(0))
                        checks += 1
                        if got != want:
                            bad += 1
    results.append(("composition-coproduct-duality", bad == 0, checks))

    checks = 0
    bad = 0
    for lam, mu in ((Fraction(1), Fraction(-1)), (Fraction(0), Fraction(2)),
                    (Fraction(3), Fraction(3))):
        for F, G in pairs:
            x = ForestSum.term(F)
            y = ForestSum.term(G)
            left = fdb_image(lam, mu, circ(x, y))
            right = fdb_circ(lam, mu, fdb_image(lam, mu, x),
                             fdb_image(lam, mu, y))
            checks += 1
            if left != right:
                bad += 1
    results.append(("tree-to-word-morphism", bad == 0, checks))

    checks = 0
    bad = 0
    words = []
    for total in range(1, min(N + 2, 6) + 1):
        for k in range(1, total + 1):
            for w in itertools.combinations_with_replacement(
                    range(1, total + 1), k):
                if sum(w) == total:
                    words.append(w)
    for lam, mu in ((Fraction(1), Fraction(-1)), (Fraction(0), Fraction(2)),
                    (Fraction(3), Fraction(3))):
        for wa in words:
            for wb in words:
                if sum(wa) + sum(wb) > min(N + 2, 6):
                    continue
                a = WordSum.term(wa)
                b = WordSum.term(wb)
                checks += 1
                if fdb_circ(lam, mu, a, b) != fdb_circ_recursive(lam, mu, a, b):
                    bad += 1
    results.append(("word-closed-vs-recursive", bad == 0, checks))

    checks = 0
    bad = 0
    for lam, mu in ((Fraction(1), Fraction(-1)), (Fraction(2), Fraction(3))):
        for n in range(1, min(N + 1, 5) + 1):
            checks += 1
            if fdb_solution(lam, mu, {1}, n) != fdb_solution_recursive(
                    lam, mu, {1}, n):
                bad += 1
    results.append(("weighted-solution-two-routes", bad == 0, checks))

    lines, ok = _suite_lines(results, args.format)
    if args.format == "structured":
        lines = ["cdse-report 1", "command prelie-verify",
                 f"order {N}", f"seed {args.seed}"] + lines
    _emit(lines, args.output)
    return 0 if ok else 1


def _triple_coproduct(delta, side):
    out = {}
    for (a, b), c in delta.terms.items():
        inner = forest_coproduct(a if side == 0 else b)
        for (u, v), c2 in inner.terms.items():
            key = (u, v, b) if side == 0 else (a, u, v)
            acc = out.get(key, Fraction(0)) + c * c2
            if acc:
                out[key] = acc
            else:
                del out[key]
    return out


def _cmd_selftest(args):
    N = args.order
    results = []

    forests = []
    for d in range(1, min(N, 3) + 1):
        forests += list(forests_of_degree(_LABELS, d))
    extra = _sampled(forests_of_degree(_LABELS, min(N, 3) + 1), 12, args.seed)
    pool = forests + list(extra)

    bad = 0
    for f in pool:
        delta = forest_coproduct(f)
        if _triple_coproduct(delta, 0) != _triple_coproduct(delta, 1):
            bad += 1
    results.append(("coassociativity", bad == 0, len(pool)))

    bad = 0
    for f in pool:
        delta = forest_coproduct(f)
        left = {}
        right = {}
        for (a, b), c in delta.terms.items():
            if not a.trees:
                left[b] = left.get(b, Fraction(0)) + c
            if not b.trees:
                right[a] = right.get(a, Fraction(0)) + c
        want = {f: Fraction(1)}
        if ({k: v for k, v in left.items() if v} != want
                or {k: v for k, v in right.items() if v} != want):
            bad += 1
    results.append(("counit", bad == 0, len(pool)))

    checks = 0
    bad = 0
    for f in forests:
        for g in forests:
            if f.degree + g.degree > min(N, 3) + 1:
                continue
            checks += 1
            if forest_coproduct(f * g) != (TensorSum(forest_coproduct(f).terms)
                                           * forest_coproduct(g)):
                bad += 1
    results.append(("coproduct-multiplicativity", bad == 0, checks))

    bad = 0
    dec = Decoration(1, 1)
    for f in pool:
        x = ForestSum.term(f)
        lifted = graft_operator(dec, x)
        lhs = coproduct(lifted)
        rhs = tensor(lifted, ForestSum.one())
        for (a, b), c in coproduct(x).terms.items():
            for g, c2 in graft_operator(dec, ForestSum.term(b)).terms.items():
                rhs = rhs + TensorSum.term((a, g), c * c2)
        if lhs != rhs:
            bad += 1
    results.append(("cocycle-identity", bad == 0, len(pool)))

    bad = 0
    for f in pool:
        for (a, b), _ in forest_coproduct(f).terms.items():
            if a.degree + b.degree != f.degree:
                bad += 1
    results.append(("coproduct-grading", bad == 0, len(pool)))

    case1 = parse_system_text("vars 1\neq 1\n  op 1 : (1 + h1)^2\n")
    sol = solve(case1, 4)
    oracle = solve_oracle(case1, 4)
    same = all(sol.component(1, n) == oracle.component(1, n)
               for n in range(1, 5))
    results.append(("solver-two-routes", same, 4))

    rep = check_hopf(case1, 4)
    results.append(("hopf-smoke", rep.is_hopf, rep.checks))

    lines, ok = _suite_lines(results, args.format)
    if args.format == "structured":
        lines = ["cdse-report 1", "command selftest",
                 f"order {N}", f"seed {args.seed}"] + lines
    _emit(lines, args.output)
    return 0 if ok else 1


# -------------------------------------------------------------------- main

def _add_common(p, default_order, with_input=True):
    if with_input:
        p.add_argument("input", help="system/family file, '-', or inline text")
    p.add_argument("-N", dest="order", type=int, default=default_order,
                   metavar="N", help=f"degree bound (default {default_order})")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true",
                      default=True, help="reject dubious input (default)")
    mode.add_argument("--permissive", dest="strict", action="store_false",
                      help="keep dubious operators for inspection")
    p.add_argument("--format", choices=("text", "structured"), default="text",
                   help="report style (default text)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for sampled checks (default 0)")
    p.add_argument("-o", dest="output", metavar="PATH", default=None,
                   help="write the report to PATH instead of stdout")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cdse",
        description="exact engine for combinatorial Dyson-Schwinger systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="print solution components x_i(n)")
    _add_common(p, 4)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("check-hopf",
                       help="test coproduct closure of the solution span")
    _add_common(p, 4)
    p.set_defaults(fn=_cmd_check_hopf)

    p = sub.add_parser("classify",
                       help="classify a single-equation system")
    _add_common(p, 6)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("lambda",
                       help="extract structure constants and affine fits")
    _add_common(p, 5)
    p.set_defaults(fn=_cmd_lambda)

    p = sub.add_parser("prelie-verify",
                       help="run the grafting/duality property suites")
    _add_common(p, 4, with_input=False)
    p.set_defaults(fn=_cmd_prelie_verify)

    p = sub.add_parser("build",
                       help="expand a family description to system text")
    _add_common(p, 4)
    p.set_defaults(fn=_cmd_build)

    p = sub.add_parser("selftest", help="run the structural invariant suites")
    _add_common(p, 3, with_input=False)
    p.set_defaults(fn=_cmd_selftest)

    args = parser.parse_args(argv)
    if args.order < 1:
        print("error: -N must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
