"""Command-line driver: every library operation over a definition file.

Exit codes: 0 verified/true, 1 refuted with a printed witness, 2 usage
or parse error, 3 window-inconclusive.  All output is deterministic;
--json switches to a stable JSON rendering with rationals as "num/den"
strings and forms as coefficient maps keyed by 1-based index tuples.
The ADF_WINDOW environment variable ("degree" or "degree,laurent")
overrides the default truncation window.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .cech import (atiyah_cocycle, coboundary_test, glue_sridharan,
                   line_bundle_cech_dims, make_p1_cover, verify_cocycle,
                   verify_lambda_module)
from .connections import (chern_trace_form, curvature, is_flat,
                          obstruction_trace_check)
from .core import StructureError, verify_axioms
from .forms import LForm, TruncationWindow, exactness_solve, truncated_cohomology
from .matched import (MatchedPair, total_cohomology_compare, twilled_sum,
                      verify_matched)
from .pbw import confluence_check
from .parser import Definitions, ParseError, parse, parse_word, render_form
from .rings import RingError

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_USAGE = 2
EXIT_WINDOW = 3


def frac_str(x: Fraction) -> str:
    return "%d/%d" % (x.numerator, x.denominator)


def form_json(form: LForm) -> dict:
    return {
        "degree": form.degree,
        "coefficients": {
            ",".join(str(t + 1) for t in idx): str(val)
            for idx, val in sorted(form.coeffs.items())
        },
    }


def matrix_json(mat) -> list:
    return [[str(x) for x in row] for row in mat]


class Output:
    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.lines = []
        self.payload = {}

    def line(self, text: str):
        self.lines.append(text)

    def set(self, key: str, value):
        self.payload[key] = value

    def emit(self, code: int) -> int:
        if self.as_json:
            self.payload["exit"] = code
            sys.stdout.write(json.dumps(self.payload, sort_keys=True,
                                        separators=(", ", ": ")) + "\n")
        else:
            for line in self.lines:
                sys.stdout.write(line + "\n")
        return code


def parse_window(spec: str | None) -> TruncationWindow:
    if not spec:
        return TruncationWindow()
    parts = spec.split(",")
    degree = int(parts[0])
    laurent = int(parts[1]) if len(parts) > 1 else 12
    return TruncationWindow(degree, laurent)


def parse_degrees(spec: str) -> list:
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in spec.split(",")]


def load(path: str, out: Output) -> Definitions | None:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as err:
        out.line("error: %s" % err)
        out.set("error", str(err))
        return None
    defs = parse(text)
    if not defs.ok():
        for diag in defs.diagnostics:
            out.line(str(diag))
        out.set("diagnostics", [str(d) for d in defs.diagnostics])
        return None
    return defs


def need(defs: Definitions, name: str, kind: str, out: Output):
    if name not in defs.objects:
        out.line("error: undefined name %r" % name)
        out.set("error", "undefined name %r" % name)
        return None
    if defs.kinds[name] != kind:
        out.line("error: %r is a %s, expected a %s"
                 % (name, defs.kinds[name], kind))
        out.set("error", "wrong kind for %r" % name)
        return None
    return defs.objects[name]


def cmd_verify(args, defs: Definitions, out: Output, window) -> int:
    name = args.name
    if name not in defs.objects:
        out.line("error: undefined name %r" % name)
        out.set("error", "undefined name %r" % name)
        return out.emit(EXIT_USAGE)
    kind = defs.kinds[name]
    obj = defs.objects[name]
    if kind == "algebroid":
        v = verify_axioms(obj)
        out.set("kind", "algebroid")
        if v.verified:
            out.line("verified: %s satisfies the Lie algebroid axioms" % name)
            out.set("verified", True)
            return out.emit(EXIT_OK)
        out.line("refuted: %s" % v.witness.describe(obj))
        out.set("verified", False)
        out.set("witness", v.witness.describe(obj))
        return out.emit(EXIT_REFUTED)
    if kind == "matched":
        return _matched_verdict(obj, out, name)
    if kind == "cocycle":
        rep = verify_cocycle(obj.cover, obj)
        out.set("kind", "cocycle")
        for note in rep.degenerate:
            out.line("degenerate: %s" % note)
        out.set("degenerate", rep.degenerate)
        if rep.verified:
            out.line("verified: %s satisfies the cocycle equations" % name)
            out.set("verified", True)
            return out.emit(EXIT_OK)
        for f in rep.failures:
            out.line("refuted: %s" % f)
        out.set("verified", False)
        out.set("failures", rep.failures)
        return out.emit(EXIT_REFUTED)
    if kind == "cover":
        try:
            obj.verify()
        except StructureError as err:
            out.line("refuted: %s" % err)
            out.set("verified", False)
            return out.emit(EXIT_REFUTED)
        out.line("verified: %s is a consistent cover" % name)
        out.set("verified", True)
        return out.emit(EXIT_OK)
    out.line("error: cannot verify a %s" % kind)
    out.set("error", "cannot verify a %s" % kind)
    return out.emit(EXIT_USAGE)


def _matched_verdict(pair: MatchedPair, out: Output, name: str) -> int:
    out.set("kind", "matched")
    try:
        v = verify_matched(pair)
    except StructureError as err:
        out.line("refuted: %s" % err)
        out.set("verified", False)
        return out.emit(EXIT_REFUTED)
    if v.verified:
        out.line("verified: %s is a matched pair" % name)
        out.set("verified", True)
        return out.emit(EXIT_OK)
    out.line("refuted: equation %d fails at indices %s"
             % (v.witness.equation, tuple(t + 1 for t in v.witness.indices)))
    out.set("verified", False)
    out.set("equation", v.witness.equation)
    return out.emit(EXIT_REFUTED)


def cmd_cohomology(args, defs, out, window) -> int:
    alg = need(defs, args.name, "algebroid", out)
    if alg is None:
        return out.emit(EXIT_USAGE)
    degrees = parse_degrees(args.degrees)
    rep = truncated_cohomology(alg, degrees, window)
    stable = True
    dims = {}
    for p in sorted(rep.degrees):
        entry = rep.degrees[p]
        flag = "stable" if entry.stable else "window-unstable"
        out.line("H^%d: dim %d (kernel %d, image %d) [%s]"
                 % (p, entry.cohomology_dim, entry.kernel_dim,
                    entry.image_dim, flag))
        dims[str(p)] = {"dim": entry.cohomology_dim,
                        "kernel": entry.kernel_dim,
                        "image": entry.image_dim,
                        "stable": entry.stable}
        stable = stable and entry.stable
    out.set("cohomology", dims)
    out.set("window", [window.degree, window.laurent])
    return out.emit(EXIT_OK if stable else EXIT_WINDOW)


def cmd_d(args, defs, out, window) -> int:
    form = need(defs, args.name, "form", out)
    if form is None:
        return out.emit(EXIT_USAGE)
    result = form.d()
    out.line("d %s = %s" % (args.name, render_form(result)))
    out.set("differential", form_json(result))
    return out.emit(EXIT_OK)


def cmd_exact(args, defs, out, window) -> int:
    form = need(defs, args.name, "form", out)
    if form is None:
        return out.emit(EXIT_USAGE)
    res = exactness_solve(form, window)
    if res.status == "primitive":
        out.line("primitive: %s" % render_form(res.primitive))
        out.set("status", "primitive")
        out.set("primitive", form_json(res.primitive))
        return out.emit(EXIT_OK)
    out.set("status", res.status)
    if res.certified:
        out.line("obstructed: residue certificate (%s)" % res.residue_witness)
        out.set("certified", True)
        out.set("residue", res.residue_witness)
        return out.emit(EXIT_REFUTED)
    out.line("no primitive in window (degree %d, laurent %d); inconclusive"
             % (window.degree, window.laurent))
    out.set("certified", False)
    return out.emit(EXIT_WINDOW)


def cmd_curvature(args, defs, out, window) -> int:
    conn = need(defs, args.name, "connection", out)
    if conn is None:
        return out.emit(EXIT_USAGE)
    f = curvature(conn)
    names = conn.algebroid.basis_names
    payload = {}
    if not f.entries:
        out.line("curvature: 0")
    for (i, j), mat in sorted(f.entries.items()):
        out.line("F(%s,%s) = %s"
                 % (names[i], names[j],
                    "[" + ", ".join("[" + ", ".join(str(x) for x in row) + "]"
                                    for row in mat) + "]"))
        payload["%d,%d" % (i + 1, j + 1)] = matrix_json(mat)
    out.set("curvature", payload)
    return out.emit(EXIT_OK)


def cmd_flat(args, defs, out, window) -> int:
    conn = need(defs, args.name, "connection", out)
    if conn is None:
        return out.emit(EXIT_USAGE)
    rep = is_flat(conn)
    if rep.flat:
        out.line("flat")
        out.set("flat", True)
        return out.emit(EXIT_OK)
    i, j, a, b, val = rep.witness
    names = conn.algebroid.basis_names
    out.line("not flat: F(%s,%s)[%d,%d] = %s" % (names[i], names[j], a, b, val))
    out.set("flat", False)
    out.set("witness", {"pair": [i + 1, j + 1], "entry": [a, b],
                        "value": str(val)})
    return out.emit(EXIT_REFUTED)


def cmd_chern(args, defs, out, window) -> int:
    conn = need(defs, args.name, "connection", out)
    if conn is None:
        return out.emit(EXIT_USAGE)
    form = chern_trace_form(conn, args.k)
    out.line("chern trace (k=%d): %s" % (args.k, render_form(form)))
    out.set("k", args.k)
    out.set("form", form_json(form))
    return out.emit(EXIT_OK)


def cmd_obstruction(args, defs, out, window) -> int:
    conn = need(defs, args.connection, "connection", out)
    form = need(defs, args.form, "form", out) if conn is not None else None
    if conn is None or form is None:
        return out.emit(EXIT_USAGE)
    rep = obstruction_trace_check(conn, form, window)
    out.set("status", rep.status)
    if rep.status == "consistent":
        out.line("consistent: trace form is exact; primitive %s"
                 % render_form(rep.primitive))
        out.set("primitive", form_json(rep.primitive))
        return out.emit(EXIT_OK)
    if rep.status == "obstructed":
        out.line("obstructed: residue certificate (%s)"
                 % rep.detail.residue_witness)
        out.set("residue", rep.detail.residue_witness)
        return out.emit(EXIT_REFUTED)
    out.line("obstructed in window (degree %d, laurent %d); inconclusive"
             % (window.degree, window.laurent))
    return out.emit(EXIT_WINDOW)


def cmd_matched(args, defs, out, window) -> int:
    pair = need(defs, args.name, "matched", out)
    if pair is None:
        return out.emit(EXIT_USAGE)
    return _matched_verdict(pair, out, args.name)


def cmd_twilled(args, defs, out, window) -> int:
    pair = need(defs, args.name, "matched", out)
    if pair is None:
        return out.emit(EXIT_USAGE)
    try:
        tw = twilled_sum(pair)
    except StructureError as err:
        out.line("refuted: %s" % err)
        out.set("error", str(err))
        return out.emit(EXIT_REFUTED)
    out.line("twilled sum: rank %d over %d chart variables"
             % (tw.rank, len(tw.base.variables)))
    brackets = {}
    for (i, j), comps in sorted(tw.structure.items()):
        rendered = " + ".join("(%s)*%s" % (c, tw.basis_names[k])
                              for k, c in enumerate(comps) if not c.is_zero())
        out.line("[%s, %s] = %s" % (tw.basis_names[i], tw.basis_names[j],
                                    rendered))
        brackets["%d,%d" % (i + 1, j + 1)] = rendered
    out.set("rank", tw.rank)
    out.set("brackets", brackets)
    return out.emit(EXIT_OK)


def cmd_compare_total(args, defs, out, window) -> int:
    pair = need(defs, args.name, "matched", out)
    if pair is None:
        return out.emit(EXIT_USAGE)
    degrees = parse_degrees(args.degrees)
    rep = total_cohomology_compare(pair, degrees, window)
    for n in sorted(rep.total_dims):
        out.line("degree %d: total %d, twilled %d"
                 % (n, rep.total_dims[n], rep.twilled_dims[n]))
    out.set("total", {str(n): d for n, d in rep.total_dims.items()})
    out.set("twilled", {str(n): d for n, d in rep.twilled_dims.items()})
    if rep.agree:
        out.line("agree")
        out.set("agree", True)
        return out.emit(EXIT_OK)
    out.line("disagree")
    out.set("agree", False)
    return out.emit(EXIT_REFUTED)


def cmd_relations(args, defs, out, window) -> int:
    alg = need(defs, args.algebroid, "algebroid", out)
    if alg is None:
        return out.emit(EXIT_USAGE)
    twist = None
    if args.form is not None:
        twist = need(defs, args.form, "form", out)
        if twist is None:
            return EXIT_USAGE
    try:
        from .pbw import build_relations
        system = build_relations(alg, twist)
    except StructureError as err:
        out.line("refuted: %s" % err)
        out.set("error", str(err))
        return out.emit(EXIT_REFUTED)
    names = alg.basis_names
    rules = []
    for v in alg.base.variables:
        for i in range(alg.rank):
            action = alg.anchor_apply(alg.basis_section(i), alg.base.var(v))
            rule = "%s*%s -> %s*%s%s" % (
                names[i], v, v, names[i],
                "" if action.is_zero() else " + (%s)" % action)
            rules.append(rule)
    for j in range(alg.rank):
        for i in range(j):
            struct = alg.structure_coefficients(j, i)
            q = system.twist.component((j, i))
            extra = []
            for k, c in enumerate(struct):
                if not c.is_zero():
                    extra.append("(%s)*%s" % (c, names[k]))
            if not q.is_zero():
                extra.append("(%s)" % q)
            rule = "%s*%s -> %s*%s%s" % (
                names[j], names[i], names[i], names[j],
                (" + " + " + ".join(extra)) if extra else "")
            rules.append(rule)
    for rule in rules:
        out.line(rule)
    out.set("rules", rules)
    return out.emit(EXIT_OK)


def cmd_normal_form(args, defs, out, window) -> int:
    system = need(defs, args.relations, "relations", out)
    if system is None:
        return out.emit(EXIT_USAGE)
    try:
        element = parse_word(args.word, system)
    except (ParseError, RingError, StructureError) as err:
        out.line("error: %s" % err)
        out.set("error", str(err))
        return out.emit(EXIT_USAGE)
    out.line("normal form: %s" % element)
    out.set("terms", {
        ",".join(str(t + 1) for t in word): str(coeff)
        for word, coeff in sorted(element.terms.items())})
    return out.emit(EXIT_OK)


def cmd_confluence(args, defs, out, window) -> int:
    system = need(defs, args.name, "relations", out)
    if system is None:
        return out.emit(EXIT_USAGE)
    rep = confluence_check(system)
    if rep is None:
        out.line("confluent: all minimal overlaps resolve")
        out.set("confluent", True)
        return out.emit(EXIT_OK)
    names = system.algebroid.basis_names
    word = "*".join(names[t] if isinstance(t, int) else "(%s)" % t
                    for t in rep.word)
    out.line("ambiguity at %s: difference %s" % (word, rep.difference))
    out.set("confluent", False)
    out.set("word", word)
    out.set("difference", str(rep.difference))
    return out.emit(EXIT_REFUTED)


def cmd_atiyah(args, defs, out, window) -> int:
    if args.k is not None:
        cover = make_p1_cover(args.algebroid or "tangent", bundle=args.k)
    elif args.cover is None:
        out.line("error: name a cover or pass --k for the built-in line")
        out.set("error", "no cover given")
        return out.emit(EXIT_USAGE)
    else:
        cover = need(defs, args.cover, "cover", out)
        if cover is None:
            return out.emit(EXIT_USAGE)
    try:
        pair = atiyah_cocycle(cover)
    except StructureError as err:
        out.line("error: %s" % err)
        out.set("error", str(err))
        return out.emit(EXIT_USAGE)
    for (a, b), form in sorted(pair.phi.items()):
        out.line("phi %d %d = %s" % (a, b, render_form(form)))
    rep = verify_cocycle(cover, pair)
    out.line("cocycle equations: %s"
             % ("verified" if rep.verified else "failed"))
    out.set("phi", {"%d,%d" % k: form_json(v) for k, v in pair.phi.items()})
    out.set("verified", rep.verified)
    return out.emit(EXIT_OK if rep.verified else EXIT_REFUTED)


def cmd_class_compare(args, defs, out, window) -> int:
    p1 = need(defs, args.first, "cocycle", out)
    p2 = need(defs, args.second, "cocycle", out) if p1 is not None else None
    if p1 is None or p2 is None:
        return out.emit(EXIT_USAGE)
    if p1.cover is not p2.cover:
        out.line("error: cocycle pairs live on different covers")
        out.set("error", "cocycle pairs live on different covers")
        return out.emit(EXIT_USAGE)
    cmp = coboundary_test(p1.cover, p1, p2, window)
    out.set("status", cmp.status)
    if cmp.status == "equivalent":
        out.line("equivalent: difference is a coboundary")
        for a in sorted(cmp.eta):
            out.line("eta %d = %s" % (a, render_form(cmp.eta[a])))
        out.set("eta", {str(a): form_json(f) for a, f in cmp.eta.items()})
        return out.emit(EXIT_OK)
    if cmp.status == "inequivalent":
        out.line("inequivalent: res = %s" % cmp.residue_value)
        out.set("residue", frac_str(cmp.residue_value))
        return out.emit(EXIT_REFUTED)
    out.line("inequivalent in window (degree %d, laurent %d); inconclusive"
             % (window.degree, window.laurent))
    return out.emit(EXIT_WINDOW)


def cmd_glue(args, defs, out, window) -> int:
    cover = need(defs, args.cover, "cover", out)
    pair = need(defs, args.pair, "cocycle", out) if cover is not None else None
    if cover is None or pair is None:
        return out.emit(EXIT_USAGE)
    rep = glue_sridharan(cover, pair)
    gens = {}
    for (a, b), gmap in sorted(rep.maps.items()):
        names = gmap.target.algebroid.basis_names
        for i in range(gmap.target.algebroid.rank):
            img = gmap.image_of_generator(i)
            out.line("g_%d%d(%s) = %s" % (a, b, names[i], img))
            gens["%d,%d:%s" % (a, b, names[i])] = str(img)
    out.set("generators", gens)
    if rep.verified:
        out.line("gluing: relations preserved")
        out.set("verified", True)
        return out.emit(EXIT_OK)
    for f in rep.failures:
        out.line("failure: %s" % f)
    out.set("verified", False)
    out.set("failures", rep.failures)
    return out.emit(EXIT_REFUTED)


def cmd_lambda_check(args, defs, out, window) -> int:
    cover = need(defs, args.cover, "cover", out)
    pair = need(defs, args.pair, "cocycle", out) if cover is not None else None
    bunch = need(defs, args.bunch, "bunch", out) if pair is not None else None
    if cover is None or pair is None or bunch is None:
        return out.emit(EXIT_USAGE)
    rep = verify_lambda_module(cover, pair, bunch)
    for note in rep.degenerate:
        out.line("degenerate: %s" % note)
    out.set("degenerate", rep.degenerate)
    if rep.verified:
        out.line("verified: bunch is a module for the cocycle pair")
        out.set("verified", True)
        return out.emit(EXIT_OK)
    for f in rep.failures:
        out.line("failure: %s" % f)
    out.set("verified", False)
    out.set("failures", rep.failures)
    return out.emit(EXIT_REFUTED)


def cmd_cech_dims(args, defs, out, window) -> int:
    cover = need(defs, args.cover, "cover", out)
    if cover is None:
        return out.emit(EXIT_USAGE)
    h0, h1 = line_bundle_cech_dims(cover, window)
    out.line("h0 = %d" % h0)
    out.line("h1 = %d" % h1)
    out.set("h0", h0)
    out.set("h1", h1)
    return out.emit(EXIT_OK)


COMMANDS = {
    "verify": cmd_verify,
    "cohomology": cmd_cohomology,
    "d": cmd_d,
    "exact": cmd_exact,
    "curvature": cmd_curvature,
    "flat": cmd_flat,
    "chern": cmd_chern,
    "obstruction": cmd_obstruction,
    "matched": cmd_matched,
    "twilled": cmd_twilled,
    "compare-total": cmd_compare_total,
    "relations": cmd_relations,
    "normal-form": cmd_normal_form,
    "confluence": cmd_confluence,
    "atiyah": cmd_atiyah,
    "class-compare": cmd_class_compare,
    "glue": cmd_glue,
    "lambda-check": cmd_lambda_check,
    "cech-dims": cmd_cech_dims,
}


def build_arg_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="adf",
        description="exact Lie algebroid calculus over definition files")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="definition file (.adf)")
        p.add_argument("--json", action="store_true")
        p.add_argument("--window", default=None,
                       help="degree[,laurent] truncation window")

    p = sub.add_parser("verify"); common(p); p.add_argument("name")
    p = sub.add_parser("cohomology"); common(p); p.add_argument("name")
    p.add_argument("--degrees", default="0..2")
    p = sub.add_parser("d"); common(p); p.add_argument("name")
    p = sub.add_parser("exact"); common(p); p.add_argument("name")
    p = sub.add_parser("curvature"); common(p); p.add_argument("name")
    p = sub.add_parser("flat"); common(p); p.add_argument("name")
    p = sub.add_parser("chern"); common(p); p.add_argument("name")
    p.add_argument("--k", type=int, default=1, choices=(1, 2))
    p = sub.add_parser("obstruction"); common(p)
    p.add_argument("connection"); p.add_argument("form")
    p = sub.add_parser("matched"); common(p); p.add_argument("name")
    p = sub.add_parser("twilled"); common(p); p.add_argument("name")
    p = sub.add_parser("compare-total"); common(p); p.add_argument("name")
    p.add_argument("--degrees", default="0..2")
    p = sub.add_parser("relations"); common(p)
    p.add_argument("algebroid"); p.add_argument("form", nargs="?", default=None)
    p = sub.add_parser("normal-form"); common(p)
    p.add_argument("relations"); p.add_argument("word")
    p = sub.add_parser("confluence"); common(p); p.add_argument("name")
    p = sub.add_parser("atiyah"); common(p)
    p.add_argument("cover", nargs="?", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--algebroid", choices=("tangent", "log"), default=None)
    p = sub.add_parser("class-compare"); common(p)
    p.add_argument("first"); p.add_argument("second")
    p = sub.add_parser("glue"); common(p)
    p.add_argument("cover"); p.add_argument("pair")
    p = sub.add_parser("lambda-check"); common(p)
    p.add_argument("cover"); p.add_argument("pair"); p.add_argument("bunch")
    p = sub.add_parser("cech-dims"); common(p); p.add_argument("cover")
    return top


def run(argv) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    out = Output(args.json)
    window = parse_window(args.window or os.environ.get("ADF_WINDOW"))
    defs = load(args.file, out)
    if defs is None:
        return out.emit(EXIT_USAGE)
    handler = COMMANDS[args.command]
    try:
        return handler(args, defs, out, window)
    except (StructureError, RingError) as err:
        out.line("refuted: %s" % err)
        out.set("error", str(err))
        return out.emit(EXIT_REFUTED)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
