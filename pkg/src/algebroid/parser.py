"""Parser for the .adf definition language.

Declarations are processed in order into a named environment; errors are
collected as positioned diagnostics without aborting the rest of the
file.  `render` reproduces a canonical text form of a parsed file, and
parse(render(parse(text))) is the identity on well-formed input.

Grammar sketch (statements end with ';' or a braced block):

    ring R = poly(Q; x, y);
    ring S = laurent(Q; z);
    algebroid L over R {
      basis e1, e2;
      anchor e1 -> d/dx, e2 -> x*d/dy;
      bracket [e1, e2] = e2;
    }
    form W on L = x*e1^ ^ e2^;
    connection C on L rank 2 { e1 -> [[0, 1], [0, 0]]; }
    relations RS on L twist W;
    matched M { l1 L1; l2 L2; action12 C12; action21 C21; }
    cover P = p1(tangent, bundle=2);
    cover C {
      chart R0 L0;
      chart R1 L1;
      overlap 0 1 {
        ring O01;
        map 0 { z -> z; }
        map 1 { w -> z^-1; }
        derivations 0 { d/dz -> d/dz; }
        derivations 1 { d/dw -> -z^2*d/dz; }
        transition [[-z^2]];
        bundle [[z]];
      }
      triple 0 1 2;
    }
    cocycle A = atiyah(P);
    cocycle Z on P { phi 0 1 = z^-1*e1^; q 0 = 0; }
    bunch B on P rank 1 { connection 0 { e1 -> [[0]]; } connection 1 { e1 -> [[0]]; } }

Scalar expressions use + - * ^ with integer or fraction literals; a
trailing caret marks a dual basis element, and '^' between dual factors
is the wedge product.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .cech import CechPair, Cover, LocalConnectionBunch, Overlap, atiyah_cocycle, \
    make_p1_cover
from .connections import Connection
from .core import Algebroid, StructureError
from .forms import LForm
from .matched import MatchedPair
from .pbw import PbwElement, RelationSystem
from .rings import ChartRing, RingElement, RingError, RingMap


@dataclass
class Diagnostic:
    severity: str
    line: int
    column: int
    message: str

    def __str__(self):
        return "%s:%d:%d: %s" % (self.severity, self.line, self.column,
                                 self.message)


class ParseError(Exception):
    def __init__(self, message: str, token: "Token"):
        super().__init__(message)
        self.message = message
        self.token = token


@dataclass
class Token:
    kind: str          # IDENT DERIV DUAL INT SYM EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<deriv>d/d[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<arrow>->)
  | (?P<sym>[(){}\[\],;=+\-*^/.])
""", re.VERBOSE)


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            tokens.append(Token("ERROR", text[pos], line, col))
            pos += 1
            col += 1
            continue
        kind = m.lastgroup
        chunk = m.group()
        if kind == "ws":
            for ch in chunk:
                if ch == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            pos = m.end()
            continue
        if kind == "comment":
            pos = m.end()
            col += len(chunk)
            continue
        if kind == "ident":
            # a caret glued to an identifier marks a dual basis element,
            # unless it introduces an integer power
            end = m.end()
            if end < len(text) and text[end] == "^":
                nxt = text[end + 1: end + 2]
                if not (nxt.isdigit() or nxt == "-"):
                    tokens.append(Token("DUAL", chunk, line, col))
                    col += len(chunk) + 1
                    pos = end + 1
                    continue
            tokens.append(Token("IDENT", chunk, line, col))
        elif kind == "deriv":
            tokens.append(Token("DERIV", chunk, line, col))
        elif kind == "int":
            tokens.append(Token("INT", chunk, line, col))
        elif kind == "arrow":
            tokens.append(Token("SYM", "->", line, col))
        else:
            tokens.append(Token("SYM", chunk, line, col))
        col += len(chunk)
        pos = m.end()
    tokens.append(Token("EOF", "", line, col))
    return tokens


@dataclass
class Definitions:
    objects: Dict[str, object] = field(default_factory=dict)
    kinds: Dict[str, str] = field(default_factory=dict)
    meta: Dict[str, dict] = field(default_factory=dict)
    order: List[str] = field(default_factory=list)
    diagnostics: List[Diagnostic] = field(default_factory=list)

    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)

    def define(self, name: str, kind: str, obj: object, meta: dict):
        self.objects[name] = obj
        self.kinds[name] = kind
        self.meta[name] = meta
        self.order.append(name)

    def lookup(self, name: str, kind: str, token: Token):
        if name not in self.objects:
            raise ParseError("undefined name %r" % name, token)
        if kind is not None and self.kinds[name] != kind:
            raise ParseError("%r is a %s, expected a %s"
                             % (name, self.kinds[name], kind), token)
        return self.objects[name]


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.defs = Definitions()

    # -- token plumbing ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError("expected %r, found %r" % (want, tok.text or "end of input"), tok)
        return self.advance()

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.advance()
        return None

    def _skip_statement(self):
        depth = 0
        while True:
            tok = self.advance()
            if tok.kind == "EOF":
                return
            if tok.kind == "SYM" and tok.text == "{":
                depth += 1
            elif tok.kind == "SYM" and tok.text == "}":
                if depth == 0:
                    return
                depth -= 1
                if depth == 0:
                    return
            elif tok.kind == "SYM" and tok.text == ";" and depth == 0:
                return

    # -- driver ---------------------------------------------------------------

    def parse(self) -> Definitions:
        while self.peek().kind != "EOF":
            start = self.pos
            try:
                self.statement()
            except (ParseError,) as err:
                self.defs.diagnostics.append(Diagnostic(
                    "error", err.token.line, err.token.column, err.message))
                if self.pos == start:
                    self.advance()
                self._skip_statement()
            except (RingError, StructureError) as err:
                tok = self.tokens[min(self.pos, len(self.tokens) - 1)]
                self.defs.diagnostics.append(Diagnostic(
                    "error", tok.line, tok.column, str(err)))
                self._skip_statement()
        return self.defs

    def statement(self):
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ParseError("expected a declaration keyword", tok)
        handler = {
            "ring": self.ring_stmt,
            "algebroid": self.algebroid_stmt,
            "form": self.form_stmt,
            "connection": self.connection_stmt,
            "relations": self.relations_stmt,
            "matched": self.matched_stmt,
            "cover": self.cover_stmt,
            "cocycle": self.cocycle_stmt,
            "bunch": self.bunch_stmt,
        }.get(tok.text)
        if handler is None:
            raise ParseError("unknown declaration %r" % tok.text, tok)
        self.advance()
        handler()

    def fresh_name(self) -> str:
        tok = self.expect("IDENT")
        if tok.text in self.defs.objects:
            raise ParseError("name %r is already defined" % tok.text, tok)
        return tok.text

    # -- statements -------------------------------------------------------------

    def ring_stmt(self):
        name = self.fresh_name()
        self.expect("SYM", "=")
        kind_tok = self.expect("IDENT")
        if kind_tok.text not in ("poly", "laurent"):
            raise ParseError("ring kind must be poly or laurent", kind_tok)
        self.expect("SYM", "(")
        base = self.expect("IDENT")
        if base.text != "Q":
            raise ParseError("only the rational base field Q is supported", base)
        self.expect("SYM", ";")
        variables = [self.expect("IDENT").text]
        while self.accept("SYM", ","):
            variables.append(self.expect("IDENT").text)
        self.expect("SYM", ")")
        self.expect("SYM", ";")
        laurent = variables if kind_tok.text == "laurent" else ()
        ring = ChartRing(variables, laurent=laurent)
        self.defs.define(name, "ring", ring, {"kind": kind_tok.text})

    def algebroid_stmt(self):
        name = self.fresh_name()
        self.expect("IDENT", "over")
        ring_tok = self.expect("IDENT")
        ring = self.defs.lookup(ring_tok.text, "ring", ring_tok)
        self.expect("SYM", "{")
        basis: List[str] = []
        anchors: Dict[str, List[RingElement]] = {}
        brackets: Dict[Tuple[int, int], List[RingElement]] = {}
        bracket_order: List[Tuple[int, int]] = []
        while not self.accept("SYM", "}"):
            key = self.expect("IDENT")
            if key.text == "basis":
                basis.append(self.expect("IDENT").text)
                while self.accept("SYM", ","):
                    basis.append(self.expect("IDENT").text)
                self.expect("SYM", ";")
            elif key.text == "anchor":
                while True:
                    e = self.expect("IDENT")
                    if e.text not in basis:
                        raise ParseError("unknown basis element %r" % e.text, e)
                    self.expect("SYM", "->")
                    anchors[e.text] = self.anchor_expr(ring)
                    if not self.accept("SYM", ","):
                        break
                self.expect("SYM", ";")
            elif key.text == "bracket":
                self.expect("SYM", "[")
                a = self.expect("IDENT")
                self.expect("SYM", ",")
                b = self.expect("IDENT")
                self.expect("SYM", "]")
                for t in (a, b):
                    if t.text not in basis:
                        raise ParseError("unknown basis element %r" % t.text, t)
                self.expect("SYM", "=")
                section = self.section_expr(ring, basis)
                self.expect("SYM", ";")
                i, j = basis.index(a.text), basis.index(b.text)
                if i == j:
                    if any(not c.is_zero() for c in section):
                        raise ParseError(
                            "bracket of equal basis elements must be zero", a)
                    continue
                if i > j:
                    i, j = j, i
                    section = [-c for c in section]
                brackets[(i, j)] = section
                bracket_order.append((i, j))
            else:
                raise ParseError("unknown algebroid clause %r" % key.text, key)
        nder = len(ring.derivation_names)
        anchor_rows = []
        for bname in basis:
            anchor_rows.append(anchors.get(bname, [ring.zero] * nder))
        alg = Algebroid(ring, len(basis), anchor_rows, brackets,
                        basis_names=basis)
        self.defs.define(name, "algebroid", alg, {"ring": ring_tok.text})

    def form_stmt(self):
        name = self.fresh_name()
        self.expect("IDENT", "on")
        l_tok = self.expect("IDENT")
        alg = self.defs.lookup(l_tok.text, "algebroid", l_tok)
        self.expect("SYM", "=")
        form = self.form_expr(alg)
        self.expect("SYM", ";")
        self.defs.define(name, "form", form, {"algebroid": l_tok.text})

    def basis_ref(self, alg: Algebroid) -> int:
        tok = self.peek()
        if tok.kind in ("IDENT", "DERIV") and tok.text in alg.basis_names:
            self.advance()
            return alg.basis_names.index(tok.text)
        # compound names like z*d/dz (logarithmic frames) span three tokens
        if (tok.kind == "IDENT"
                and self.tokens[self.pos + 1].text == "*"
                and self.tokens[self.pos + 2].kind == "DERIV"):
            compound = tok.text + "*" + self.tokens[self.pos + 2].text
            if compound in alg.basis_names:
                self.pos += 3
                return alg.basis_names.index(compound)
        raise ParseError("unknown basis element %r" % tok.text, tok)

    def connection_stmt(self):
        name = self.fresh_name()
        self.expect("IDENT", "on")
        l_tok = self.expect("IDENT")
        alg = self.defs.lookup(l_tok.text, "algebroid", l_tok)
        self.expect("IDENT", "rank")
        rank = int(self.expect("INT").text)
        self.expect("SYM", "{")
        mats: Dict[int, List[List[RingElement]]] = {}
        while not self.accept("SYM", "}"):
            idx = self.basis_ref(alg)
            self.expect("SYM", "->")
            mats[idx] = self.matrix_expr(alg.base, rank)
            self.expect("SYM", ";")
        rows = []
        for i in range(alg.rank):
            rows.append(mats.get(i, [[alg.base.zero] * rank
                                     for _ in range(rank)]))
        conn = Connection(alg, rank, rows)
        self.defs.define(name, "connection", conn, {"algebroid": l_tok.text})

    def relations_stmt(self):
        name = self.fresh_name()
        self.expect("IDENT", "on")
        l_tok = self.expect("IDENT")
        alg = self.defs.lookup(l_tok.text, "algebroid", l_tok)
        twist = None
        twist_name = None
        if self.accept("IDENT", "twist"):
            q_tok = self.expect("IDENT")
            twist = self.defs.lookup(q_tok.text, "form", q_tok)
            twist_name = q_tok.text
        self.expect("SYM", ";")
        system = RelationSystem(alg, twist)
        self.defs.define(name, "relations", system,
                         {"algebroid": l_tok.text, "twist": twist_name})

    def matched_stmt(self):
        name = self.fresh_name()
        self.expect("SYM", "{")
        pieces = {}
        while not self.accept("SYM", "}"):
            key = self.expect("IDENT")
            if key.text not in ("l1", "l2", "action12", "action21"):
                raise ParseError("unknown matched-pair clause %r" % key.text, key)
            val = self.expect("IDENT")
            kind = "algebroid" if key.text in ("l1", "l2") else "connection"
            pieces[key.text] = (val.text, self.defs.lookup(val.text, kind, val))
            self.expect("SYM", ";")
        for required in ("l1", "l2", "action12", "action21"):
            if required not in pieces:
                raise ParseError("matched pair is missing %r" % required,
                                 self.peek())
        pair = MatchedPair(pieces["l1"][1], pieces["l2"][1],
                           pieces["action12"][1], pieces["action21"][1])
        self.defs.define(name, "matched", pair,
                         {k: v[0] for k, v in pieces.items()})

    def cover_stmt(self):
        name = self.fresh_name()
        if self.accept("SYM", "="):
            kind = self.expect("IDENT")
            if kind.text != "p1":
                raise ParseError("unknown built-in cover %r" % kind.text, kind)
            self.expect("SYM", "(")
            alg_tok = self.expect("IDENT")
            if alg_tok.text not in ("tangent", "log"):
                raise ParseError("p1 cover takes tangent or log", alg_tok)
            bundle = None
            if self.accept("SYM", ","):
                self.expect("IDENT", "bundle")
                self.expect("SYM", "=")
                bundle = self.int_literal()
            self.expect("SYM", ")")
            self.expect("SYM", ";")
            cover = make_p1_cover(alg_tok.text, bundle=bundle)
            self.defs.define(name, "cover", cover,
                             {"builtin": alg_tok.text, "bundle": bundle})
            return
        self.expect("SYM", "{")
        charts: List[Tuple[str, str]] = []
        overlaps: Dict[Tuple[int, int], Overlap] = {}
        overlap_meta = {}
        triples: List[Tuple[int, int, int]] = []
        while not self.accept("SYM", "}"):
            key = self.expect("IDENT")
            if key.text == "chart":
                r_tok = self.expect("IDENT")
                l_tok = self.expect("IDENT")
                self.defs.lookup(r_tok.text, "ring", r_tok)
                self.defs.lookup(l_tok.text, "algebroid", l_tok)
                charts.append((r_tok.text, l_tok.text))
                self.expect("SYM", ";")
            elif key.text == "overlap":
                a = int(self.expect("INT").text)
                b = int(self.expect("INT").text)
                ov, meta = self.overlap_block(charts, a, b)
                overlaps[(a, b)] = ov
                overlap_meta[(a, b)] = meta
            elif key.text == "triple":
                t = tuple(int(self.expect("INT").text) for _ in range(3))
                triples.append(t)
                self.expect("SYM", ";")
            else:
                raise ParseError("unknown cover clause %r" % key.text, key)
        chart_objs = [(self.defs.objects[r], self.defs.objects[l])
                      for r, l in charts]
        cover = Cover(chart_objs, overlaps, triples=triples)
        cover.verify()
        self.defs.define(name, "cover", cover,
                         {"charts": charts, "overlaps": overlap_meta,
                          "triples": triples})

    def overlap_block(self, charts, a, b):
        open_tok = self.expect("SYM", "{")
        if not (0 <= a < len(charts)) or not (0 <= b < len(charts)) or a >= b:
            raise ParseError("overlap indices must name earlier charts, "
                             "ascending", open_tok)
        ring = None
        ring_name = None
        maps = {}
        map_meta = {}
        ders = {}
        der_meta = {}
        transition = None
        bundle = None
        while not self.accept("SYM", "}"):
            key = self.expect("IDENT")
            if key.text == "ring":
                r_tok = self.expect("IDENT")
                ring = self.defs.lookup(r_tok.text, "ring", r_tok)
                ring_name = r_tok.text
                self.expect("SYM", ";")
            elif key.text == "map":
                side = int(self.expect("INT").text)
                if side not in (a, b):
                    raise ParseError("map side must be %d or %d" % (a, b), key)
                if ring is None:
                    raise ParseError("declare the overlap ring first", key)
                images = {}
                self.expect("SYM", "{")
                while not self.accept("SYM", "}"):
                    v = self.expect("IDENT")
                    self.expect("SYM", "->")
                    images[v.text] = self.scalar_expr(ring)
                    self.expect("SYM", ";")
                src = self.defs.objects[charts[a][0] if side == a else charts[b][0]]
                maps[side] = RingMap(src, ring, images)
                map_meta[side] = {v: str(e) for v, e in images.items()}
            elif key.text == "derivations":
                side = int(self.expect("INT").text)
                if side not in (a, b):
                    raise ParseError("derivations side must be %d or %d"
                                     % (a, b), key)
                if ring is None:
                    raise ParseError("declare the overlap ring first", key)
                src_ring = self.defs.objects[charts[a][0] if side == a
                                             else charts[b][0]]
                rows = {}
                self.expect("SYM", "{")
                while not self.accept("SYM", "}"):
                    d = self.expect("DERIV")
                    if d.text not in src_ring.derivation_names:
                        raise ParseError("unknown chart derivation %r" % d.text, d)
                    self.expect("SYM", "->")
                    rows[d.text] = self.anchor_expr(ring)
                    self.expect("SYM", ";")
                ders[side] = [rows.get(dn, [ring.zero] * len(ring.derivation_names))
                              for dn in src_ring.derivation_names]
                der_meta[side] = True
            elif key.text == "transition":
                if ring is None:
                    raise ParseError("declare the overlap ring first", key)
                rank = self.defs.objects[charts[a][1]].rank
                transition = self.matrix_expr(ring, rank)
                self.expect("SYM", ";")
            elif key.text == "bundle":
                if ring is None:
                    raise ParseError("declare the overlap ring first", key)
                bundle = self.square_matrix_expr(ring)
                self.expect("SYM", ";")
            else:
                raise ParseError("unknown overlap clause %r" % key.text, key)
        if ring is None or a not in maps or b not in maps \
                or a not in ders or b not in ders or transition is None:
            raise ParseError("overlap block is incomplete", open_tok)
        ov = Overlap(ring, maps[a], maps[b], ders[a], ders[b], transition,
                     bundle)
        meta = {"ring": ring_name, "maps": map_meta}
        return ov, meta

    def cocycle_stmt(self):
        name = self.fresh_name()
        if self.accept("SYM", "="):
            fn = self.expect("IDENT")
            if fn.text != "atiyah":
                raise ParseError("unknown cocycle constructor %r" % fn.text, fn)
            self.expect("SYM", "(")
            c_tok = self.expect("IDENT")
            cover = self.defs.lookup(c_tok.text, "cover", c_tok)
            self.expect("SYM", ")")
            self.expect("SYM", ";")
            pair = atiyah_cocycle(cover)
            self.defs.define(name, "cocycle", pair,
                             {"atiyah": c_tok.text, "cover": c_tok.text})
            return
        self.expect("IDENT", "on")
        c_tok = self.expect("IDENT")
        cover = self.defs.lookup(c_tok.text, "cover", c_tok)
        self.expect("SYM", "{")
        phi = {}
        q = {}
        while not self.accept("SYM", "}"):
            key = self.expect("IDENT")
            if key.text == "phi":
                a = int(self.expect("INT").text)
                b = int(self.expect("INT").text)
                if (a, b) not in cover.overlaps:
                    raise ParseError("no overlap (%d,%d) in the cover"
                                     % (a, b), key)
                self.expect("SYM", "=")
                frame = cover.frame_algebroid(a, b)
                phi[(a, b)] = self.form_expr(frame, expect_degree=1)
                self.expect("SYM", ";")
            elif key.text == "q":
                a = int(self.expect("INT").text)
                if not (0 <= a < len(cover.charts)):
                    raise ParseError("no chart %d in the cover" % a, key)
                self.expect("SYM", "=")
                q[a] = self.form_expr(cover.chart_algebroid(a), expect_degree=2)
                self.expect("SYM", ";")
            else:
                raise ParseError("unknown cocycle clause %r" % key.text, key)
        pair = CechPair(cover, phi, q)
        self.defs.define(name, "cocycle", pair, {"cover": c_tok.text})

    def bunch_stmt(self):
        name = self.fresh_name()
        self.expect("IDENT", "on")
        c_tok = self.expect("IDENT")
        cover = self.defs.lookup(c_tok.text, "cover", c_tok)
        self.expect("IDENT", "rank")
        rank = int(self.expect("INT").text)
        self.expect("SYM", "{")
        conns: Dict[int, Connection] = {}
        while not self.accept("SYM", "}"):
            self.expect("IDENT", "connection")
            a = int(self.expect("INT").text)
            alg = cover.chart_algebroid(a)
            self.expect("SYM", "{")
            mats: Dict[int, List[List[RingElement]]] = {}
            while not self.accept("SYM", "}"):
                idx = self.basis_ref(alg)
                self.expect("SYM", "->")
                mats[idx] = self.matrix_expr(alg.base, rank)
                self.expect("SYM", ";")
            rows = [mats.get(i, [[alg.base.zero] * rank for _ in range(rank)])
                    for i in range(alg.rank)]
            conns[a] = Connection(alg, rank, rows)
        missing = [a for a in range(len(cover.charts)) if a not in conns]
        if missing:
            raise ParseError("bunch is missing connections for charts %s"
                             % missing, self.peek())
        bunch = LocalConnectionBunch(cover, rank,
                                     [conns[a] for a in range(len(cover.charts))])
        self.defs.define(name, "bunch", bunch,
                         {"cover": c_tok.text, "rank": rank})

    # -- expressions -----------------------------------------------------------

    def int_literal(self) -> int:
        sign = 1
        if self.accept("SYM", "-"):
            sign = -1
        return sign * int(self.expect("INT").text)

    def scalar_expr(self, ring: ChartRing) -> RingElement:
        """+ - * ^ expression in the ring variables."""
        total = self.scalar_term(ring)
        while True:
            if self.accept("SYM", "+"):
                total = total + self.scalar_term(ring)
            elif self.accept("SYM", "-"):
                total = total - self.scalar_term(ring)
            else:
                return total

    def scalar_term(self, ring: ChartRing) -> RingElement:
        value = self.scalar_factor(ring)
        while self.accept("SYM", "*"):
            value = value * self.scalar_factor(ring)
        return value

    def scalar_factor(self, ring: ChartRing) -> RingElement:
        if self.accept("SYM", "-"):
            return -self.scalar_factor(ring)
        atom = self.scalar_atom(ring)
        while self.accept("SYM", "^"):
            atom = atom ** self.int_literal()
        return atom

    def scalar_atom(self, ring: ChartRing) -> RingElement:
        tok = self.peek()
        if self.accept("SYM", "-"):
            return -self.scalar_factor(ring)
        if self.accept("SYM", "("):
            value = self.scalar_expr(ring)
            self.expect("SYM", ")")
            return value
        if tok.kind == "INT":
            self.advance()
            num = int(tok.text)
            if self.accept("SYM", "/"):
                den = int(self.expect("INT").text)
                return ring.const(Fraction(num, den))
            return ring.const(num)
        if tok.kind == "IDENT":
            if tok.text in ring.variables:
                self.advance()
                return ring.var(tok.text)
            raise ParseError("unknown variable %r" % tok.text, tok)
        raise ParseError("expected a scalar expression", tok)

    def anchor_expr(self, ring: ChartRing) -> List[RingElement]:
        """Sum of scalar multiples of declared derivations."""
        nder = len(ring.derivation_names)
        out = [ring.zero] * nder
        if self.peek().kind == "INT" and self.peek().text == "0" \
                and self.tokens[self.pos + 1].text in (";", ","):
            self.advance()
            return out
        sign = 1
        while True:
            coeff = ring.one
            saw_deriv = None
            while True:
                tok = self.peek()
                if tok.kind == "DERIV":
                    self.advance()
                    if tok.text not in ring.derivation_names:
                        raise ParseError("unknown derivation %r" % tok.text, tok)
                    saw_deriv = ring.derivation_names.index(tok.text)
                else:
                    coeff = coeff * self.scalar_factor(ring)
                if not self.accept("SYM", "*"):
                    break
            if saw_deriv is None:
                raise ParseError("anchor term needs a derivation factor", tok)
            out[saw_deriv] = out[saw_deriv] + (coeff if sign == 1 else -coeff)
            if self.accept("SYM", "+"):
                sign = 1
            elif self.accept("SYM", "-"):
                sign = -1
            else:
                return out

    def section_expr(self, ring: ChartRing, basis: Sequence[str]
                     ) -> List[RingElement]:
        out = [ring.zero] * len(basis)
        if self.peek().kind == "INT" and self.peek().text == "0" \
                and self.tokens[self.pos + 1].text == ";":
            self.advance()
            return out
        sign = 1
        while True:
            coeff = ring.one
            index = None
            tok = self.peek()
            while True:
                tok = self.peek()
                if tok.kind == "IDENT" and tok.text in basis:
                    self.advance()
                    if index is not None:
                        raise ParseError("two basis factors in one term", tok)
                    index = list(basis).index(tok.text)
                else:
                    coeff = coeff * self.scalar_factor(ring)
                if not self.accept("SYM", "*"):
                    break
            if index is None:
                raise ParseError("section term needs a basis element", tok)
            out[index] = out[index] + (coeff if sign == 1 else -coeff)
            if self.accept("SYM", "+"):
                sign = 1
            elif self.accept("SYM", "-"):
                sign = -1
            else:
                return out

    def form_expr(self, alg: Algebroid, expect_degree: Optional[int] = None
                  ) -> LForm:
        """Sum of wedge terms of dual basis factors with scalar coefficients."""
        ring = alg.base
        names = list(alg.basis_names)
        terms: List[Tuple[Tuple[int, ...], RingElement]] = []
        first_tok = self.peek()
        if first_tok.kind == "INT" and first_tok.text == "0" \
                and self.tokens[self.pos + 1].text == ";":
            self.advance()
            degree = expect_degree if expect_degree is not None else 0
            return LForm(alg, degree, {})
        sign = 1
        while True:
            coeff = ring.one
            duals: List[int] = []

            def dual_name() -> Optional[str]:
                tok = self.peek()
                if tok.kind == "DUAL":
                    self.advance()
                    return tok.text
                if tok.kind == "DERIV" and tok.text in names:
                    # d/dz^ lexes as DERIV then the marker caret
                    self.advance()
                    self.expect("SYM", "^")
                    return tok.text
                if (tok.kind == "IDENT"
                        and self.tokens[self.pos + 1].text == "*"
                        and self.tokens[self.pos + 2].kind == "DERIV"):
                    compound = tok.text + "*" + self.tokens[self.pos + 2].text
                    if compound in names:
                        # compound duals like z*d/dz^ on logarithmic frames
                        self.pos += 3
                        self.expect("SYM", "^")
                        return compound
                return None

            while True:
                tok = self.peek()
                got = dual_name()
                if got is not None:
                    if got not in names:
                        raise ParseError("unknown dual basis element %r"
                                         % got, tok)
                    duals.append(names.index(got))
                    # a bare ^ continues the wedge chain
                    while self.accept("SYM", "^"):
                        nxt_tok = self.peek()
                        nxt = dual_name()
                        if nxt is None or nxt not in names:
                            raise ParseError("expected a dual basis element",
                                             nxt_tok)
                        duals.append(names.index(nxt))
                else:
                    coeff = coeff * self.scalar_factor(ring)
                if not self.accept("SYM", "*"):
                    break
            if sign == -1:
                coeff = -coeff
            terms.append((tuple(duals), coeff))
            if self.accept("SYM", "+"):
                sign = 1
            elif self.accept("SYM", "-"):
                sign = -1
            else:
                break
        degrees = {len(d) for d, _ in terms}
        if len(degrees) > 1:
            raise ParseError("form terms have mixed degrees", first_tok)
        degree = degrees.pop()
        if expect_degree is not None and degree != expect_degree \
                and any(not c.is_zero() for _, c in terms):
            raise ParseError("expected a degree-%d form" % expect_degree,
                             first_tok)
        from .forms import sort_with_sign
        coeffs: Dict[Tuple[int, ...], RingElement] = {}
        for duals, coeff in terms:
            idx, sgn = sort_with_sign(duals)
            if idx is None:
                continue
            val = coeff if sgn == 1 else -coeff
            cur = coeffs.get(idx)
            coeffs[idx] = val if cur is None else cur + val
        return LForm(alg, degree, coeffs)

    def matrix_expr(self, ring: ChartRing, rank: int) -> List[List[RingElement]]:
        rows = self.square_matrix_expr(ring)
        if len(rows) != rank or any(len(r) != rank for r in rows):
            raise ParseError("expected a %d x %d matrix" % (rank, rank),
                             self.peek())
        return rows

    def square_matrix_expr(self, ring: ChartRing) -> List[List[RingElement]]:
        self.expect("SYM", "[")
        rows = []
        while True:
            self.expect("SYM", "[")
            row = [self.scalar_expr(ring)]
            while self.accept("SYM", ","):
                row.append(self.scalar_expr(ring))
            self.expect("SYM", "]")
            rows.append(row)
            if not self.accept("SYM", ","):
                break
        self.expect("SYM", "]")
        return rows

    def word_expr(self, system: RelationSystem) -> PbwElement:
        """Entry point for normal-form inputs: products and sums of
        generators and scalars; evaluation is reduction."""
        total = self.word_term(system)
        while True:
            if self.accept("SYM", "+"):
                total = total + self.word_term(system)
            elif self.accept("SYM", "-"):
                total = total - self.word_term(system)
            else:
                return total

    def word_term(self, system: RelationSystem) -> PbwElement:
        value = self.word_factor(system)
        while self.accept("SYM", "*"):
            value = value * self.word_factor(system)
        return value

    def word_factor(self, system: RelationSystem) -> PbwElement:
        tok = self.peek()
        names = list(system.algebroid.basis_names)
        if tok.kind in ("IDENT", "DERIV") and tok.text in names:
            self.advance()
            base = system.generator(names.index(tok.text))
            if self.accept("SYM", "^"):
                power = self.int_literal()
                if power < 0:
                    raise ParseError("generators cannot carry negative powers",
                                     tok)
                out = system.one()
                for _ in range(power):
                    out = out * base
                return out
            return base
        return system.scalar(self.scalar_factor(system.ring))


def parse(text: str) -> Definitions:
    return Parser(text).parse()


def parse_word(text: str, system: RelationSystem) -> PbwElement:
    parser = Parser(text)
    result = parser.word_expr(system)
    if parser.peek().kind != "EOF":
        raise ParseError("unexpected trailing input", parser.peek())
    return result


# -- canonical renderer ----------------------------------------------------------


def _render_anchor(ring: ChartRing, row: Sequence[RingElement]) -> str:
    parts = []
    for d, coeff in enumerate(row):
        if coeff.is_zero():
            continue
        name = ring.derivation_names[d]
        if coeff == ring.one:
            parts.append(name)
        else:
            parts.append("(%s)*%s" % (coeff, name))
    return " + ".join(parts) if parts else "0"


def _render_section(alg: Algebroid, comps: Sequence[RingElement]) -> str:
    parts = []
    for i, coeff in enumerate(comps):
        if coeff.is_zero():
            continue
        if coeff == alg.base.one:
            parts.append(alg.basis_names[i])
        else:
            parts.append("(%s)*%s" % (coeff, alg.basis_names[i]))
    return " + ".join(parts) if parts else "0"


def render_form(form: LForm) -> str:
    if not form.coeffs:
        return "0"
    names = form.owner.basis_names
    parts = []
    for idx in sorted(form.coeffs):
        label = " ^ ".join("%s^" % names[t] for t in idx)
        coeff = form.coeffs[idx]
        if not idx:
            parts.append("(%s)" % coeff)
        else:
            parts.append("(%s) * %s" % (coeff, label))
    return " + ".join(parts)


def _render_matrix(rows) -> str:
    return "[" + ", ".join(
        "[" + ", ".join(str(x) for x in row) + "]" for row in rows) + "]"


def render(defs: Definitions) -> str:
    out: List[str] = []
    for name in defs.order:
        kind = defs.kinds[name]
        obj = defs.objects[name]
        meta = defs.meta[name]
        if kind == "ring":
            out.append("ring %s = %s(Q; %s);"
                       % (name, meta["kind"], ", ".join(obj.variables)))
        elif kind == "algebroid":
            lines = ["algebroid %s over %s {" % (name, meta["ring"])]
            lines.append("  basis %s;" % ", ".join(obj.basis_names))
            anchors = []
            for i, bname in enumerate(obj.basis_names):
                if any(not c.is_zero() for c in obj.anchor[i]):
                    anchors.append("%s -> %s"
                                   % (bname, _render_anchor(obj.base,
                                                            obj.anchor[i])))
            if anchors:
                lines.append("  anchor %s;" % ", ".join(anchors))
            for (i, j) in sorted(obj.structure):
                lines.append("  bracket [%s, %s] = %s;"
                             % (obj.basis_names[i], obj.basis_names[j],
                                _render_section(obj, obj.structure[(i, j)])))
            lines.append("}")
            out.append("\n".join(lines))
        elif kind == "form":
            out.append("form %s on %s = %s;"
                       % (name, meta["algebroid"], render_form(obj)))
        elif kind == "connection":
            lines = ["connection %s on %s rank %d {"
                     % (name, meta["algebroid"], obj.rank)]
            for i, bname in enumerate(obj.algebroid.basis_names):
                if any(not x.is_zero() for row in obj.matrices[i] for x in row):
                    lines.append("  %s -> %s;"
                                 % (bname, _render_matrix(obj.matrices[i])))
            lines.append("}")
            out.append("\n".join(lines))
        elif kind == "relations":
            if meta["twist"]:
                out.append("relations %s on %s twist %s;"
                           % (name, meta["algebroid"], meta["twist"]))
            else:
                out.append("relations %s on %s;" % (name, meta["algebroid"]))
        elif kind == "matched":
            out.append("matched %s { l1 %s; l2 %s; action12 %s; action21 %s; }"
                       % (name, meta["l1"], meta["l2"], meta["action12"],
                          meta["action21"]))
        elif kind == "cover":
            if "builtin" in meta:
                if meta["bundle"] is not None:
                    out.append("cover %s = p1(%s, bundle=%d);"
                               % (name, meta["builtin"], meta["bundle"]))
                else:
                    out.append("cover %s = p1(%s);" % (name, meta["builtin"]))
            else:
                lines = ["cover %s {" % name]
                for r, l in meta["charts"]:
                    lines.append("  chart %s %s;" % (r, l))
                for (a, b), ov in sorted(obj.overlaps.items()):
                    m = meta["overlaps"][(a, b)]
                    lines.append("  overlap %d %d {" % (a, b))
                    lines.append("    ring %s;" % m["ring"])
                    for side, srcring in ((a, obj.charts[a][0]),
                                          (b, obj.charts[b][0])):
                        rm = ov.map_a if side == a else ov.map_b
                        entries = "; ".join("%s -> %s" % (v, rm.images[v])
                                            for v in srcring.variables)
                        lines.append("    map %d { %s; }" % (side, entries))
                        der = ov.der_a if side == a else ov.der_b
                        dentries = "; ".join(
                            "%s -> %s" % (dn, _render_anchor(ov.ring, der[k]))
                            for k, dn in enumerate(srcring.derivation_names))
                        lines.append("    derivations %d { %s; }"
                                     % (side, dentries))
                    lines.append("    transition %s;"
                                 % _render_matrix(ov.transition))
                    if ov.bundle is not None:
                        lines.append("    bundle %s;" % _render_matrix(ov.bundle))
                    lines.append("  }")
                for t in meta["triples"]:
                    lines.append("  triple %d %d %d;" % t)
                lines.append("}")
                out.append("\n".join(lines))
        elif kind == "cocycle":
            if "atiyah" in meta:
                out.append("cocycle %s = atiyah(%s);" % (name, meta["atiyah"]))
            else:
                lines = ["cocycle %s on %s {" % (name, meta["cover"])]
                for (a, b), form in sorted(obj.phi.items()):
                    lines.append("  phi %d %d = %s;" % (a, b, render_form(form)))
                for a, form in sorted(obj.q.items()):
                    if not form.is_zero():
                        lines.append("  q %d = %s;" % (a, render_form(form)))
                lines.append("}")
                out.append("\n".join(lines))
        elif kind == "bunch":
            lines = ["bunch %s on %s rank %d {"
                     % (name, meta["cover"], meta["rank"])]
            for a, conn in enumerate(obj.connections):
                body = []
                for i, bname in enumerate(conn.algebroid.basis_names):
                    if any(not x.is_zero() for row in conn.matrices[i]
                           for x in row):
                        body.append("%s -> %s;" % (bname,
                                                   _render_matrix(conn.matrices[i])))
                lines.append("  connection %d { %s }" % (a, " ".join(body)))
            lines.append("}")
            out.append("\n".join(lines))
    return "\n".join(out) + "\n"
