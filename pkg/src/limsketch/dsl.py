"""Text and JSON formats for sketches, specifications, and morphisms.

The text grammar is line-oriented only by convention; tokens may be
arranged freely and ``//`` starts a comment.  The parser collects every
independent error with line and column before giving up, and the
serializer emits a canonical form that parses back to a structurally
identical declaration.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .engine import ChaseConfig, ChaseResult, trace_doc
from .finset import FinFunction, FinSet
from .localizer import SketchMorphism
from .realization import Realization
from .sketch import (
    ArrowDecl,
    Cone,
    ConeEdge,
    PathEquation,
    Sketch,
    ValidationReport,
    builtin_sketches,
)


@dataclass(frozen=True)
class NamedSpec:
    name: str
    realization: Realization


@dataclass(frozen=True)
class NamedMorphism:
    name: str
    morphism: SketchMorphism


@dataclass(frozen=True)
class NamedConfig:
    name: str
    config: ChaseConfig


@dataclass(frozen=True)
class ParseIssue:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class ParseError(Exception):
    def __init__(self, issues: list[ParseIssue]):
        self.issues = tuple(issues)
        super().__init__("\n".join(str(i) for i in issues))


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_#']*")
_NUM = re.compile(r"[0-9]+")
_PUNCT = ("=>", "->", "{", "}", "(", ")", "[", "]", ":", ";", "=", ",", ".")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, issues: list[ParseIssue]) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _IDENT.match(text, i)
        if m:
            toks.append(_Tok("ident", m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _NUM.match(text, i)
        if m:
            toks.append(_Tok("num", m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(_Tok(p, p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            issues.append(ParseIssue(line, col, f"stray character {ch!r}"))
            i += 1
            col += 1
    toks.append(_Tok("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_TOP_KEYWORDS = ("sketch", "spec", "morphism", "config")


class _Recover(Exception):
    """Internal unwind signal after a recorded syntax error."""


class _Parser:
    def __init__(self, text: str, env: dict[str, Sketch] | None):
        self.issues: list[ParseIssue] = []
        self.toks = _tokenize(text, self.issues)
        self.pos = 0
        self.env = dict(env or {})
        self.decls: list = []
        self.sketches: dict[str, Sketch] = {}
        self.names: set[str] = set()

    # -- token plumbing

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def advance(self) -> _Tok:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, tok: _Tok, message: str) -> None:
        self.issues.append(ParseIssue(tok.line, tok.col, message))

    def fail(self, tok: _Tok, message: str):
        self.error(tok, message)
        raise _Recover

    def expect(self, kind: str, what: str | None = None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(tok, f"expected {what or kind!r}, found {tok.text!r}"
                      if tok.kind != "eof"
                      else f"expected {what or kind!r}, found end of input")
        return self.advance()

    def ident(self, what: str) -> str:
        return self.expect("ident", what).text

    def skip_to(self, stops: tuple[str, ...]) -> None:
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if depth == 0 and tok.text in stops:
                return
            if tok.kind == "{":
                depth += 1
            elif tok.kind == "}":
                if depth == 0:
                    return
                depth -= 1
            self.advance()

    def close_block(self) -> None:
        """Consume tokens up to and including the current block's '}'."""
        depth = 1
        while depth:
            tok = self.advance()
            if tok.kind == "eof":
                return
            if tok.kind == "{":
                depth += 1
            elif tok.kind == "}":
                depth -= 1

    # -- top level

    def parse(self) -> list:
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind != "ident" or tok.text not in _TOP_KEYWORDS:
                self.error(tok, f"expected one of {', '.join(_TOP_KEYWORDS)}"
                           f", found {tok.text!r}")
                self.advance()
                self.skip_to(_TOP_KEYWORDS)
                continue
            try:
                if tok.text == "sketch":
                    self.sketch_block()
                elif tok.text == "spec":
                    self.spec_block()
                elif tok.text == "morphism":
                    self.morphism_block()
                else:
                    self.config_block()
            except _Recover:
                self.skip_to(_TOP_KEYWORDS)
        return self.decls

    def declare(self, name: str, tok: _Tok) -> None:
        if name in self.names:
            self.error(tok, f"duplicate declaration name {name!r}")
        self.names.add(name)

    def lookup_sketch(self, name: str, tok: _Tok) -> Sketch | None:
        found = self.sketches.get(name) or self.env.get(name) or \
            builtin_sketches().get(name)
        if found is None:
            self.error(tok, f"unknown sketch {name!r}")
        return found

    # -- sketch

    def sketch_block(self) -> None:
        self.advance()
        name_tok = self.peek()
        name = self.ident("sketch name")
        self.declare(name, name_tok)
        mark = len(self.issues)
        self.expect("{")
        objects: list[str] = []
        arrows: dict[str, tuple[ArrowDecl, _Tok]] = {}
        monos: list[tuple[str, _Tok]] = []
        equations: list[tuple[PathEquation, _Tok]] = []
        cones: list[tuple[Cone, _Tok]] = []
        entry_stops = ("object", "arrow", "mono", "eq", "cone", "}")
        while True:
            tok = self.peek()
            if tok.kind == "}":
                self.advance()
                break
            if tok.kind == "eof":
                self.fail(tok, "unterminated sketch block")
            try:
                kw = self.ident("sketch entry")
                if kw == "object":
                    ob_tok = self.peek()
                    ob = self.ident("object name")
                    if ob in objects:
                        self.error(ob_tok, f"duplicate object {ob!r}")
                    else:
                        objects.append(ob)
                elif kw == "arrow":
                    a_tok = self.peek()
                    aid = self.ident("arrow name")
                    self.expect(":")
                    src = self.ident("source object")
                    self.expect("->")
                    tgt = self.ident("target object")
                    if self.peek().kind == "[":
                        self.advance()
                        flag = self.ident("arrow flag")
                        if flag != "mono":
                            self.error(tok, f"unknown arrow flag {flag!r}")
                        self.expect("]")
                        monos.append((aid, a_tok))
                    if aid in arrows:
                        self.error(a_tok, f"duplicate arrow {aid!r}")
                    else:
                        arrows[aid] = (ArrowDecl(aid, src, tgt), a_tok)
                elif kw == "mono":
                    m_tok = self.peek()
                    monos.append((self.ident("arrow name"), m_tok))
                elif kw == "eq":
                    equations.append(self.equation_entry(tok))
                elif kw == "cone":
                    cones.append(self.cone_entry(tok))
                else:
                    self.fail(tok, f"unknown sketch entry {kw!r}")
            except _Recover:
                self.skip_to(entry_stops)
        self.finish_sketch(name, mark, objects, arrows, monos, equations,
                           cones)

    def dotted(self) -> tuple[tuple[str, ...], str | None, _Tok]:
        """Parse ID(.ID)* or id(OBJ); returns (arrows, anchor, first tok)."""
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "id" and \
                self.toks[self.pos + 1].kind == "(":
            self.advance()
            self.expect("(")
            anchor = self.ident("object name")
            self.expect(")")
            return (), anchor, tok
        parts = [self.ident("arrow path")]
        while self.peek().kind == ".":
            self.advance()
            parts.append(self.ident("arrow name"))
        return tuple(parts), None, tok

    def equation_entry(self, kw_tok: _Tok) -> tuple[PathEquation, _Tok]:
        lhs, _, _ = self.dotted()
        self.expect("=")
        rhs, _, _ = self.dotted()
        if not lhs and not rhs:
            self.fail(kw_tok, "an equation needs at least one non-identity "
                      "side")
        if not lhs:
            lhs, rhs = rhs, lhs
        return PathEquation(lhs, rhs), kw_tok

    def cone_entry(self, kw_tok: _Tok) -> tuple[Cone, _Tok]:
        cname = self.ident("cone name")
        self.expect(":")
        apex = self.ident("apex object")
        self.expect("{")
        try:
            return self.cone_body(kw_tok, cname, apex)
        except _Recover:
            # leave the cursor just past this cone's closing brace so the
            # enclosing sketch keeps its own braces balanced
            self.close_block()
            raise

    def cone_body(self, kw_tok: _Tok, cname: str,
                  apex: str) -> tuple[Cone, _Tok]:
        self.expect_keyword("base")
        nodes: dict[str, str] = {}
        edges: list[ConeEdge] = []
        while self.peek().kind != ";":
            tok = self.peek()
            if tok.kind in ("}", "eof"):
                self.fail(tok, "cone base section is missing ';'")
            if tok.kind == "ident" and tok.text == "edge":
                self.advance()
                src = self.ident("base node")
                self.expect("->")
                tgt = self.ident("base node")
                self.expect(":")
                path, anchor, ptok = self.dotted()
                if anchor is not None:
                    self.fail(ptok, "identity edges are implicit; use a "
                              "named path")
                edges.append(ConeEdge(src, tgt, path))
            else:
                n_tok = self.peek()
                node = self.ident("base node")
                self.expect(":")
                ob = self.ident("object name")
                if node in nodes:
                    self.error(n_tok, f"duplicate base node {node!r}")
                else:
                    nodes[node] = ob
        self.expect(";")
        self.expect_keyword("proj")
        projections: dict[str, str] = {}
        while self.peek().kind != "}":
            tok = self.peek()
            if tok.kind == "eof":
                self.fail(tok, "unterminated cone block")
            node = self.ident("base node")
            self.expect("->")
            p_tok = self.peek()
            arrow = self.ident("projection arrow")
            if node in projections:
                self.error(p_tok, f"node {node!r} projected twice")
            projections[node] = arrow
        self.expect("}")
        return Cone(cname, apex, nodes, tuple(edges),
                    dict(projections)), kw_tok

    def expect_keyword(self, word: str) -> None:
        tok = self.peek()
        if tok.kind != "ident" or tok.text != word:
            self.fail(tok, f"expected {word!r}, found {tok.text!r}")
        self.advance()

    def finish_sketch(self, name, mark, objects, arrows, monos, equations,
                      cones) -> None:
        arrow_map = {aid: decl for aid, (decl, _) in arrows.items()}
        obj_set = set(objects)
        for aid, (decl, tok) in arrows.items():
            for ob in (decl.src, decl.tgt):
                if ob not in obj_set:
                    self.error(tok, f"arrow {aid!r} references undeclared "
                               f"object {ob!r}")
        mono_ids: list[str] = []
        for mid, tok in monos:
            if mid not in arrow_map:
                self.error(tok, f"mono flag on undeclared arrow {mid!r}")
            elif mid in mono_ids:
                self.error(tok, f"arrow {mid!r} marked mono twice")
            else:
                mono_ids.append(mid)
        for eq, tok in equations:
            for aid in eq.lhs + eq.rhs:
                if aid not in arrow_map:
                    self.error(tok, f"equation references undeclared arrow "
                               f"{aid!r}")
        cone_map: dict[str, Cone] = {}
        for cone, tok in cones:
            if cone.name in cone_map:
                self.error(tok, f"duplicate cone {cone.name!r}")
                continue
            if cone.apex not in obj_set:
                self.error(tok, f"cone {cone.name!r} has undeclared apex "
                           f"{cone.apex!r}")
            for node, ob in cone.nodes.items():
                if ob not in obj_set:
                    self.error(tok, f"cone node {node!r} references "
                               f"undeclared object {ob!r}")
            for e in cone.edges:
                for node in (e.src, e.tgt):
                    if node not in cone.nodes:
                        self.error(tok, f"cone edge references undeclared "
                                   f"node {node!r}")
                for aid in e.path:
                    if aid not in arrow_map:
                        self.error(tok, f"cone edge references undeclared "
                                   f"arrow {aid!r}")
            for node, aid in cone.projections.items():
                if node not in cone.nodes:
                    self.error(tok, f"projection of undeclared node "
                               f"{node!r}")
                if aid not in arrow_map:
                    self.error(tok, f"projection references undeclared "
                               f"arrow {aid!r}")
            cone_map[cone.name] = cone
        if len(self.issues) > mark:
            # later declarations would trip over a half-built sketch
            return
        eq_list = [eq for eq, _ in equations]
        # Projection triangles are implicit in the text format; synthesize
        # the equations the core invariant asks for.
        for cone in cone_map.values():
            for e in cone.edges:
                ps = cone.projections.get(e.src)
                pt = cone.projections.get(e.tgt)
                if ps is None or pt is None:
                    continue
                lhs, rhs = (ps,) + e.path, (pt,)
                if not any({q.lhs, q.rhs} == {lhs, rhs} for q in eq_list):
                    eq_list.append(PathEquation(lhs, rhs))
        sk = Sketch(name=name, objects=tuple(objects), arrows=arrow_map,
                    equations=tuple(eq_list), cones=cone_map,
                    monos=frozenset(mono_ids))
        self.sketches[name] = sk
        self.decls.append(sk)

    # -- spec

    def spec_block(self) -> None:
        self.advance()
        name_tok = self.peek()
        name = self.ident("spec name")
        self.declare(name, name_tok)
        mark = len(self.issues)
        self.expect_keyword("over")
        sk_tok = self.peek()
        sk = self.lookup_sketch(self.ident("sketch name"), sk_tok)
        self.expect("{")
        elems: list[tuple[str, str, _Tok]] = []
        acts: list[tuple[str, str, str, _Tok]] = []
        entry_stops = ("elem", "act", "}")
        while True:
            tok = self.peek()
            if tok.kind == "}":
                self.advance()
                break
            if tok.kind == "eof":
                self.fail(tok, "unterminated spec block")
            try:
                kw = self.ident("spec entry")
                if kw == "elem":
                    el = self.ident("element name")
                    self.expect(":")
                    ob = self.ident("object name")
                    elems.append((el, ob, tok))
                elif kw == "act":
                    aid = self.ident("arrow name")
                    self.expect("(")
                    x = self.ident("element name")
                    self.expect(")")
                    self.expect("=")
                    y = self.ident("element name")
                    acts.append((aid, x, y, tok))
                else:
                    self.fail(tok, f"unknown spec entry {kw!r}")
            except _Recover:
                self.skip_to(entry_stops)
        if sk is None:
            return
        carriers: dict[str, list[str]] = {ob: [] for ob in sk.objects}
        where: dict[str, str] = {}
        for el, ob, tok in elems:
            if ob not in carriers:
                self.error(tok, f"element {el!r} has undeclared object "
                           f"{ob!r}")
                continue
            if el in where:
                self.error(tok, f"duplicate element {el!r}")
                continue
            where[el] = ob
            carriers[ob].append(el)
        actions: dict[str, dict[str, str]] = {a: {} for a in sk.arrows}
        for aid, x, y, tok in acts:
            decl = sk.arrows.get(aid)
            if decl is None:
                self.error(tok, f"action on undeclared arrow {aid!r}")
                continue
            if where.get(x) != decl.src:
                self.error(tok, f"action argument {x!r} is not an element "
                           f"of {decl.src}")
                continue
            if where.get(y) != decl.tgt:
                self.error(tok, f"action value {y!r} is not an element of "
                           f"{decl.tgt}")
                continue
            if x in actions[aid] and actions[aid][x] != y:
                self.error(tok, f"conflicting actions for {aid}({x})")
                continue
            actions[aid][x] = y
        for aid, decl in sk.arrows.items():
            for x in carriers[decl.src]:
                if x not in actions[aid]:
                    self.error(name_tok,
                               f"spec {name!r} is missing the action "
                               f"{aid}({x})")
        if len(self.issues) > mark:
            # a broken table would only blow up in FinFunction below
            return
        cs = {ob: FinSet(tuple(xs)) for ob, xs in carriers.items()}
        action_fns = {
            aid: FinFunction(cs[decl.src], cs[decl.tgt], actions[aid])
            for aid, decl in sk.arrows.items()
        }
        self.decls.append(NamedSpec(name, Realization(sk, cs, action_fns)))

    # -- morphism

    def morphism_block(self) -> None:
        self.advance()
        name_tok = self.peek()
        name = self.ident("morphism name")
        self.declare(name, name_tok)
        self.expect(":")
        src_tok = self.peek()
        src = self.lookup_sketch(self.ident("source sketch"), src_tok)
        self.expect("->")
        tgt_tok = self.peek()
        tgt = self.lookup_sketch(self.ident("target sketch"), tgt_tok)
        self.expect("{")
        object_map: dict[str, str] = {}
        arrow_map: dict[str, tuple[str, ...]] = {}
        entry_stops = ("obj", "arr", "}")
        while True:
            tok = self.peek()
            if tok.kind == "}":
                self.advance()
                break
            if tok.kind == "eof":
                self.fail(tok, "unterminated morphism block")
            try:
                kw = self.ident("morphism entry")
                if kw == "obj":
                    a = self.ident("object name")
                    self.expect("=>")
                    b = self.ident("object name")
                    if src is not None and a not in src.objects:
                        self.error(tok, f"unknown source object {a!r}")
                    if tgt is not None and b not in tgt.objects:
                        self.error(tok, f"unknown target object {b!r}")
                    if a in object_map:
                        self.error(tok, f"object {a!r} mapped twice")
                    object_map[a] = b
                elif kw == "arr":
                    a = self.ident("arrow name")
                    self.expect("=>")
                    path, anchor, ptok = self.dotted()
                    if src is not None and a not in src.arrows:
                        self.error(tok, f"unknown source arrow {a!r}")
                    if anchor is not None and tgt is not None and \
                            anchor not in tgt.objects:
                        self.error(ptok, f"unknown target object {anchor!r}")
                    for step in path:
                        if tgt is not None and step not in tgt.arrows:
                            self.error(ptok, f"unknown target arrow "
                                       f"{step!r}")
                    if a in arrow_map:
                        self.error(tok, f"arrow {a!r} mapped twice")
                    arrow_map[a] = path
                else:
                    self.fail(tok, f"unknown morphism entry {kw!r}")
            except _Recover:
                self.skip_to(entry_stops)
        if src is None or tgt is None:
            return
        self.decls.append(NamedMorphism(
            name, SketchMorphism(src, tgt, object_map, arrow_map)))

    # -- config

    def config_block(self) -> None:
        self.advance()
        name_tok = self.peek()
        name = self.ident("config name")
        self.declare(name, name_tok)
        self.expect("{")
        max_rounds: int | None = None
        rules: tuple[str, ...] | None = None
        while True:
            tok = self.peek()
            if tok.kind == "}":
                self.advance()
                break
            if tok.kind == "eof":
                self.fail(tok, "unterminated config block")
            key = self.ident("config key")
            self.expect("=")
            if key == "max_rounds":
                max_rounds = int(self.expect("num", "a number").text)
            elif key == "rules":
                ids = [self.ident("rule name")]
                while self.peek().kind == ",":
                    self.advance()
                    ids.append(self.ident("rule name"))
                rules = tuple(ids)
            else:
                self.fail(tok, f"unknown config key {key!r}")
        cfg = ChaseConfig(max_rounds=max_rounds
                          if max_rounds is not None else 32,
                          rule_subset=rules)
        self.decls.append(NamedConfig(name, cfg))


def parse(text: str, env: dict[str, Sketch] | None = None) -> list:
    """Parse a source text into declarations; raise ParseError on issues.

    Sketch names referenced by specs and morphisms resolve against the
    same text first, then ``env``, then the builtin sketches.
    """
    p = _Parser(text, env)
    decls = p.parse()
    if p.issues:
        raise ParseError(p.issues)
    return decls


# ---------------------------------------------------------------------------
# canonical text form
# ---------------------------------------------------------------------------


def _path_text(path: tuple[str, ...]) -> str:
    return ".".join(path)


def _eq_text(sk: Sketch, eq: PathEquation) -> str:
    lhs = _path_text(eq.lhs)
    if eq.rhs:
        return f"eq {lhs} = {_path_text(eq.rhs)}"
    return f"eq {lhs} = id({sk.arrows[eq.lhs[0]].src})"


def _serialize_sketch(sk: Sketch) -> str:
    lines = [f"sketch {sk.name} {{"]
    for ob in sorted(sk.objects):
        lines.append(f"  object {ob}")
    for aid in sorted(sk.arrows):
        a = sk.arrows[aid]
        flag = " [mono]" if aid in sk.monos else ""
        lines.append(f"  arrow {aid} : {a.src} -> {a.tgt}{flag}")
    for cname in sorted(sk.cones):
        cone = sk.cones[cname]
        lines.append(f"  cone {cname} : {cone.apex} {{")
        lines.append("    base")
        for node in sorted(cone.nodes):
            lines.append(f"      {node} : {cone.nodes[node]}")
        for e in sorted(cone.edges, key=lambda e: (e.src, e.tgt, e.path)):
            lines.append(f"      edge {e.src} -> {e.tgt} : "
                         f"{_path_text(e.path)}")
        lines.append("    ;")
        lines.append("    proj")
        for node in sorted(cone.projections):
            lines.append(f"      {node} -> {cone.projections[node]}")
        lines.append("  }")
    for eq in sorted(sk.equations, key=lambda q: (q.lhs, q.rhs)):
        lines.append(f"  {_eq_text(sk, eq)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _serialize_spec(decl: NamedSpec) -> str:
    r = decl.realization
    sk = r.over
    lines = [f"spec {decl.name} over {sk.name} {{"]
    for ob in sk.objects:
        for x in r.carrier[ob]:
            lines.append(f"  elem {x} : {ob}")
    for aid in sorted(sk.arrows):
        src = sk.arrows[aid].src
        for x in r.carrier[src]:
            lines.append(f"  act {aid}({x}) = {r.action[aid](x)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _serialize_morphism(decl: NamedMorphism) -> str:
    m = decl.morphism
    lines = [f"morphism {decl.name} : {m.src.name} -> {m.tgt.name} {{"]
    for ob in sorted(m.object_map):
        lines.append(f"  obj {ob} => {m.object_map[ob]}")
    for aid in sorted(m.arrow_map):
        path = m.arrow_map[aid]
        if path:
            image = _path_text(path)
        else:
            image = f"id({m.object_map[m.src.arrows[aid].src]})"
        lines.append(f"  arr {aid} => {image}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _serialize_config(decl: NamedConfig) -> str:
    lines = [f"config {decl.name} {{",
             f"  max_rounds = {decl.config.max_rounds}"]
    if decl.config.rule_subset is not None:
        lines.append(f"  rules = {', '.join(decl.config.rule_subset)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize(decl) -> str:
    """Render one declaration in canonical text form.

    The canonical form orders sketch sections as objects, arrows, cones,
    equations, each alphabetically; parsing it back yields a declaration
    equal to the alphabetised original, and serializing a parsed
    canonical file reproduces it byte for byte.  Specification carriers
    keep their declaration order because element order is meaningful.
    """
    if isinstance(decl, Sketch):
        return _serialize_sketch(decl)
    if isinstance(decl, NamedSpec):
        return _serialize_spec(decl)
    if isinstance(decl, NamedMorphism):
        return _serialize_morphism(decl)
    if isinstance(decl, NamedConfig):
        return _serialize_config(decl)
    raise TypeError(f"cannot serialize {type(decl).__name__}")


def serialize_file(decls) -> str:
    """Render several declarations separated by blank lines."""
    return "\n".join(serialize(d) for d in decls)


def canonical(sk: Sketch) -> Sketch:
    """The same sketch with every order-insensitive part alphabetised.

    Parsing a serialized sketch yields exactly ``canonical(sk)``; use it
    when comparing sketches that were built in different orders.
    """
    return Sketch(
        name=sk.name,
        objects=tuple(sorted(sk.objects)),
        arrows={aid: sk.arrows[aid] for aid in sorted(sk.arrows)},
        equations=tuple(sorted(sk.equations, key=lambda q: (q.lhs, q.rhs))),
        cones={
            cname: Cone(
                cname,
                sk.cones[cname].apex,
                {n: sk.cones[cname].nodes[n]
                 for n in sorted(sk.cones[cname].nodes)},
                tuple(sorted(sk.cones[cname].edges,
                             key=lambda e: (e.src, e.tgt, e.path))),
                {n: sk.cones[cname].projections[n]
                 for n in sorted(sk.cones[cname].projections)},
            )
            for cname in sorted(sk.cones)
        },
        monos=sk.monos,
    )


# ---------------------------------------------------------------------------
# JSON mirror
# ---------------------------------------------------------------------------


def _sketch_doc(sk: Sketch) -> dict:
    return {
        "kind": "sketch",
        "name": sk.name,
        "objects": sorted(sk.objects),
        "arrows": [
            {"id": aid, "src": sk.arrows[aid].src, "tgt": sk.arrows[aid].tgt}
            for aid in sorted(sk.arrows)
        ],
        "monos": sorted(sk.monos),
        "cones": [
            {
                "name": cname,
                "apex": sk.cones[cname].apex,
                "nodes": {n: sk.cones[cname].nodes[n]
                          for n in sorted(sk.cones[cname].nodes)},
                "edges": [
                    {"src": e.src, "tgt": e.tgt, "path": list(e.path)}
                    for e in sorted(sk.cones[cname].edges,
                                    key=lambda e: (e.src, e.tgt, e.path))
                ],
                "projections": {n: sk.cones[cname].projections[n]
                                for n in sorted(sk.cones[cname].projections)},
            }
            for cname in sorted(sk.cones)
        ],
        "equations": [
            {"lhs": list(eq.lhs), "rhs": list(eq.rhs)}
            for eq in sorted(sk.equations, key=lambda q: (q.lhs, q.rhs))
        ],
    }


def _spec_doc(decl: NamedSpec) -> dict:
    r = decl.realization
    return {
        "kind": "spec",
        "name": decl.name,
        "over": r.over.name,
        "carriers": {ob: list(r.carrier[ob].elements)
                     for ob in r.over.objects},
        "actions": {aid: {x: r.action[aid](x)
                          for x in r.carrier[r.over.arrows[aid].src]}
                    for aid in sorted(r.over.arrows)},
    }


def _morphism_doc(decl: NamedMorphism) -> dict:
    m = decl.morphism
    return {
        "kind": "morphism",
        "name": decl.name,
        "src": m.src.name,
        "tgt": m.tgt.name,
        "objects": {ob: m.object_map[ob] for ob in sorted(m.object_map)},
        "arrows": {aid: list(m.arrow_map[aid])
                   for aid in sorted(m.arrow_map)},
    }


def _config_doc(decl: NamedConfig) -> dict:
    return {
        "kind": "config",
        "name": decl.name,
        "max_rounds": decl.config.max_rounds,
        "rules": list(decl.config.rule_subset)
        if decl.config.rule_subset is not None else None,
    }


def to_jsonable(x):
    """Translate a declaration, report, or chase result to plain data."""
    if isinstance(x, Sketch):
        return _sketch_doc(x)
    if isinstance(x, NamedSpec):
        return _spec_doc(x)
    if isinstance(x, NamedMorphism):
        return _morphism_doc(x)
    if isinstance(x, NamedConfig):
        return _config_doc(x)
    if isinstance(x, ValidationReport):
        return [
            {"severity": v.severity, "code": v.code, "where": v.where,
             "message": v.message}
            for v in x.violations
        ]
    if isinstance(x, ChaseResult):
        return {"status": x.status, "rounds": x.rounds,
                "trace": trace_doc(x)["rounds"]}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(d) for d in x]
    raise TypeError(f"cannot serialize {type(x).__name__} to JSON")


def serialize_json(x) -> str:
    return json.dumps(to_jsonable(x), indent=2)


def parse_json(source, env: dict[str, Sketch] | None = None) -> list:
    """Read declarations back from their JSON form.

    ``source`` may be JSON text or already-loaded data; a single
    declaration object or a list of them.  References resolve the same
    way as in :func:`parse`.
    """
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as e:
            raise ParseError([ParseIssue(e.lineno, e.colno, e.msg)]) from e
    else:
        data = source
    docs = data if isinstance(data, list) else [data]
    issues: list[ParseIssue] = []
    local: dict[str, Sketch] = {}
    decls: list = []

    def find_sketch(name: str, where: str) -> Sketch | None:
        found = local.get(name) or (env or {}).get(name) or \
            builtin_sketches().get(name)
        if found is None:
            issues.append(ParseIssue(0, 0, f"{where}: unknown sketch "
                                     f"{name!r}"))
        return found

    for idx, doc in enumerate(docs):
        where = f"declaration {idx}"
        try:
            kind = doc["kind"]
            if kind == "sketch":
                sk = Sketch(
                    name=doc["name"],
                    objects=tuple(doc["objects"]),
                    arrows={a["id"]: ArrowDecl(a["id"], a["src"], a["tgt"])
                            for a in doc["arrows"]},
                    equations=tuple(
                        PathEquation(tuple(q["lhs"]), tuple(q["rhs"]))
                        for q in doc["equations"]),
                    cones={c["name"]: Cone(
                        c["name"], c["apex"], dict(c["nodes"]),
                        tuple(ConeEdge(e["src"], e["tgt"], tuple(e["path"]))
                              for e in c["edges"]),
                        dict(c["projections"]))
                        for c in doc["cones"]},
                    monos=frozenset(doc["monos"]),
                )
                local[sk.name] = sk
                decls.append(sk)
            elif kind == "spec":
                sk = find_sketch(doc["over"], where)
                if sk is None:
                    continue
                carrier = {ob: FinSet(tuple(xs))
                           for ob, xs in doc["carriers"].items()}
                action = {
                    aid: FinFunction(carrier[sk.arrows[aid].src],
                                     carrier[sk.arrows[aid].tgt],
                                     dict(table))
                    for aid, table in doc["actions"].items()
                }
                decls.append(NamedSpec(doc["name"],
                                       Realization(sk, carrier, action)))
            elif kind == "morphism":
                src = find_sketch(doc["src"], where)
                tgt = find_sketch(doc["tgt"], where)
                if src is None or tgt is None:
                    continue
                decls.append(NamedMorphism(doc["name"], SketchMorphism(
                    src, tgt, dict(doc["objects"]),
                    {a: tuple(p) for a, p in doc["arrows"].items()})))
            elif kind == "config":
                rules = doc.get("rules")
                decls.append(NamedConfig(doc["name"], ChaseConfig(
                    max_rounds=doc.get("max_rounds", 32),
                    rule_subset=tuple(rules) if rules is not None else None)))
            else:
                issues.append(ParseIssue(0, 0, f"{where}: unknown kind "
                                         f"{kind!r}"))
        except (KeyError, TypeError, ValueError) as e:
            issues.append(ParseIssue(0, 0, f"{where}: malformed document "
                                     f"({e})"))
    if issues:
        raise ParseError(issues)
    return decls


def parse_path(path, env: dict[str, Sketch] | None = None) -> list:
    """Load declarations from a ``.sk`` or ``.sk.json`` file."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return parse_json(text, env)
    return parse(text, env)
