"""Command-line front end over corpus files.

Exit codes: 0 success or clean report, 1 violations or a failed
saturation-dependent check, 2 usage, IO, or parse errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path

from . import dsl
from .engine import (
    ChaseConfig,
    apply_rule,
    compose_fractions,
    match_rule,
    rules_of,
    saturate,
    trace_lines,
    transport_spec,
)
from .localizer import as_localiser, break_cycles, check_sketch_morphism, find_cycles
from .realization import check_realization
from .sketch import Sketch, validate_sketch
from .yoneda import representable


class CliError(Exception):
    """A usage-level problem; reported on stderr with exit code 2."""


def corpus_dir():
    return resources.files("limsketch") / "corpus"


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _load(paths) -> list:
    decls: list = []
    env: dict[str, Sketch] = {}
    seen = set()
    for p in paths:
        key = str(Path(p).resolve())
        if key in seen:
            continue
        seen.add(key)
        for d in dsl.parse_path(p, env):
            decls.append(d)
            if isinstance(d, Sketch):
                env[d.name] = d
    return decls


def _pick(decls, kind, name, what):
    found = [d for d in decls if isinstance(d, kind)]
    if name is not None:
        for d in found:
            if d.name == name:
                return d
        raise CliError(f"no {what} named {name!r} in the given files")
    if len(found) == 1:
        return found[0]
    if not found:
        raise CliError(f"the given files contain no {what}")
    names = ", ".join(d.name for d in found)
    raise CliError(f"several {what}s present ({names}); pick one with "
                   f"--{what.replace(' ', '-')}")


def _rules_for(decls, spec, wanted_csv):
    """Locate the localiser morphism for the spec's sketch, then filter."""
    sources = [d for d in decls if isinstance(d, dsl.NamedMorphism)
               and d.morphism.src == spec.over]
    if not sources:
        if wanted_csv:
            raise CliError("no morphism out of the spec's sketch was "
                           "loaded, so no rules are available")
        return []
    if len(sources) > 1:
        names = ", ".join(d.name for d in sources)
        raise CliError(f"several candidate localisers ({names}); keep one "
                       "in the loaded files")
    rules = rules_of(as_localiser(sources[0].morphism))
    if not wanted_csv:
        return list(rules)
    chosen = []
    for token in wanted_csv.split(","):
        token = token.strip()
        hits = [r for r in rules if r.id == token] or \
            [r for r in rules if token in r.id]
        if len(hits) != 1:
            known = ", ".join(r.id for r in rules)
            raise CliError(f"rule {token!r} does not name exactly one of: "
                           f"{known}")
        if hits[0] not in chosen:
            chosen.append(hits[0])
    return chosen


def _carrier_sizes(spec):
    return {ob: len(spec.carrier[ob].elements) for ob in spec.over.objects}


def _added_elements(src, tgt):
    out = {}
    for ob in tgt.over.objects:
        before = set(src.carrier.get(ob, ()).elements) \
            if ob in src.carrier else set()
        new = [x for x in tgt.carrier[ob].elements if x not in before]
        if new:
            out[ob] = new
    return out


def _write_spec(out_dir, name, spec):
    """Write a self-contained file: the sketch plus the named spec."""
    path = Path(out_dir) / f"{name}.sk"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dsl.serialize_file([dsl.canonical(spec.over),
                                        dsl.NamedSpec(name, spec)]))
    return path


def _print_json(doc):
    print(json.dumps(doc, indent=2))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    decls = _load(args.files)
    if not decls:
        raise CliError("nothing to validate in the given files")
    entries = []
    bad = False
    for d in decls:
        if isinstance(d, Sketch):
            kind, rep = "sketch", validate_sketch(d)
        elif isinstance(d, dsl.NamedSpec):
            kind, rep = "spec", check_realization(d.realization)
        elif isinstance(d, dsl.NamedMorphism):
            kind, rep = "morphism", check_sketch_morphism(d.morphism)
        else:
            continue
        bad = bad or not rep.ok
        entries.append((d.name, kind, rep))
    if args.format == "json":
        _print_json([
            {"name": name, "kind": kind,
             "violations": json.loads(dsl.serialize_json(rep))}
            for name, kind, rep in entries
        ])
    else:
        for name, kind, rep in entries:
            print(f"{kind} {name}: {rep}")
    return 1 if bad else 0


def cmd_check_real(args) -> int:
    decls = _load(args.files)
    spec = _pick(decls, dsl.NamedSpec, args.spec, "spec")
    rep = check_realization(spec.realization)
    if args.format == "json":
        print(dsl.serialize_json(rep))
    else:
        print(f"spec {spec.name}: {rep}")
    return 0 if rep.ok else 1


def cmd_break(args) -> int:
    decls = _load(args.files)
    sk = _pick(decls, Sketch, args.sketch, "sketch")
    plan = [a.strip() for a in args.plan.split(",")] if args.plan else None
    cycles = find_cycles(sk)
    try:
        sp, loc = break_cycles(sk, plan)
    except ValueError as e:
        raise CliError(str(e))
    sp_named = dsl.canonical(dataclasses.replace(sp, name=f"{sk.name}_sp"))
    sigma = dsl.NamedMorphism(
        f"{sk.name}_sigma",
        dataclasses.replace(loc.underlying, src=sp_named))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sp_path = out / f"{sk.name}_sp.sk"
    sp_path.write_text(dsl.serialize(sp_named))
    sigma_path = out / f"{sk.name}_sigma.sk"
    sigma_path.write_text(dsl.serialize_file([dsl.canonical(sk), sp_named,
                                              sigma]))
    if args.format == "json":
        _print_json({
            "cycles": [[[a, d] for a, d in walk] for walk in cycles.cycles],
            "broken": [{"h": r.h, "c": r.c, "fresh": r.fresh}
                       for r in loc.broken],
            "files": {"sketch": str(sp_path), "sigma": str(sigma_path)},
        })
        return 0
    if cycles.cycles:
        for walk in cycles.cycles:
            print("cycle: " + " ".join(f"{a}({d})" for a, d in walk))
    else:
        print("no cycles")
    for r in loc.broken:
        print(f"broke {r.c} via {r.fresh} (mono {r.h})")
    print(f"wrote {sp_path}")
    print(f"wrote {sigma_path}")
    return 0


def cmd_saturate(args) -> int:
    decls = _load(args.files)
    spec = _pick(decls, dsl.NamedSpec, args.spec, "spec")
    rules = _rules_for(decls, spec.realization, args.rules)
    cfg = ChaseConfig(max_rounds=args.max_rounds)
    res = saturate(spec.realization, rules, cfg)
    if args.trace:
        trace_path = Path(args.trace)
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        if args.format == "json":
            trace_path.write_text(dsl.serialize_json(res) + "\n")
        else:
            trace_path.write_text("\n".join(trace_lines(res)) + "\n")
    if args.out:
        _write_spec(args.out, f"{spec.name}_saturated", res.result)
    if args.format == "json":
        doc = json.loads(dsl.serialize_json(res))
        doc["carriers"] = _carrier_sizes(res.result)
        _print_json(doc)
    else:
        print(f"status {res.status} rounds {res.rounds}")
        for ob, n in sorted(_carrier_sizes(res.result).items()):
            print(f"carrier {ob} {n}")
    return 0


def cmd_apply(args) -> int:
    decls = _load(args.files)
    spec = _pick(decls, dsl.NamedSpec, args.spec, "spec")
    rules = _rules_for(decls, spec.realization, args.rule)
    if len(rules) != 1:
        raise CliError(f"rule {args.rule!r} does not select exactly one "
                       "rule")
    rule = rules[0]
    matches = {m.element: m for m in match_rule(rule, spec.realization)}
    if args.element not in matches:
        known = ", ".join(sorted(matches)) or "none"
        raise CliError(f"no match at {args.element!r} for rule {rule.id} "
                       f"(matches: {known})")
    match = matches[args.element]
    if match.satisfied:
        raise CliError(f"match {args.element!r} is already satisfied; "
                       "nothing to apply")
    frac = apply_rule(spec.realization, rule, match)
    added = _added_elements(spec.realization, frac.tgt)
    if args.out:
        _write_spec(args.out, f"{spec.name}_step", frac.tgt)
    if args.format == "json":
        _print_json({"rule": rule.id, "match": args.element,
                     "certificate": frac.certificate, "added": added})
    else:
        print(f"applied {rule.id} at {args.element} "
              f"({frac.certificate})")
        for ob in sorted(added):
            print(f"add {ob} " + " ".join(added[ob]))
    return 0


def cmd_prove(args) -> int:
    script = Path(args.script)
    decls: list = []
    env: dict[str, Sketch] = {}
    spec = None
    fraction = None
    steps = 0
    for lineno, raw in enumerate(script.read_text().splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        where = f"{script}:{lineno}"
        if words[0] == "use" and len(words) == 2:
            target = (script.parent / words[1]).resolve() \
                if not Path(words[1]).is_absolute() else Path(words[1])
            for d in dsl.parse_path(target, env):
                decls.append(d)
                if isinstance(d, Sketch):
                    env[d.name] = d
        elif words[0] == "spec" and len(words) == 2:
            named = _pick(decls, dsl.NamedSpec, words[1], "spec")
            spec = named.realization
        elif words[0] == "step" and len(words) == 3:
            if spec is None:
                raise CliError(f"{where}: step before any 'spec' line")
            current = fraction.tgt if fraction is not None else spec
            rules = _rules_for(decls, current, words[1])
            if len(rules) != 1:
                raise CliError(f"{where}: rule {words[1]!r} is ambiguous")
            rule = rules[0]
            matches = {m.element: m for m in match_rule(rule, current)}
            if words[2] not in matches or matches[words[2]].satisfied:
                raise CliError(f"{where}: no unsatisfied match at "
                               f"{words[2]!r} for {rule.id}")
            step = apply_rule(current, rule, matches[words[2]])
            fraction = step if fraction is None else \
                compose_fractions(fraction, step)
            steps += 1
        else:
            raise CliError(f"{where}: unrecognised line {line!r}")
    if spec is None or fraction is None:
        raise CliError("script must name a spec and apply at least one "
                       "step")
    added = _added_elements(spec, fraction.tgt)
    if args.out:
        _write_spec(args.out, "proved", fraction.tgt)
    if args.format == "json":
        _print_json({"steps": steps, "certificate": fraction.certificate,
                     "added": added})
    else:
        print(f"proof of {steps} step(s) ({fraction.certificate})")
        for ob in sorted(added):
            print(f"add {ob} " + " ".join(added[ob]))
    return 0


def cmd_yoneda(args) -> int:
    decls = _load(args.files)
    sk = _pick(decls, Sketch, args.sketch, "sketch")
    try:
        rep = representable(sk, args.object)
    except ValueError as e:
        raise CliError(str(e))
    except RuntimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    named = dsl.NamedSpec(f"y_{args.object}", rep.spec)
    if args.out:
        path = _write_spec(args.out, named.name, rep.spec)
        print(f"wrote {path}")
    if args.format == "json":
        print(dsl.serialize_json(named))
    else:
        print(dsl.serialize(named), end="")
    return 0


def cmd_transport(args) -> int:
    decls = _load(args.files)
    morphism = _pick(decls, dsl.NamedMorphism, args.morphism, "morphism")
    spec = _pick(decls, dsl.NamedSpec, args.spec, "spec")
    if spec.realization.over != morphism.morphism.tgt:
        raise CliError(
            f"spec {spec.name!r} lives over "
            f"{spec.realization.over.name!r}, but morphism "
            f"{morphism.name!r} targets {morphism.morphism.tgt.name!r}")
    moved = transport_spec(morphism.morphism, spec.realization)
    named = dsl.NamedSpec(f"{spec.name}_along_{morphism.name}", moved)
    if args.out:
        path = _write_spec(args.out, named.name, moved)
        print(f"wrote {path}")
    if args.format == "json":
        print(dsl.serialize_json(named))
    else:
        print(dsl.serialize(named), end="")
    return 0


def cmd_corpus(args) -> int:
    files = sorted(p.name for p in corpus_dir().iterdir()
                   if p.name.endswith(".sk"))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name in files:
            (out / name).write_text((corpus_dir() / name).read_text())
        print(f"copied {len(files)} file(s) to {out}")
        return 0
    if args.format == "json":
        _print_json({"dir": str(corpus_dir()), "files": files})
    else:
        print(str(corpus_dir()))
        for name in files:
            print(name)
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="limsketch",
        description="Sketch-based logic definitions, specifications, and "
                    "chase saturation.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, files="+"):
        if files:
            p.add_argument("files", nargs=files,
                           help=".sk or .sk.json files, loaded in order")
        p.add_argument("--format", choices=("text", "json"),
                       default="text")

    p = sub.add_parser("validate",
                       help="validate every declaration in the files")
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("check-real",
                       help="check one specification against its sketch")
    common(p)
    p.add_argument("--spec", help="spec name when several are loaded")
    p.set_defaults(fn=cmd_check_real)

    p = sub.add_parser("break",
                       help="find cycles and break them into a span sketch")
    common(p)
    p.add_argument("--sketch", help="sketch name when several are loaded")
    p.add_argument("--plan", help="comma-separated arrows to break")
    p.add_argument("--out", default=".", help="directory for output files")
    p.set_defaults(fn=cmd_break)

    p = sub.add_parser("saturate",
                       help="chase a specification to its free theory")
    common(p)
    p.add_argument("--spec", help="spec name when several are loaded")
    p.add_argument("--rules", help="comma-separated rule ids (default all)")
    p.add_argument("--max-rounds", type=int, default=32)
    p.add_argument("--trace", help="write the trace to this path")
    p.add_argument("--out", help="directory for the saturated spec file")
    p.set_defaults(fn=cmd_saturate)

    p = sub.add_parser("apply", help="apply one rule at one match")
    common(p)
    p.add_argument("rule", help="rule id (or unique fragment)")
    p.add_argument("element", help="match element in the rule's apex")
    p.add_argument("--spec", help="spec name when several are loaded")
    p.add_argument("--out", help="directory for the result spec file")
    p.set_defaults(fn=cmd_apply)

    p = sub.add_parser("prove",
                       help="run a proof script and compose its steps")
    p.add_argument("script", help="use/spec/step script file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", help="directory for the final spec file")
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("yoneda",
                       help="the free specification on one element")
    common(p)
    p.add_argument("object", help="object of the sketch")
    p.add_argument("--sketch", help="sketch name when several are loaded")
    p.add_argument("--out", help="directory for the spec file")
    p.set_defaults(fn=cmd_yoneda)

    p = sub.add_parser("transport",
                       help="restrict a specification along a morphism")
    common(p)
    p.add_argument("--morphism", help="morphism name")
    p.add_argument("--spec", help="spec name")
    p.add_argument("--out", help="directory for the result spec file")
    p.set_defaults(fn=cmd_transport)

    p = sub.add_parser("corpus", help="locate or copy the shipped corpus")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", help="copy the corpus files to this directory")
    p.set_defaults(fn=cmd_corpus)

    return top


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except dsl.ParseError as e:
        for issue in e.issues:
            print(f"error: {issue}", file=sys.stderr)
        return 2
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
