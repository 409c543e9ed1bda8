"""Chase-style saturation and rule application for sketch realizations.

The free theory over a specification is computed by a chase: repair passes
make equations, mono injectivity, and limit cones hold, while rule firings
adjoin fresh witnesses for unmatched rule hypotheses.  Logical rules are
spans of representables read off a localiser, and every derivation step is
packaged as a fraction (a cospan whose left leg becomes invertible after
saturation).
"""
from __future__ import annotations

from dataclasses import dataclass

from .finset import FinFunction, FinSet, is_bijection
from .finset import pushout as finset_pushout
from .localizer import Localiser
from .realization import (
    RealMorphism,
    Realization,
    extend_morphism,
    identity_morphism,
    restrict_along,
)
from .sketch import Cone, Sketch

# Hard stops for runaway chases.  Passes loop within one repair call; the
# element budget counts every name ever created in a single chase state.
_MAX_PASSES = 64
_MAX_ELEMENTS = 500_000


class ChaseDiverged(RuntimeError):
    """Raised when repair fails to stabilise within the internal budget.

    This happens when the sketch still contains a productive cycle (for
    example a one-way rule arrow that was never broken), so the free
    closure of even a single generator is infinite.
    """


@dataclass(frozen=True)
class ChaseConfig:
    """Knobs for :func:`saturate`."""

    max_rounds: int = 32
    rule_subset: tuple[str, ...] | None = None
    deterministic_order: bool = True


@dataclass(frozen=True)
class Rule:
    """A logical rule presented as a span of representables.

    ``hypothesis`` is the representable at the match object, ``glue`` the
    representable at the witness object introduced by cycle breaking, and
    ``conclusion`` the representable at the target of the broken arrow.
    ``hyp_to_glue`` and ``concl_to_glue`` include both into the glue.
    """

    id: str
    hypothesis: Realization
    conclusion: Realization
    glue: Realization
    hyp_to_glue: RealMorphism
    concl_to_glue: RealMorphism
    apex: str
    fresh: str
    h_arrow: str
    c_arrow: str
    generator: str


@dataclass(frozen=True)
class Match:
    """One occurrence of a rule hypothesis inside a specification."""

    rule_id: str
    element: str
    satisfied: bool
    morphism: RealMorphism


@dataclass(frozen=True)
class Fraction:
    """A formal fraction src -> mid <- tgt.

    ``h`` embeds the source into the middle object and is the leg that
    saturation inverts; ``c`` embeds the target.  ``certificate`` is
    ``"by-construction"`` for fractions produced by the calculus itself and
    ``"checked"`` when equivalence was verified by saturating both ends.
    """

    src: Realization
    tgt: Realization
    mid: Realization
    h: RealMorphism
    c: RealMorphism
    certificate: str


@dataclass(frozen=True)
class TraceRound:
    round: int
    fired: tuple[tuple[str, str], ...]
    added: dict[str, tuple[str, ...]]
    identified: tuple[tuple[str, str, str], ...]


@dataclass(frozen=True)
class ChaseTrace:
    rounds: tuple[TraceRound, ...]


@dataclass(frozen=True)
class ChaseResult:
    result: Realization
    status: str
    rounds: int
    trace: ChaseTrace
    embedding: RealMorphism


class _Chase:
    """Mutable chase state: named elements, partial actions, a union-find.

    Representatives are always the oldest element of their class, so input
    names survive identification with freshly created ones.  Action tables
    are keyed by representatives; values are resolved lazily on read.
    """

    def __init__(self, sk: Sketch, carriers: dict[str, tuple[str, ...]],
                 actions: dict[str, dict[str, str]]):
        self.sk = sk
        self.elems: dict[str, list[str]] = {ob: [] for ob in sk.objects}
        self.index: dict[str, set[str]] = {ob: set() for ob in sk.objects}
        self.parent: dict[str, dict[str, str]] = {ob: {} for ob in sk.objects}
        self.birth: dict[str, dict[str, int]] = {ob: {} for ob in sk.objects}
        self.clock = 0
        self.fresh_counter = 0
        for ob in sk.objects:
            for x in carriers.get(ob, ()):
                self._register(ob, x)
        self.act: dict[str, dict[str, str]] = {
            a: dict(actions.get(a, {})) for a in sk.arrows
        }
        self.pending: list[tuple[str, str, str]] = []
        self.round_added: dict[str, list[str]] = {ob: [] for ob in sk.objects}
        self.round_identified: list[tuple[str, str, str]] = []

    # -- elements ---------------------------------------------------------

    def _register(self, ob: str, name: str) -> None:
        if self.clock >= _MAX_ELEMENTS:
            raise ChaseDiverged(
                "chase element budget exceeded; the sketch likely has an "
                "unbroken productive cycle")
        self.elems[ob].append(name)
        self.index[ob].add(name)
        self.parent[ob][name] = name
        self.birth[ob][name] = self.clock
        self.clock += 1

    def fresh(self, ob: str) -> str:
        while True:
            name = f"{ob}#{self.fresh_counter}"
            self.fresh_counter += 1
            if name not in self.index[ob]:
                break
        self._register(ob, name)
        self.round_added[ob].append(name)
        return name

    def find(self, ob: str, x: str) -> str:
        p = self.parent[ob]
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def reps(self, ob: str) -> list[str]:
        p = self.parent[ob]
        return [x for x in self.elems[ob] if p[x] == x]

    # -- actions ----------------------------------------------------------

    def get(self, aid: str, x: str) -> str | None:
        v = self.act[aid].get(x)
        if v is None:
            return None
        tgt = self.sk.arrows[aid].tgt
        r = self.find(tgt, v)
        if r != v:
            self.act[aid][x] = r
        return r

    def put(self, aid: str, x: str, y: str) -> None:
        cur = self.get(aid, x)
        if cur is None:
            self.act[aid][x] = y
        elif cur != y:
            self.enqueue(self.sk.arrows[aid].tgt, cur, y)

    def try_eval(self, path: tuple[str, ...], x: str) -> str | None:
        for a in path:
            nxt = self.get(a, x)
            if nxt is None:
                return None
            x = nxt
        return x

    def eval_create(self, path: tuple[str, ...], x: str) -> str:
        """Evaluate a path, inventing fresh elements where actions stop."""
        for a in path:
            nxt = self.get(a, x)
            if nxt is None:
                nxt = self.fresh(self.sk.arrows[a].tgt)
                self.act[a][x] = nxt
            x = nxt
        return x

    def force_path(self, path: tuple[str, ...], x: str, value: str,
                   anchor: str) -> None:
        """Make ``path`` defined at ``x`` with final value ``value``."""
        if not path:
            self.enqueue(anchor, x, value)
            return
        for a in path[:-1]:
            nxt = self.get(a, x)
            if nxt is None:
                nxt = self.fresh(self.sk.arrows[a].tgt)
                self.act[a][x] = nxt
            x = nxt
        self.put(path[-1], x, value)

    # -- identification ---------------------------------------------------

    def enqueue(self, ob: str, a: str, b: str) -> None:
        self.pending.append((ob, a, b))

    def drain(self) -> bool:
        """Apply queued identifications, cascading through actions."""
        merged = False
        while self.pending:
            ob, a, b = self.pending.pop(0)
            ra, rb = self.find(ob, a), self.find(ob, b)
            if ra == rb:
                continue
            births = self.birth[ob]
            keep, drop = (ra, rb) if births[ra] <= births[rb] else (rb, ra)
            self.parent[ob][drop] = keep
            self.round_identified.append((ob, keep, drop))
            merged = True
            for aid in sorted(self.sk.arrows):
                decl = self.sk.arrows[aid]
                if decl.src != ob:
                    continue
                table = self.act[aid]
                moved = table.pop(drop, None)
                if moved is None:
                    continue
                if keep in table:
                    self.enqueue(decl.tgt, table[keep], moved)
                else:
                    table[keep] = moved
        return merged

    # -- repair passes ----------------------------------------------------

    def pass_equations(self) -> bool:
        changed = False
        for eq in self.sk.equations:
            anchor = self.sk.arrows[eq.lhs[0]].src
            end_ob = self.sk.arrows[eq.lhs[-1]].tgt
            for x in self.reps(anchor):
                lv = self.try_eval(eq.lhs, x)
                rv = self.try_eval(eq.rhs, x)
                if lv is None and rv is None:
                    continue
                if lv is not None and rv is not None:
                    if lv != rv:
                        self.enqueue(end_ob, lv, rv)
                        changed = True
                elif rv is not None:
                    self.force_path(eq.lhs, x, rv, anchor)
                    changed = True
                else:
                    self.force_path(eq.rhs, x, lv, anchor)
                    changed = True
        if self.drain():
            changed = True
        return changed

    def pass_monos(self) -> bool:
        changed = False
        for m in sorted(self.sk.monos):
            src = self.sk.arrows[m].src
            seen: dict[str, str] = {}
            for x in self.reps(src):
                y = self.get(m, x)
                if y is None:
                    continue
                prev = seen.get(y)
                if prev is None:
                    seen[y] = x
                elif prev != x:
                    self.enqueue(src, prev, x)
                    changed = True
        if self.drain():
            changed = True
        return changed

    def pass_totality(self) -> bool:
        changed = False
        for aid in sorted(self.sk.arrows):
            decl = self.sk.arrows[aid]
            for x in self.reps(decl.src):
                if self.get(aid, x) is None:
                    self.act[aid][x] = self.fresh(decl.tgt)
                    changed = True
        return changed

    def pass_cones(self) -> bool:
        changed = False
        for name in sorted(self.sk.cones):
            if self._repair_cone(self.sk.cones[name]):
                changed = True
        return changed

    def _repair_cone(self, cone: Cone) -> bool:
        changed = False
        keys = sorted(cone.projections)
        # Projection tuples of apex elements whose projections all exist.
        tuples: dict[str, tuple[str, ...]] = {}
        for x in self.reps(cone.apex):
            vals = []
            for n in keys:
                v = self.get(cone.projections[n], x)
                if v is None:
                    break
                vals.append(v)
            else:
                tuples[x] = tuple(vals)
        families = self._families(cone)
        by_restriction: dict[tuple[str, ...], list[dict[str, str]]] = {}
        for fam in families:
            key = tuple(fam[n] for n in keys)
            by_restriction.setdefault(key, []).append(fam)
        # Ambiguous extensions: merge the competing families pointwise.
        for fams in by_restriction.values():
            base = fams[0]
            for other in fams[1:]:
                for n in sorted(cone.nodes):
                    self.enqueue(cone.nodes[n], base[n], other[n])
                changed = True
        # Comparison injectivity: equal tuples force equal apex elements.
        seen: dict[tuple[str, ...], str] = {}
        for x, t in tuples.items():
            prev = seen.get(t)
            if prev is None:
                seen[t] = x
            else:
                self.enqueue(cone.apex, prev, x)
                changed = True
        # Comparison surjectivity: every family needs an apex element.
        for t in by_restriction:
            if t not in seen:
                x = self.fresh(cone.apex)
                for n, v in zip(keys, t):
                    self.act[cone.projections[n]][x] = v
                seen[t] = x
                changed = True
        # Unrealised tuples: build the missing family from scratch.
        for x, t in tuples.items():
            if t not in by_restriction:
                self._create_family(cone, dict(zip(keys, t)))
                by_restriction[t] = []
                changed = True
        if self.drain():
            changed = True
        return changed

    def _families(self, cone: Cone) -> list[dict[str, str]]:
        """Enumerate all fully defined compatible families over the base.

        Nodes determined by an edge out of an assigned node are filled by
        evaluation; remaining nodes are enumerated, highest out-degree
        first so that constraint propagation prunes early.
        """
        nodes = sorted(cone.nodes)
        out_deg = {n: 0 for n in nodes}
        for e in cone.edges:
            out_deg[e.src] += 1
        enum_order = sorted(nodes, key=lambda n: (-out_deg[n], n))
        results: list[dict[str, str]] = []

        def propagate(assign: dict[str, str]) -> dict[str, str] | None:
            work = True
            while work:
                work = False
                for e in cone.edges:
                    if e.src not in assign:
                        continue
                    v = self.try_eval(e.path, assign[e.src])
                    if v is None:
                        return None
                    if e.tgt in assign:
                        if assign[e.tgt] != v:
                            return None
                    else:
                        assign[e.tgt] = v
                        work = True
            return assign

        def rec(assign: dict[str, str]) -> None:
            assign = propagate(assign)
            if assign is None:
                return
            pick = next((n for n in enum_order if n not in assign), None)
            if pick is None:
                if len(results) >= _MAX_ELEMENTS:
                    raise ChaseDiverged(
                        "cone family enumeration exceeded the chase budget")
                results.append(assign)
                return
            for v in self.reps(cone.nodes[pick]):
                rec({**assign, pick: v})

        rec({})
        return results

    def _create_family(self, cone: Cone, values: dict[str, str]) -> None:
        """Realise a family extending ``values`` (the projected nodes)."""
        local = dict(values)
        while len(local) < len(cone.nodes):
            progressed = False
            for e in cone.edges:
                if e.src in local and e.tgt not in local:
                    local[e.tgt] = self.eval_create(e.path, local[e.src])
                    progressed = True
            if progressed:
                continue
            missing = next(n for n in sorted(cone.nodes) if n not in local)
            local[missing] = self.fresh(cone.nodes[missing])
        for e in cone.edges:
            cur = self.try_eval(e.path, local[e.src])
            if cur is None:
                self.force_path(e.path, local[e.src], local[e.tgt],
                                cone.nodes[e.src])
            elif cur != local[e.tgt]:
                self.enqueue(cone.nodes[e.tgt], cur, local[e.tgt])

    def repair(self, full: bool) -> None:
        for _ in range(_MAX_PASSES):
            changed = False
            if self.pass_equations():
                changed = True
            if self.pass_monos():
                changed = True
            if full and self.pass_cones():
                changed = True
            if self.pass_totality():
                changed = True
            if self.drain():
                changed = True
            if not changed:
                return
        raise ChaseDiverged(
            "repair did not stabilise; the sketch likely has an unbroken "
            "productive cycle")

    # -- rule machinery ---------------------------------------------------

    def unsatisfied(self, rules: list[Rule]) -> list[tuple[Rule, str]]:
        out: list[tuple[Rule, str]] = []
        for rule in rules:
            image: set[str] = set()
            for w in self.reps(rule.fresh):
                v = self.get(rule.h_arrow, w)
                if v is not None:
                    image.add(v)
            for x in self.reps(rule.apex):
                if x not in image:
                    out.append((rule, x))
        return out

    def fire(self, rule: Rule, element: str) -> None:
        witness = self.fresh(rule.fresh)
        self.act[rule.h_arrow][witness] = element

    # -- extraction -------------------------------------------------------

    def take_round(self) -> tuple[dict[str, tuple[str, ...]],
                                  tuple[tuple[str, str, str], ...]]:
        added = {ob: tuple(names) for ob, names in self.round_added.items()
                 if names}
        identified = tuple(self.round_identified)
        self.round_added = {ob: [] for ob in self.sk.objects}
        self.round_identified = []
        return added, identified

    def realization(self) -> Realization:
        carrier = {ob: FinSet(tuple(self.reps(ob))) for ob in self.sk.objects}
        action = {}
        for aid, decl in self.sk.arrows.items():
            mapping = {x: self.get(aid, x) for x in carrier[decl.src].elements}
            action[aid] = FinFunction(carrier[decl.src], carrier[decl.tgt],
                                      mapping)
        return Realization(self.sk, carrier, action)

    def embedding_from(self, before: Realization,
                       result: Realization) -> RealMorphism:
        components = {}
        for ob in self.sk.objects:
            mapping = {x: self.find(ob, x)
                       for x in before.carrier[ob].elements}
            components[ob] = FinFunction(before.carrier[ob],
                                         result.carrier[ob], mapping)
        return RealMorphism(before, result, components)


def _state_of(spec: Realization) -> _Chase:
    carriers = {ob: spec.carrier[ob].elements for ob in spec.over.objects}
    actions = {a: dict(spec.action[a].mapping) for a in spec.over.arrows}
    return _Chase(spec.over, carriers, actions)


def saturate(spec: Realization, rules: list[Rule],
             cfg: ChaseConfig | None = None) -> ChaseResult:
    """Chase ``spec`` to its free theory under ``rules``.

    Each round fires every currently unsatisfied match in parallel (rules
    in the given order, matches in carrier order) and then repairs.  The
    chase stops at a fixpoint, or with status ``"capped"`` after
    ``cfg.max_rounds`` rounds; a capped result is a sound partial
    approximation that still embeds into the free theory.
    """
    cfg = cfg or ChaseConfig()
    active = list(rules)
    if cfg.rule_subset is not None:
        wanted = set(cfg.rule_subset)
        active = [r for r in active if r.id in wanted]
    st = _state_of(spec)
    trace: list[TraceRound] = []

    def close_round(n: int, fired: tuple[tuple[str, str], ...]) -> None:
        added, identified = st.take_round()
        trace.append(TraceRound(n, fired, added, identified))

    st.repair(full=True)
    close_round(0, ())
    rounds = 0
    while True:
        matches = st.unsatisfied(active)
        if not matches:
            status = "fixpoint"
            break
        fired = tuple((r.id, x) for r, x in matches)
        for rule, x in matches:
            st.fire(rule, x)
        rounds += 1
        if rounds >= cfg.max_rounds:
            st.repair(full=False)
            close_round(rounds, fired)
            status = "capped"
            break
        st.repair(full=True)
        close_round(rounds, fired)
    result = st.realization()
    embedding = st.embedding_from(spec, result)
    return ChaseResult(result, status, rounds, ChaseTrace(tuple(trace)),
                       embedding)


def rules_of(loc: Localiser, cfg: ChaseConfig | None = None) -> list[Rule]:
    """Read the logical rules off a localiser, ordered by rule id.

    Each broken arrow c: H' -> C with section witness h: H' -> H yields the
    rule whose hypothesis is the representable at H, glued along the
    representable at H' to the conclusion at C.
    """
    from .yoneda import representable

    sk = loc.underlying.src
    out: list[Rule] = []
    for rec in loc.broken:
        h_decl = sk.arrows[rec.h]
        c_decl = sk.arrows[rec.c]
        apex, fresh_ob, concl_ob = h_decl.tgt, h_decl.src, c_decl.tgt
        hyp = representable(sk, apex, cfg)
        glue = representable(sk, fresh_ob, cfg)
        concl = representable(sk, concl_ob, cfg)
        h_img = glue.spec.action[rec.h](glue.generator)
        c_img = glue.spec.action[rec.c](glue.generator)
        hyp_to_glue = extend_morphism(hyp.spec, glue.spec,
                                      {apex: {hyp.generator: h_img}})
        concl_to_glue = extend_morphism(concl.spec, glue.spec,
                                        {concl_ob: {concl.generator: c_img}})
        if hyp_to_glue is None or concl_to_glue is None:
            raise RuntimeError(
                f"representable inclusions for rule {rec.c} did not extend")
        out.append(Rule(rec.c, hyp.spec, concl.spec, glue.spec, hyp_to_glue,
                        concl_to_glue, apex, fresh_ob, rec.h, rec.c,
                        hyp.generator))
    out.sort(key=lambda r: r.id)
    return out


def match_rule(rule: Rule, spec: Realization) -> list[Match]:
    """List all matches of ``rule`` in ``spec``, in carrier order.

    A match is satisfied when its element already lies in the image of the
    section witness arrow, i.e. the rule has already been applied there.
    """
    image = set(spec.action[rule.h_arrow].mapping.values())
    out = []
    for x in spec.carrier[rule.apex].elements:
        phi = extend_morphism(rule.hypothesis, spec,
                              {rule.apex: {rule.generator: x}})
        if phi is None:
            raise RuntimeError(
                f"match {x} of rule {rule.id} has no classifying morphism; "
                "is the specification cone-valid?")
        out.append(Match(rule.id, x, x in image, phi))
    return out


def _glue_state(sk: Sketch, left: Realization, right: Realization,
                left_leg: dict[str, FinFunction],
                right_leg: dict[str, FinFunction]) -> tuple[
                    _Chase, dict[str, dict[str, str]],
                    dict[str, dict[str, str]]]:
    """Push two realizations out over a common shape and seed a chase.

    ``left_leg`` and ``right_leg`` are the componentwise legs of the span
    being pushed out (same domain, into ``left`` and ``right``).  Glued
    classes are renamed to prefer ``right``'s element names over
    ``left``'s, and the carrier order lists ``right``'s classes first, so
    the names of the specification being extended survive the gluing.
    Returns the seeded state plus the renamed injections of both sides.
    """
    carriers: dict[str, tuple[str, ...]] = {}
    left_inj: dict[str, dict[str, str]] = {}
    right_inj: dict[str, dict[str, str]] = {}
    for ob in sk.objects:
        p, ib, ic = finset_pushout(left_leg[ob], right_leg[ob])
        rename: dict[str, str] = {}
        taken: set[str] = set()
        ordered: list[str] = []
        for source, inj in ((right, ic), (left, ib)):
            for s in source.carrier[ob].elements:
                cls = inj(s)
                if cls in rename:
                    continue
                name = s
                while name in taken:
                    name += "'"
                rename[cls] = name
                taken.add(name)
                ordered.append(name)
        for cls in p.elements:
            if cls not in rename:
                name = cls
                while name in taken:
                    name += "'"
                rename[cls] = name
                taken.add(name)
                ordered.append(name)
        carriers[ob] = tuple(ordered)
        left_inj[ob] = {x: rename[ib(x)]
                        for x in left.carrier[ob].elements}
        right_inj[ob] = {x: rename[ic(x)]
                         for x in right.carrier[ob].elements}
    st = _Chase(sk, carriers, {})
    for aid, decl in sk.arrows.items():
        for x, y in left.action[aid].mapping.items():
            st.put(aid, left_inj[decl.src][x], left_inj[decl.tgt][y])
        for x, y in right.action[aid].mapping.items():
            st.put(aid, right_inj[decl.src][x], right_inj[decl.tgt][y])
    st.drain()
    return st, left_inj, right_inj


def apply_rule(spec: Realization, rule: Rule, match: Match) -> Fraction:
    """Fire one rule match by gluing, then repairing; returns the step.

    The result specification is the middle object of the returned fraction;
    ``h`` is the embedding of ``spec`` into it and ``c`` the identity.
    """
    if match.element in spec.action[rule.h_arrow].mapping.values():
        raise ValueError(
            f"redundant step: match {match.element} of rule {rule.id} is "
            "already satisfied")
    sk = spec.over
    st, _, spec_inj = _glue_state(
        sk, rule.glue, spec,
        {ob: rule.hyp_to_glue.components[ob] for ob in sk.objects},
        {ob: match.morphism.components[ob] for ob in sk.objects})
    st.repair(full=True)
    result = st.realization()
    components = {}
    for ob in sk.objects:
        mapping = {x: st.find(ob, spec_inj[ob][x])
                   for x in spec.carrier[ob].elements}
        components[ob] = FinFunction(spec.carrier[ob], result.carrier[ob],
                                     mapping)
    emb = RealMorphism(spec, result, components)
    return Fraction(spec, result, result, emb, identity_morphism(result),
                    "by-construction")


def is_theory(spec: Realization, rules: list[Rule]) -> bool:
    """True when every match of every rule is already satisfied."""
    for rule in rules:
        image = set(spec.action[rule.h_arrow].mapping.values())
        for x in spec.carrier[rule.apex].elements:
            if x not in image:
                return False
    return True


def identity_fraction(spec: Realization) -> Fraction:
    i = identity_morphism(spec)
    return Fraction(spec, spec, spec, i, i, "by-construction")


def induced_isomorphism(a: ChaseResult, b: ChaseResult) -> RealMorphism | None:
    """Map one chase result onto another over the same input, if possible.

    Seeds with the two embeddings of the shared input specification and
    extends; returns the morphism when it exists and is a componentwise
    bijection, else None.  This is how large saturations are compared,
    since brute-force isomorphism search does not scale past toy carriers.
    """
    src = a.embedding.src
    seed: dict[str, dict[str, str]] = {}
    for ob in src.over.objects:
        seed[ob] = {}
        for x in src.carrier[ob].elements:
            lhs = a.embedding.components[ob](x)
            rhs = b.embedding.components[ob](x)
            if seed[ob].get(lhs, rhs) != rhs:
                return None
            seed[ob][lhs] = rhs
    phi = extend_morphism(a.result, b.result, seed)
    if phi is None:
        return None
    if not all(is_bijection(phi.components[ob]) for ob in src.over.objects):
        return None
    return phi


def check_fraction(frac: Fraction, rules: list[Rule],
                   cfg: ChaseConfig | None = None) -> None:
    """Verify that a fraction's legs agree after saturation.

    Saturates the source and the middle object under the same rules and
    requires the induced map between the two theories to be an
    isomorphism.  Raises ``RuntimeError`` with the reason otherwise.
    """
    sat_src = saturate(frac.src, rules, cfg)
    sat_mid = saturate(frac.mid, rules, cfg)
    if sat_src.status != "fixpoint" or sat_mid.status != "fixpoint":
        raise RuntimeError("fraction check inconclusive: saturation capped")
    seed: dict[str, dict[str, str]] = {}
    for ob in frac.src.over.objects:
        seed[ob] = {}
        for x in frac.src.carrier[ob].elements:
            lhs = sat_src.embedding.components[ob](x)
            rhs = sat_mid.embedding.components[ob](frac.h.components[ob](x))
            seed[ob][lhs] = rhs
    induced = extend_morphism(sat_src.result, sat_mid.result, seed)
    if induced is None:
        raise RuntimeError(
            "fraction check failed: no induced map between the saturations")
    if not all(is_bijection(induced.components[ob])
               for ob in frac.src.over.objects):
        raise RuntimeError(
            "fraction check failed: the induced map is not an isomorphism")


def compose_fractions(f1: Fraction, f2: Fraction,
                      rules: list[Rule] | None = None,
                      cfg: ChaseConfig | None = None) -> Fraction:
    """Compose two fractions by pushing out their middle objects.

    Requires ``f1.tgt`` and ``f2.src`` to be the same specification.  When
    both inputs carry a by-construction certificate so does the result;
    otherwise ``rules`` must be supplied and the composite is certified by
    saturating (certificate ``"checked"``).
    """
    if f1.tgt is not f2.src and f1.tgt != f2.src:
        raise ValueError("fractions do not meet end to end")
    sk = f1.src.over
    st, second_inj, first_inj = _glue_state(
        sk, f2.mid, f1.mid,
        {ob: f2.h.components[ob] for ob in sk.objects},
        {ob: f1.c.components[ob] for ob in sk.objects})
    st.repair(full=True)
    mid = st.realization()

    def leg(inj: dict[str, dict[str, str]],
            pre: RealMorphism) -> RealMorphism:
        components = {}
        for ob in sk.objects:
            mapping = {x: st.find(ob, inj[ob][pre.components[ob](x)])
                       for x in pre.src.carrier[ob].elements}
            components[ob] = FinFunction(pre.src.carrier[ob],
                                         mid.carrier[ob], mapping)
        return RealMorphism(pre.src, mid, components)

    h = leg(first_inj, f1.h)
    c = leg(second_inj, f2.c)
    certificate = "by-construction"
    if not (f1.certificate == "by-construction"
            and f2.certificate == "by-construction"):
        if rules is None:
            raise ValueError(
                "composing checked fractions needs the rule set to "
                "re-certify the composite")
        composite = Fraction(f1.src, f2.tgt, mid, h, c, "checked")
        check_fraction(composite, rules, cfg)
        certificate = "checked"
    return Fraction(f1.src, f2.tgt, mid, h, c, certificate)


def transport_spec(sigma, theory: Realization) -> Realization:
    """Pull a theory over the broken sketch back along the localiser."""
    return restrict_along(sigma, theory)


def trace_lines(res: ChaseResult) -> list[str]:
    """Render a chase trace as stable, diff-friendly text lines."""
    lines = []
    for r in res.trace.rounds:
        lines.append(f"round {r.round}")
        for rid, elem in r.fired:
            lines.append(f"  fire {rid} {elem}")
        for ob in sorted(r.added):
            for name in r.added[ob]:
                lines.append(f"  add {ob} {name}")
        for ob, kept, dropped in r.identified:
            lines.append(f"  ident {ob} {kept} {dropped}")
    lines.append(f"status {res.status} rounds {res.rounds}")
    return lines


def trace_doc(res: ChaseResult) -> dict:
    """Render a chase trace as a JSON-ready document."""
    return {
        "status": res.status,
        "rounds": [
            {
                "round": r.round,
                "fired": [{"rule": rid, "match": elem}
                          for rid, elem in r.fired],
                "added": {ob: list(r.added[ob]) for ob in sorted(r.added)},
                "identified": [{"object": ob, "kept": kept, "dropped": drop}
                               for ob, kept, drop in r.identified],
            }
            for r in res.trace.rounds
        ],
    }
