"""Finite set-valued models of sketches and their natural transformations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .finset import FinDiagram, FinFunction, FinSet, compose, identity, is_bijection, limit
from .localizer import SketchMorphism, check_sketch_morphism
from .sketch import Cone, Sketch, ValidationReport, Violation


@dataclass(frozen=True)
class Realization:
    """Carriers for every object and a total function for every arrow."""

    over: Sketch
    carrier: dict[str, FinSet]
    action: dict[str, FinFunction]


@dataclass(frozen=True)
class RealMorphism:
    src: Realization
    tgt: Realization
    components: dict[str, FinFunction]

    def __call__(self, ob: str, elem: str) -> str:
        return self.components[ob](elem)


def empty_realization(sk: Sketch) -> Realization:
    empty = FinSet(())
    return Realization(
        over=sk,
        carrier={ob: empty for ob in sk.objects},
        action={a: FinFunction(empty, empty, {}) for a in sk.arrows},
    )


def path_action(R: Realization, path: tuple[str, ...], at: str) -> FinFunction:
    """The composite function along an arrow path anchored at ``at``."""
    fn = identity(R.carrier[at])
    for a in path:
        fn = compose(fn, R.action[a])
    return fn


def identity_morphism(R: Realization) -> RealMorphism:
    return RealMorphism(R, R, {ob: identity(s) for ob, s in R.carrier.items()})


def compose_morphisms(f: RealMorphism, g: RealMorphism) -> RealMorphism:
    if f.tgt.carrier != g.src.carrier:
        raise ValueError("morphisms do not meet end to end")
    return RealMorphism(
        f.src, g.tgt, {ob: compose(f.components[ob], g.components[ob]) for ob in f.components}
    )


# ---------------------------------------------------------------------------
# cone semantics
# ---------------------------------------------------------------------------


def realized_base(R: Realization, cone: Cone) -> FinDiagram:
    nodes = {n: R.carrier[ob] for n, ob in cone.nodes.items()}
    edges = {}
    for i, e in enumerate(cone.edges):
        edges[f"e{i}"] = (e.src, e.tgt, path_action(R, e.path, cone.nodes[e.src]))
    return FinDiagram(nodes, edges)


def base_families(R: Realization, cone: Cone) -> list[dict[str, str]]:
    """Every compatible family of the realized base, as node -> element dicts."""
    lim, projs = limit(realized_base(R, cone))
    return [{n: projs[n](x) for n in cone.nodes} for x in lim]


def _restrictions(cone: Cone, families: list[dict[str, str]]) -> dict[tuple[str, ...], int]:
    keys = sorted(cone.projections)
    counts: dict[tuple[str, ...], int] = {}
    for fam in families:
        t = tuple(fam[n] for n in keys)
        counts[t] = counts.get(t, 0) + 1
    return counts


def apex_tuple(R: Realization, cone: Cone, x: str) -> tuple[str, ...]:
    return tuple(R.action[cone.projections[n]](x) for n in sorted(cone.projections))


def _check_cone(R: Realization, cone: Cone, out: list[Violation]) -> None:
    where = f"cone {cone.name}"
    counts = _restrictions(cone, base_families(R, cone))
    seen: dict[tuple[str, ...], str] = {}
    for x in R.carrier[cone.apex]:
        t = apex_tuple(R, cone, x)
        if t not in counts:
            out.append(
                Violation(
                    "cone-comparison-unrealized",
                    where,
                    f"apex element {x!r} projects to {t}, which no base family restricts to",
                )
            )
        elif t in seen:
            out.append(
                Violation(
                    "cone-comparison-not-injective",
                    where,
                    f"apex elements {seen[t]!r} and {x!r} both project to {t}",
                )
            )
        else:
            seen[t] = x
    for t, n in sorted(counts.items()):
        if t not in seen:
            out.append(
                Violation(
                    "cone-comparison-not-surjective",
                    where,
                    f"no apex element projects to the family restriction {t}",
                )
            )
        if n > 1:
            out.append(
                Violation(
                    "cone-ambiguous-extension",
                    where,
                    f"restriction {t} extends to {n} distinct base families",
                )
            )


# ---------------------------------------------------------------------------
# checking
# ---------------------------------------------------------------------------


def check_realization(R: Realization) -> ValidationReport:
    """Typing, equations, mono injectivity, and cone bijectivity."""
    out: list[Violation] = []
    sk = R.over
    for ob in sk.objects:
        if ob not in R.carrier:
            out.append(Violation("missing-carrier", ob, f"no carrier for object {ob!r}"))
    for aid, decl in sk.arrows.items():
        fn = R.action.get(aid)
        if fn is None:
            out.append(Violation("missing-action", aid, f"no action for arrow {aid!r}"))
        elif fn.dom != R.carrier.get(decl.src) or fn.cod != R.carrier.get(decl.tgt):
            out.append(
                Violation("action-type", aid, f"action of {aid!r} does not match its carriers")
            )
    if out:
        return ValidationReport(tuple(out))
    for i, eq in enumerate(sk.equations):
        at = sk.arrows[eq.lhs[0]].src
        lhs = path_action(R, eq.lhs, at)
        rhs = path_action(R, eq.rhs, at)
        for x in R.carrier[at]:
            if lhs(x) != rhs(x):
                out.append(
                    Violation(
                        "equation-violated",
                        f"equation#{i}",
                        f"sides disagree at {x!r}: {lhs(x)!r} != {rhs(x)!r}",
                    )
                )
    for m in sorted(sk.monos):
        fn = R.action[m]
        images: dict[str, str] = {}
        for x in fn.dom:
            y = fn(x)
            if y in images:
                out.append(
                    Violation(
                        "mono-not-injective",
                        m,
                        f"{images[y]!r} and {x!r} collide at {y!r}",
                    )
                )
            else:
                images[y] = x
    for name in sorted(sk.cones):
        _check_cone(R, sk.cones[name], out)
    return ValidationReport(tuple(out))


def check_morphism(phi: RealMorphism) -> ValidationReport:
    if phi.src.over != phi.tgt.over:
        raise ValueError("source and target are over different sketches")
    sk = phi.src.over
    out: list[Violation] = []
    for ob in sk.objects:
        fn = phi.components.get(ob)
        if fn is None:
            out.append(Violation("missing-component", ob, f"no component at {ob!r}"))
        elif fn.dom != phi.src.carrier[ob] or fn.cod != phi.tgt.carrier[ob]:
            out.append(Violation("component-type", ob, f"component at {ob!r} has wrong carriers"))
    if out:
        return ValidationReport(tuple(out))
    for aid, decl in sk.arrows.items():
        top = compose(phi.src.action[aid], phi.components[decl.tgt])
        bottom = compose(phi.components[decl.src], phi.tgt.action[aid])
        for x in phi.src.carrier[decl.src]:
            if top(x) != bottom(x):
                out.append(
                    Violation(
                        "naturality",
                        aid,
                        f"square for {aid!r} fails at {x!r}: {top(x)!r} != {bottom(x)!r}",
                    )
                )
                break
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# transport along sketch morphisms
# ---------------------------------------------------------------------------


def restrict_along(sigma: SketchMorphism, R: Realization) -> Realization:
    """Pull a model of sigma's target back to a model of its source."""
    if R.over != sigma.tgt:
        raise ValueError("realization is not over the morphism's target sketch")
    report = check_sketch_morphism(sigma)
    if not report.ok:
        raise ValueError(f"invalid sketch morphism:\n{report}")
    carrier = {ob: R.carrier[sigma.object_map[ob]] for ob in sigma.src.objects}
    action = {}
    for aid, decl in sigma.src.arrows.items():
        action[aid] = path_action(R, sigma.arrow_map[aid], sigma.object_map[decl.src])
    return Realization(over=sigma.src, carrier=carrier, action=action)


# ---------------------------------------------------------------------------
# morphism enumeration
# ---------------------------------------------------------------------------


def _derivation_plan(sk: Sketch) -> tuple[list[str], list[tuple[str, Cone]]]:
    # one cone per apex is enough to pin the component; naturality checks the rest
    apex_cone: dict[str, Cone] = {}
    for name in sorted(sk.cones):
        apex_cone.setdefault(sk.cones[name].apex, sk.cones[name])
    free = [ob for ob in sk.objects if ob not in apex_cone]
    assigned = set(free)
    order: list[tuple[str, Cone]] = []
    pending = dict(apex_cone)
    while pending:
        ready = [
            apex
            for apex in sorted(pending)
            if {pending[apex].nodes[n] for n in pending[apex].projections} <= assigned
        ]
        if not ready:
            free.extend(sorted(pending))  # cyclically dependent apexes: brute force
            break
        for apex in ready:
            order.append((apex, pending.pop(apex)))
            assigned.add(apex)
    return sorted(free), order


def _cone_index(R: Realization, cone: Cone) -> dict[tuple[str, ...], str]:
    index: dict[tuple[str, ...], str] = {}
    for y in R.carrier[cone.apex]:
        index.setdefault(apex_tuple(R, cone, y), y)
    return index


def _iter_morphisms(R1: Realization, R2: Realization, guard: int) -> Iterator[RealMorphism]:
    if R1.over != R2.over:
        raise ValueError("realizations are over different sketches")
    sk = R1.over
    free, order = _derivation_plan(sk)
    space = 1
    for ob in free:
        space *= len(R2.carrier[ob]) ** len(R1.carrier[ob])
        if space > guard:
            raise ValueError(f"search space exceeds {guard} candidates")
    if space == 0:
        return
    indexes = {apex: _cone_index(R2, cone) for apex, cone in order}
    pools = []
    for ob in free:
        dom = R1.carrier[ob].elements
        pools.append(
            [dict(zip(dom, values)) for values in itertools.product(R2.carrier[ob].elements, repeat=len(dom))]
        )
    for picks in itertools.product(*pools):
        mapping = {ob: dict(m) for ob, m in zip(free, picks)}
        if not _derive_apexes(R1, mapping, order, indexes):
            continue
        components = {
            ob: FinFunction(R1.carrier[ob], R2.carrier[ob], mapping[ob]) for ob in sk.objects
        }
        candidate = RealMorphism(R1, R2, components)
        if _natural(candidate):
            yield candidate


def _derive_apexes(
    R1: Realization,
    mapping: dict[str, dict[str, str]],
    order: list[tuple[str, Cone]],
    indexes: dict[str, dict[tuple[str, ...], str]],
) -> bool:
    for apex, cone in order:
        keys = sorted(cone.projections)
        comp: dict[str, str] = {}
        for x in R1.carrier[apex]:
            t = tuple(
                mapping[cone.nodes[n]][R1.action[cone.projections[n]](x)] for n in keys
            )
            y = indexes[apex].get(t)
            if y is None:
                return False
            comp[x] = y
        mapping[apex] = comp
    return True


def _natural(phi: RealMorphism) -> bool:
    for aid, decl in phi.src.over.arrows.items():
        fx, fy = phi.components[decl.src], phi.components[decl.tgt]
        act1, act2 = phi.src.action[aid], phi.tgt.action[aid]
        if any(fy(act1(x)) != act2(fx(x)) for x in act1.dom):
            return False
    return True


def enumerate_morphisms(R1: Realization, R2: Realization, guard: int = 10**6) -> list[RealMorphism]:
    """All natural transformations R1 -> R2, in a fixed deterministic order.

    Components are enumerated only at objects that are not cone apexes;
    apex components are forced through the target's comparison bijections.
    The guard bounds the enumerated function-space product.
    """
    return list(_iter_morphisms(R1, R2, guard))


def is_isomorphic(R1: Realization, R2: Realization, guard: int = 10**6) -> RealMorphism | None:
    """First componentwise-bijective morphism in enumeration order, if any."""
    if any(len(R1.carrier[ob]) != len(R2.carrier[ob]) for ob in R1.over.objects):
        return None
    for phi in _iter_morphisms(R1, R2, guard):
        if all(is_bijection(fn) for fn in phi.components.values()):
            return phi
    return None


# ---------------------------------------------------------------------------
# forced extension
# ---------------------------------------------------------------------------


def extend_morphism(
    src: Realization, tgt: Realization, seed: dict[str, dict[str, str]]
) -> RealMorphism | None:
    """Grow a partial component assignment into a full natural transformation.

    Propagates along arrow actions, mono preimages, and cone comparison
    tuples until stable.  Returns None when the seed forces a conflict or
    fails to determine every component.
    """
    sk = src.over
    if sk != tgt.over:
        raise ValueError("realizations are over different sketches")
    comp: dict[str, dict[str, str]] = {ob: {} for ob in sk.objects}
    for ob, m in seed.items():
        for x, y in m.items():
            if x not in src.carrier[ob] or y not in tgt.carrier[ob]:
                raise ValueError(f"seed {x!r} -> {y!r} not in the {ob!r} carriers")
            comp[ob][x] = y
    mono_inverse = {}
    for m in sk.monos:
        fn = tgt.action[m]
        mono_inverse[m] = {fn(x): x for x in fn.dom}
    indexes = {name: _cone_index(tgt, cone) for name, cone in sk.cones.items()}

    conflict = False

    def assign(ob: str, x: str, y: str) -> bool:
        nonlocal conflict
        cur = comp[ob].get(x)
        if cur is None:
            comp[ob][x] = y
            return True
        if cur != y:
            conflict = True
        return False

    changed = True
    while changed and not conflict:
        changed = False
        for aid, decl in sk.arrows.items():
            act1, act2 = src.action[aid], tgt.action[aid]
            for x, y in list(comp[decl.src].items()):
                if assign(decl.tgt, act1(x), act2(y)):
                    changed = True
        for m in sorted(sk.monos):
            decl = sk.arrows[m]
            act1 = src.action[m]
            for x in src.carrier[decl.src]:
                if x in comp[decl.src]:
                    continue
                hx = act1(x)
                if hx not in comp[decl.tgt]:
                    continue
                pre = mono_inverse[m].get(comp[decl.tgt][hx])
                if pre is None:
                    return None
                if assign(decl.src, x, pre):
                    changed = True
        for name in sorted(sk.cones):
            cone = sk.cones[name]
            keys = sorted(cone.projections)
            for x in src.carrier[cone.apex]:
                if x in comp[cone.apex]:
                    continue
                t = []
                for n in keys:
                    img = comp[cone.nodes[n]].get(src.action[cone.projections[n]](x))
                    if img is None:
                        break
                    t.append(img)
                else:
                    y = indexes[name].get(tuple(t))
                    if y is None:
                        return None
                    if assign(cone.apex, x, y):
                        changed = True
    if conflict:
        return None
    if any(len(comp[ob]) != len(src.carrier[ob]) for ob in sk.objects):
        return None
    phi = RealMorphism(
        src, tgt, {ob: FinFunction(src.carrier[ob], tgt.carrier[ob], comp[ob]) for ob in sk.objects}
    )
    return phi if _natural(phi) else None
