"""Representable specifications and desk-scale embedding checks.

The representable at an object X is the free specification on a single
generator at X: one element is planted and the cone repair of the chase
closes it up.  Over a broken sketch this closure is finite, which is what
makes rules-as-representables computable at all.
"""
from __future__ import annotations

from dataclasses import dataclass

from .engine import ChaseConfig, ChaseDiverged, _Chase, saturate
from .localizer import paths_equivalent
from .realization import (
    RealMorphism,
    Realization,
    extend_morphism,
    is_isomorphic,
)
from .sketch import Sketch, ValidationReport, Violation


@dataclass(frozen=True)
class Representable:
    at: str
    spec: Realization
    generator: str


def representable(sk: Sketch, ob: str,
                  cfg: ChaseConfig | None = None) -> Representable:
    """Compute the representable specification at ``ob``.

    Runs the chase with no rules on the one-generator presentation.  Over
    a sketch that still has productive cycles the closure is infinite; the
    chase budget turns that into an error here.
    """
    if ob not in sk.objects:
        raise ValueError(f"unknown object {ob!r} in sketch {sk.name}")
    generator = f"{ob}#0"
    st = _Chase(sk, {ob: (generator,)}, {})
    try:
        st.repair(full=True)
    except ChaseDiverged as exc:
        raise RuntimeError(
            f"representable at {ob} not finitely closed") from exc
    return Representable(ob, st.realization(), generator)


def yoneda_arrow(sk: Sketch, arrow: str,
                 cfg: ChaseConfig | None = None) -> RealMorphism:
    """The contravariant action on an arrow f: X -> Z, as Y(Z) -> Y(X).

    Sends Z's generator to the image of X's generator under the recorded
    action of f, then extends uniquely.
    """
    decl = sk.arrows.get(arrow)
    if decl is None:
        raise ValueError(f"unknown arrow {arrow!r} in sketch {sk.name}")
    y_src = representable(sk, decl.src, cfg)
    y_tgt = representable(sk, decl.tgt, cfg)
    target_image = y_src.spec.action[arrow](y_src.generator)
    phi = extend_morphism(y_tgt.spec, y_src.spec,
                          {decl.tgt: {y_tgt.generator: target_image}})
    if phi is None:
        raise RuntimeError(
            f"the contravariant action of {arrow} did not extend to a "
            "morphism of representables")
    return phi


def faithfulness_check(sk: Sketch,
                       cfg: ChaseConfig | None = None) -> ValidationReport:
    """Check that distinct parallel arrows give distinct morphisms.

    Arrows equated by the sketch's path equations are allowed to collide;
    those show up as warnings, anything else as an error.
    """
    by_endpoints: dict[tuple[str, str], list[str]] = {}
    for aid in sorted(sk.arrows):
        decl = sk.arrows[aid]
        by_endpoints.setdefault((decl.src, decl.tgt), []).append(aid)
    violations: list[Violation] = []
    for (src, tgt), group in sorted(by_endpoints.items()):
        if len(group) < 2:
            continue
        images = {aid: yoneda_arrow(sk, aid, cfg) for aid in group}
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                if images[a] != images[b]:
                    continue
                if paths_equivalent(sk, (a,), (b,)):
                    violations.append(Violation(
                        "yoneda-expected-collision", f"{a}/{b}",
                        f"arrows {a} and {b} are equated by the sketch and "
                        "give the same morphism", severity="warning"))
                else:
                    violations.append(Violation(
                        "yoneda-not-faithful", f"{a}/{b}",
                        f"distinct arrows {a} and {b}: {src} -> {tgt} give "
                        "the same morphism of representables"))
    return ValidationReport(tuple(violations))


def density_check(sk: Sketch, spec: Realization,
                  guard: int = 10 ** 6) -> ValidationReport:
    """Rebuild ``spec`` from its own elements and compare.

    Every element of the specification is taken as a generator and every
    recorded action as a relation; cone repair closes the presentation.
    For a valid specification the rebuilt colimit must be isomorphic to
    the original, which is the desk-scale content of density.
    """
    total = sum(len(spec.carrier[ob].elements) for ob in sk.objects)
    if total > guard:
        raise ValueError(f"specification exceeds the density guard ({guard})")
    rebuilt = saturate(spec, [], ChaseConfig()).result
    iso = is_isomorphic(rebuilt, spec, guard)
    if iso is None:
        return ValidationReport((Violation(
            "density-failed", spec.over.name,
            "the colimit of the element presentation is not isomorphic to "
            "the specification"),))
    return ValidationReport(())
