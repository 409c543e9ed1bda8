"""Finite limit sketches.

A sketch is a presentation: named objects, typed arrows, path equations,
mono markers, and cones whose bases are finite diagrams drawn inside the
sketch.  Nothing here builds the generated category; downstream modules
interpret sketches in finite sets or rewrite them.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ArrowDecl:
    id: str
    src: str
    tgt: str


@dataclass(frozen=True)
class PathEquation:
    """Two composable arrow paths asserted equal.

    ``lhs`` is never empty; ``rhs`` may be empty, meaning the identity
    path at the shared endpoint.
    """

    lhs: tuple[str, ...]
    rhs: tuple[str, ...]


@dataclass(frozen=True)
class ConeEdge:
    """A path between two base nodes of a cone."""

    src: str
    tgt: str
    path: tuple[str, ...]


@dataclass(frozen=True)
class Cone:
    """A limit cone declaration.

    ``nodes`` labels each base node with a sketch object; ``edges`` are
    paths between base nodes; ``projections`` assigns arrows apex->node
    object to some (not necessarily all) base nodes.  Nodes without a
    projection constrain the limit through unique extension instead.
    """

    name: str
    apex: str
    nodes: dict[str, str]
    edges: tuple[ConeEdge, ...] = ()
    projections: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Sketch:
    name: str
    objects: tuple[str, ...]
    arrows: dict[str, ArrowDecl] = field(default_factory=dict)
    equations: tuple[PathEquation, ...] = ()
    cones: dict[str, Cone] = field(default_factory=dict)
    monos: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str
    severity: str = "error"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        """True when no error-severity violation is present (warnings allowed)."""
        return not any(v.severity == "error" for v in self.violations)

    def __str__(self) -> str:
        if not self.violations:
            return "ok"
        return "\n".join(
            f"{v.severity}: {v.code} at {v.where}: {v.message}" for v in self.violations
        )


def path_endpoints(sk: Sketch, path: tuple[str, ...], at: str | None = None) -> tuple[str, str]:
    """Source and target of a composable path; empty paths need ``at``."""
    if not path:
        if at is None:
            raise ValueError("empty path needs an anchor object")
        if at not in sk.objects:
            raise ValueError(f"unknown object {at!r}")
        return at, at
    for a in path:
        if a not in sk.arrows:
            raise ValueError(f"unknown arrow {a!r}")
    src = sk.arrows[path[0]].src
    here = src
    for i, a in enumerate(path):
        decl = sk.arrows[a]
        if decl.src != here:
            raise ValueError(
                f"path not composable at position {i}: {a} starts at {decl.src}, expected {here}"
            )
        here = decl.tgt
    return src, here


def _check_path(sk: Sketch, path: tuple[str, ...], where: str, out: list[Violation], at: str | None = None) -> tuple[str, str] | None:
    try:
        return path_endpoints(sk, path, at)
    except ValueError as exc:
        out.append(Violation("bad-path", where, str(exc)))
        return None


def validate_sketch(sk: Sketch) -> ValidationReport:
    """Check every structural invariant; an empty report means valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for ob in sk.objects:
        if ob in seen:
            out.append(Violation("duplicate-object", ob, f"object {ob!r} declared twice"))
        seen.add(ob)
    for a in sk.arrows.values():
        if a.src not in seen:
            out.append(Violation("unknown-source", a.id, f"arrow {a.id}: unknown source {a.src!r}"))
        if a.tgt not in seen:
            out.append(Violation("unknown-target", a.id, f"arrow {a.id}: unknown target {a.tgt!r}"))
    for m in sorted(sk.monos):
        if m not in sk.arrows:
            out.append(Violation("unknown-mono", m, f"mono marker on undeclared arrow {m!r}"))
    for i, eq in enumerate(sk.equations):
        where = f"equation#{i}"
        if not eq.lhs:
            out.append(Violation("empty-lhs", where, "left side of an equation may not be empty"))
            continue
        ends = _check_path(sk, eq.lhs, where, out)
        if ends is None:
            continue
        other = _check_path(sk, eq.rhs, where, out, at=ends[0])
        if other is None:
            continue
        if ends != other:
            out.append(
                Violation(
                    "endpoint-mismatch",
                    where,
                    f"sides have endpoints {ends} and {other}",
                )
            )
    for cone in sk.cones.values():
        _validate_cone(sk, cone, out)
    return ValidationReport(tuple(out))


def _validate_cone(sk: Sketch, cone: Cone, out: list[Violation]) -> None:
    where = f"cone {cone.name}"
    if cone.apex not in sk.objects:
        out.append(Violation("unknown-apex", where, f"unknown apex {cone.apex!r}"))
    for node, ob in cone.nodes.items():
        if ob not in sk.objects:
            out.append(Violation("unknown-node-object", where, f"node {node}: unknown object {ob!r}"))
    for node, arrow in cone.projections.items():
        if node not in cone.nodes:
            out.append(Violation("unknown-proj-node", where, f"projection for undeclared node {node!r}"))
            continue
        decl = sk.arrows.get(arrow)
        if decl is None:
            out.append(Violation("unknown-proj-arrow", where, f"projection {arrow!r} is not a declared arrow"))
        elif decl.src != cone.apex or decl.tgt != cone.nodes[node]:
            out.append(
                Violation(
                    "proj-type-mismatch",
                    where,
                    f"projection {arrow}: {decl.src}->{decl.tgt}, expected {cone.apex}->{cone.nodes[node]}",
                )
            )
    for edge in cone.edges:
        if edge.src not in cone.nodes or edge.tgt not in cone.nodes:
            out.append(Violation("unknown-edge-node", where, f"edge {edge.src}->{edge.tgt} uses undeclared nodes"))
            continue
        ends = _check_path(sk, edge.path, where, out, at=cone.nodes[edge.src])
        if ends is None:
            continue
        want = (cone.nodes[edge.src], cone.nodes[edge.tgt])
        if ends != want:
            out.append(
                Violation(
                    "edge-type-mismatch",
                    where,
                    f"edge {edge.src}->{edge.tgt} path has endpoints {ends}, expected {want}",
                )
            )
            continue
        # a path between two projected nodes must be backed by an equation
        ps, pt = cone.projections.get(edge.src), cone.projections.get(edge.tgt)
        if ps is not None and pt is not None:
            lhs, rhs = (ps,) + edge.path, (pt,)
            if not any({e.lhs, e.rhs} == {lhs, rhs} for e in sk.equations):
                out.append(
                    Violation(
                        "missing-proj-equation",
                        where,
                        f"edge {edge.src}->{edge.tgt} needs equation {list(lhs)} = {list(rhs)}",
                    )
                )


def builtin_sketches() -> dict[str, Sketch]:
    """The bundled examples: graph, magma, and the modus ponens theory."""
    graph = Sketch(
        name="graph",
        objects=("E", "V"),
        arrows={"s": ArrowDecl("s", "E", "V"), "t": ArrowDecl("t", "E", "V")},
    )
    magma = Sketch(
        name="magma",
        objects=("M", "M2"),
        arrows={
            "s": ArrowDecl("s", "M2", "M"),
            "t": ArrowDecl("t", "M2", "M"),
            "k": ArrowDecl("k", "M2", "M"),
        },
        cones={
            "prod": Cone(
                name="prod",
                apex="M2",
                nodes={"n1": "M", "n2": "M"},
                projections={"n1": "s", "n2": "t"},
            )
        },
    )
    mp = Sketch(
        name="mp_theory",
        objects=("For", "Theo", "H_IM", "C_IM", "H_MP", "C_MP"),
        arrows={
            "inc": ArrowDecl("inc", "Theo", "For"),
            "p1": ArrowDecl("p1", "H_IM", "For"),
            "p2": ArrowDecl("p2", "H_IM", "For"),
            "c_IM": ArrowDecl("c_IM", "H_IM", "C_IM"),
            "e_IM": ArrowDecl("e_IM", "C_IM", "For"),
            "t1": ArrowDecl("t1", "H_MP", "Theo"),
            "t2": ArrowDecl("t2", "H_MP", "Theo"),
            "q": ArrowDecl("q", "H_MP", "For"),
            "c_MP": ArrowDecl("c_MP", "H_MP", "C_MP"),
            "e_MP": ArrowDecl("e_MP", "C_MP", "Theo"),
        },
        equations=(
            # the theorem concluded by modus ponens is the minor premise
            PathEquation(("c_MP", "e_MP", "inc"), ("q",)),
        ),
        cones={
            "lim_C_IM": Cone(
                name="lim_C_IM",
                apex="C_IM",
                nodes={"n0": "For"},
                projections={"n0": "e_IM"},
            ),
            "lim_H_IM": Cone(
                name="lim_H_IM",
                apex="H_IM",
                nodes={"n1": "For", "n2": "For"},
                projections={"n1": "p1", "n2": "p2"},
            ),
            "lim_C_MP": Cone(
                name="lim_C_MP",
                apex="C_MP",
                nodes={"n0": "Theo"},
                projections={"n0": "e_MP"},
            ),
            "lim_H_MP": Cone(
                name="lim_H_MP",
                apex="H_MP",
                nodes={
                    "np": "Theo",
                    "nq": "For",
                    "nr": "Theo",
                    "nx": "H_IM",
                    "ny": "C_IM",
                    "nf1": "For",
                    "nf2": "For",
                },
                edges=(
                    ConeEdge("nx", "nf1", ("p1",)),
                    ConeEdge("np", "nf1", ("inc",)),
                    ConeEdge("nx", "nq", ("p2",)),
                    ConeEdge("nx", "ny", ("c_IM",)),
                    ConeEdge("ny", "nf2", ("e_IM",)),
                    ConeEdge("nr", "nf2", ("inc",)),
                ),
                projections={"np": "t1", "nq": "q", "nr": "t2"},
            ),
        },
        monos=frozenset({"inc"}),
    )
    return {"graph": graph, "magma": magma, "mp_theory": mp}
