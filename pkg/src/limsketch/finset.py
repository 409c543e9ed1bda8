"""Finite sets, functions between them, and the small limits/colimits the engine needs.

Everything is named: elements are strings, and all operations produce
deterministic element orders so downstream serializations are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator


@dataclass(frozen=True)
class FinSet:
    """An ordered finite set of distinct element names."""

    elements: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.elements)) != len(self.elements):
            raise ValueError(f"duplicate elements in FinSet: {self.elements}")

    def __contains__(self, x: str) -> bool:
        return x in self.elements

    def __iter__(self) -> Iterator[str]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)


def finset(items: Iterable[str]) -> FinSet:
    return FinSet(tuple(items))


@dataclass(frozen=True)
class FinFunction:
    """A total function between finite sets, stored pointwise."""

    dom: FinSet
    cod: FinSet
    mapping: dict[str, str]

    def __post_init__(self) -> None:
        if set(self.mapping) != set(self.dom.elements):
            missing = set(self.dom.elements) - set(self.mapping)
            extra = set(self.mapping) - set(self.dom.elements)
            raise ValueError(f"function not total on dom (missing {sorted(missing)}, extra {sorted(extra)})")
        bad = [v for v in self.mapping.values() if v not in self.cod]
        if bad:
            raise ValueError(f"function values outside cod: {sorted(set(bad))}")

    def __call__(self, x: str) -> str:
        return self.mapping[x]


def identity(s: FinSet) -> FinFunction:
    return FinFunction(s, s, {x: x for x in s})


def compose(f: FinFunction, g: FinFunction) -> FinFunction:
    """Apply f then g (diagrammatic order)."""
    if f.cod != g.dom:
        raise ValueError("compose requires cod(f) == dom(g)")
    return FinFunction(f.dom, g.cod, {x: g(f(x)) for x in f.dom})


def is_bijection(f: FinFunction) -> bool:
    return len(set(f.mapping.values())) == len(f.dom) == len(f.cod)


@dataclass(frozen=True)
class FinDiagram:
    """A finite diagram: named nodes carrying sets, named edges carrying functions."""

    nodes: dict[str, FinSet]
    edges: dict[str, tuple[str, str, FinFunction]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for e, (s, t, f) in self.edges.items():
            if s not in self.nodes or t not in self.nodes:
                raise ValueError(f"edge {e} references unknown node")
            if f.dom != self.nodes[s] or f.cod != self.nodes[t]:
                raise ValueError(f"edge {e} function does not match its endpoints")


def family_name(nodes: Iterable[str], family: dict[str, str]) -> str:
    return "(" + ",".join(f"{n}={family[n]}" for n in sorted(nodes)) + ")"


def _families(diagram: FinDiagram) -> list[dict[str, str]]:
    names = sorted(diagram.nodes)
    edges = [(s, t, f) for (s, t, f) in diagram.edges.values()]
    out: list[dict[str, str]] = []
    assign: dict[str, str] = {}

    def consistent(node: str, val: str) -> bool:
        for s, t, f in edges:
            if s == t == node:
                if f.mapping[val] != val:
                    return False
            elif s == node and t in assign:
                if f.mapping[val] != assign[t]:
                    return False
            elif t == node and s in assign:
                if f.mapping[assign[s]] != val:
                    return False
        return True

    def search() -> None:
        if len(assign) == len(names):
            out.append(dict(assign))
            return
        # most-constrained node first keeps wide diagrams tractable
        best: str | None = None
        best_vals: list[str] = []
        for n in names:
            if n in assign:
                continue
            vals = [v for v in diagram.nodes[n].elements if consistent(n, v)]
            if best is None or len(vals) < len(best_vals):
                best, best_vals = n, vals
                if not vals:
                    break
        assert best is not None
        for v in best_vals:
            assign[best] = v
            search()
            del assign[best]

    search()
    out.sort(key=lambda fam: tuple(fam[n] for n in names))
    return out


def limit(diagram: FinDiagram) -> tuple[FinSet, dict[str, FinFunction]]:
    """Limit of a finite diagram of finite sets.

    Elements are the edge-compatible families, canonically named
    "(node=value,...)" over the sorted node ids; the empty diagram yields
    the one-point set. Returns the limit set and one projection per node.
    """
    fams = _families(diagram)
    names = [family_name(diagram.nodes, fam) for fam in fams]
    lim = FinSet(tuple(names))
    projections = {
        n: FinFunction(lim, diagram.nodes[n], {name: fam[n] for name, fam in zip(names, fams)})
        for n in diagram.nodes
    }
    return lim, projections


class UnionFind:
    """Union-find with path halving; no rank, merges steer by caller."""

    def __init__(self, items: Iterable[object] = ()) -> None:
        self.parent: dict[object, object] = {x: x for x in items}

    def add(self, x: object) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: object) -> object:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]  # path halving
            x = p[x]
        return x

    def union(self, a: object, b: object) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def classes(self) -> dict[object, list[object]]:
        by_root: dict[object, list[object]] = {}
        for x in self.parent:
            by_root.setdefault(self.find(x), []).append(x)
        return by_root


def congruence_closure(s: FinSet, pairs: Iterable[tuple[str, str]]) -> dict[str, str]:
    """Finest equivalence containing the pairs, as an element -> representative map.

    Representatives are the lexicographically least member of each class.
    Pairs naming elements outside s raise ValueError.
    """
    uf = UnionFind(s.elements)
    for a, b in pairs:
        if a not in s or b not in s:
            raise ValueError(f"congruence pair ({a}, {b}) mentions elements outside the set")
        uf.union(a, b)
    rep: dict[str, str] = {}
    for members in uf.classes().values():
        least = min(members)  # type: ignore[type-var]
        for m in members:
            rep[m] = least  # type: ignore[index]
    return {x: rep[x] for x in s.elements}


def pushout(f: FinFunction, g: FinFunction) -> tuple[FinSet, FinFunction, FinFunction]:
    """Pushout of B <-f- A -g-> C.

    The carrier is (B + C) quotiented by f(a) ~ g(a). Classes are named by
    their lexicographically least pre-image; when the same bare name would be
    claimed by two distinct classes it is disambiguated with a side tag
    ("b." or "c."). Returns (P, inj_B, inj_C).
    """
    if f.dom != g.dom:
        raise ValueError("pushout legs must share their domain")
    B, C = f.cod, g.cod
    uf = UnionFind([("b", x) for x in B] + [("c", x) for x in C])
    for a in f.dom:
        uf.union(("b", f(a)), ("c", g(a)))

    order: list[object] = []
    seen: set[object] = set()
    for x in B:
        r = uf.find(("b", x))
        if r not in seen:
            seen.add(r)
            order.append(r)
    for y in C:
        r = uf.find(("c", y))
        if r not in seen:
            seen.add(r)
            order.append(r)

    classes = uf.classes()
    bare: dict[object, str] = {r: min(n for _, n in classes[r]) for r in order}
    claimed: dict[str, int] = {}
    for r in order:
        claimed[bare[r]] = claimed.get(bare[r], 0) + 1
    names: dict[object, str] = {}
    for r in order:
        if claimed[bare[r]] == 1:
            names[r] = bare[r]
        else:
            tag, n = min(classes[r], key=lambda m: (m[1], m[0]))  # type: ignore[index]
            names[r] = f"{tag}.{n}"

    P = FinSet(tuple(names[r] for r in order))
    inj_b = FinFunction(B, P, {x: names[uf.find(("b", x))] for x in B})
    inj_c = FinFunction(C, P, {y: names[uf.find(("c", y))] for y in C})
    return P, inj_b, inj_c
