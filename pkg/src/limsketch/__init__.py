"""Diagrammatic logic toolkit: finite limit sketches, finite realizations,
cycle-breaking localisers, and a chase engine that computes free theories
and applies logical rules as fractions."""

from __future__ import annotations

__version__ = "0.1.0"

from .finset import (
    FinDiagram,
    FinFunction,
    FinSet,
    compose,
    congruence_closure,
    identity,
    is_bijection,
    limit,
    pushout,
)
from .sketch import (
    ArrowDecl,
    Cone,
    ConeEdge,
    PathEquation,
    Sketch,
    ValidationReport,
    Violation,
    builtin_sketches,
    validate_sketch,
)
from .realization import (
    RealMorphism,
    Realization,
    check_morphism,
    check_realization,
    compose_morphisms,
    empty_realization,
    enumerate_morphisms,
    extend_morphism,
    is_isomorphic,
    restrict_along,
)
from .localizer import (
    BrokenRecord,
    Localiser,
    SketchMorphism,
    as_localiser,
    break_cycles,
    check_sketch_morphism,
    default_plan,
    find_cycles,
    paths_equivalent,
)
from .engine import (
    ChaseConfig,
    ChaseDiverged,
    ChaseResult,
    Fraction,
    Match,
    Rule,
    apply_rule,
    check_fraction,
    compose_fractions,
    induced_isomorphism,
    is_theory,
    match_rule,
    rules_of,
    saturate,
    trace_doc,
    trace_lines,
    transport_spec,
)
from .yoneda import (
    Representable,
    density_check,
    faithfulness_check,
    representable,
    yoneda_arrow,
)
from .dsl import (
    NamedConfig,
    NamedMorphism,
    NamedSpec,
    ParseError,
    ParseIssue,
    canonical,
    parse,
    parse_json,
    parse_path,
    serialize,
    serialize_file,
    serialize_json,
)

__all__ = [
    "ArrowDecl",
    "BrokenRecord",
    "ChaseConfig",
    "ChaseDiverged",
    "ChaseResult",
    "Cone",
    "ConeEdge",
    "FinDiagram",
    "FinFunction",
    "FinSet",
    "Fraction",
    "Localiser",
    "Match",
    "NamedConfig",
    "NamedMorphism",
    "NamedSpec",
    "ParseError",
    "ParseIssue",
    "PathEquation",
    "RealMorphism",
    "Realization",
    "Representable",
    "Rule",
    "Sketch",
    "SketchMorphism",
    "ValidationReport",
    "Violation",
    "apply_rule",
    "as_localiser",
    "break_cycles",
    "builtin_sketches",
    "canonical",
    "check_fraction",
    "check_morphism",
    "check_realization",
    "check_sketch_morphism",
    "compose",
    "compose_fractions",
    "compose_morphisms",
    "congruence_closure",
    "default_plan",
    "density_check",
    "empty_realization",
    "enumerate_morphisms",
    "extend_morphism",
    "faithfulness_check",
    "find_cycles",
    "identity",
    "induced_isomorphism",
    "is_bijection",
    "is_isomorphic",
    "is_theory",
    "limit",
    "match_rule",
    "parse",
    "parse_json",
    "parse_path",
    "paths_equivalent",
    "pushout",
    "representable",
    "restrict_along",
    "rules_of",
    "saturate",
    "serialize",
    "serialize_file",
    "serialize_json",
    "trace_doc",
    "trace_lines",
    "transport_spec",
    "validate_sketch",
    "yoneda_arrow",
]
