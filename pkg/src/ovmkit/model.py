"""Core domain types for orthogonal variability models and their well-formedness rules.

Everything here is an immutable value: models are safe to share across threads
and every operation is a pure function over them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional


class Visibility(str, Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"


class Layer(str, Enum):
    PROCESS = "process"
    SERVICE = "service"
    COMPONENT = "component"


class EdgeKind(str, Enum):
    MANDATORY = "mandatory"
    OPTIONAL = "optional"


class ConstraintKind(str, Enum):
    REQUIRES = "requires"
    EXCLUDES = "excludes"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    """1-based position of a lexeme in DSL source text."""

    line: int
    column: int
    length: int = 0


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: Severity
    message: str
    subject: tuple[str, ...] = ()
    location: Optional[SourceSpan] = None

    def to_json(self) -> dict:
        loc = None
        if self.location is not None:
            loc = {
                "line": self.location.line,
                "column": self.location.column,
                "length": self.location.length,
            }
        return {
            "code": self.code,
            "severity": self.severity.value,
            "message": self.message,
            "subject": list(self.subject),
            "location": loc,
        }


def error(code: str, message: str, *subject: str) -> Diagnostic:
    return Diagnostic(code, Severity.ERROR, message, subject)


def warning(code: str, message: str, *subject: str) -> Diagnostic:
    return Diagnostic(code, Severity.WARNING, message, subject)


@dataclass(frozen=True)
class VariantEdge:
    """Attachment of a variant to a variation point.

    Mandatory edges are selected by definition; the stored flag only tracks a
    developer preselection on optional edges.
    """

    variant_id: str
    kind: EdgeKind = EdgeKind.OPTIONAL
    selected: bool = False
    guard: Optional[str] = None

    def __post_init__(self):
        if self.kind is EdgeKind.MANDATORY:
            object.__setattr__(self, "selected", True)


@dataclass(frozen=True)
class AlternativeGroup:
    """Alternative choice with cardinality [min..max] over optional members."""

    min: int
    max: int
    members: tuple[VariantEdge, ...]


@dataclass(frozen=True)
class Variant:
    id: str
    display_name: str = ""
    description: Optional[str] = None

    def __post_init__(self):
        if not self.display_name:
            object.__setattr__(self, "display_name", self.id)


@dataclass(frozen=True)
class VariationPoint:
    id: str
    visibility: Visibility
    layer: Layer
    mandatory_edges: tuple[VariantEdge, ...] = ()
    optional_edges: tuple[VariantEdge, ...] = ()
    group: Optional[AlternativeGroup] = None

    @property
    def is_external(self) -> bool:
        return self.visibility is Visibility.EXTERNAL

    def edges(self) -> Iterator[VariantEdge]:
        """All edges in declaration order: mandatory, optional, then group members."""
        yield from self.mandatory_edges
        yield from self.optional_edges
        if self.group is not None:
            yield from self.group.members

    def variant_ids(self) -> list[str]:
        return [e.variant_id for e in self.edges()]

    def edge_for(self, variant_id: str) -> Optional[VariantEdge]:
        for e in self.edges():
            if e.variant_id == variant_id:
                return e
        return None


@dataclass(frozen=True)
class Constraint:
    kind: ConstraintKind
    source: str
    target: str

    def key(self) -> tuple[str, str, str]:
        return (self.kind.value, self.source, self.target)

    def __str__(self) -> str:
        return f"{self.source} {self.kind.value} {self.target}"


@dataclass(frozen=True)
class VariabilityModel:
    name: str
    vps: tuple[VariationPoint, ...] = ()
    variants: tuple[Variant, ...] = ()
    constraints: tuple[Constraint, ...] = ()

    def vp(self, vp_id: str) -> Optional[VariationPoint]:
        for vp in self.vps:
            if vp.id == vp_id:
                return vp
        return None

    def variant(self, variant_id: str) -> Optional[Variant]:
        for v in self.variants:
            if v.id == variant_id:
                return v
        return None

    def vp_ids(self) -> list[str]:
        return [vp.id for vp in self.vps]

    def variant_ids(self) -> list[str]:
        return [v.id for v in self.variants]

    def internal_vps(self) -> list[VariationPoint]:
        return [vp for vp in self.vps if vp.visibility is Visibility.INTERNAL]

    def external_vps(self) -> list[VariationPoint]:
        return [vp for vp in self.vps if vp.visibility is Visibility.EXTERNAL]

    def effective_constraints(self) -> list[Constraint]:
        """Constraints with duplicates (same kind/source/target) collapsed."""
        seen: set[tuple[str, str, str]] = set()
        out = []
        for c in self.constraints:
            if c.key() not in seen:
                seen.add(c.key())
                out.append(c)
        return out

    def hosts_of(self, variant_id: str) -> list[VariationPoint]:
        """VPs that attach the given variant, in declaration order."""
        return [vp for vp in self.vps if variant_id in vp.variant_ids()]


class ReferenceKind(str, Enum):
    MANDATORY_EDGE = "mandatory-edge"
    OPTIONAL_EDGE = "optional-edge"
    GROUP_MEMBER = "group-member"
    CONSTRAINT_SOURCE = "constraint-source"
    CONSTRAINT_TARGET = "constraint-target"


@dataclass(frozen=True)
class Reference:
    kind: ReferenceKind
    vp_id: Optional[str] = None
    constraint: Optional[Constraint] = None


class UnknownIdError(LookupError):
    pass


_EDGE_REF_KINDS = {
    EdgeKind.MANDATORY: ReferenceKind.MANDATORY_EDGE,
    EdgeKind.OPTIONAL: ReferenceKind.OPTIONAL_EDGE,
}


def referenced_by(model: VariabilityModel, id: str) -> list[Reference]:
    """Complete reverse index for one id: every VP edge, group membership, and
    constraint endpoint mentioning it, in model declaration order."""
    known = set(model.vp_ids()) | set(model.variant_ids())
    if id not in known:
        raise UnknownIdError(f"unknown id: {id!r}")
    refs: list[Reference] = []
    for vp in model.vps:
        for e in vp.mandatory_edges + vp.optional_edges:
            if e.variant_id == id:
                refs.append(Reference(_EDGE_REF_KINDS[e.kind], vp_id=vp.id))
        if vp.group is not None:
            for e in vp.group.members:
                if e.variant_id == id:
                    refs.append(Reference(ReferenceKind.GROUP_MEMBER, vp_id=vp.id))
    for c in model.constraints:
        if c.source == id:
            refs.append(Reference(ReferenceKind.CONSTRAINT_SOURCE, constraint=c))
        if c.target == id:
            refs.append(Reference(ReferenceKind.CONSTRAINT_TARGET, constraint=c))
    return refs


def _check_guard(diags: list[Diagnostic], owner: str, edge: VariantEdge) -> None:
    if edge.guard is not None and not edge.guard.strip():
        diags.append(error("OVM007", f"empty guard on edge to '{edge.variant_id}'", owner, edge.variant_id))


def well_formed(model: VariabilityModel) -> list[Diagnostic]:
    """Structural well-formedness check; returns one Diagnostic per violation.

    Pure and deterministic: diagnostics follow model declaration order. Codes
    are drawn from the published OVM001..OVM008 catalog. Guards are opaque and
    only checked for nonemptiness.
    """
    diags: list[Diagnostic] = []

    # OVM004 duplicate-id: VPs and variants share one namespace.
    seen: set[str] = set()
    for id in model.vp_ids() + model.variant_ids():
        if not id:
            diags.append(error("OVM004", "empty id", id))
        elif id in seen:
            diags.append(error("OVM004", f"duplicate id '{id}'", id))
        seen.add(id)

    declared_variants = set(model.variant_ids())
    referenced: set[str] = set()

    for vp in model.vps:
        edge_variants: list[str] = []
        for e in vp.mandatory_edges:
            if e.kind is not EdgeKind.MANDATORY:
                diags.append(error("OVM008", f"non-mandatory edge in mandatory list of '{vp.id}'", vp.id, e.variant_id))
            edge_variants.append(e.variant_id)
            _check_guard(diags, vp.id, e)
        for e in vp.optional_edges:
            if e.kind is not EdgeKind.OPTIONAL:
                diags.append(error("OVM008", f"non-optional edge in optional list of '{vp.id}'", vp.id, e.variant_id))
            edge_variants.append(e.variant_id)
            _check_guard(diags, vp.id, e)
        if vp.group is not None:
            g = vp.group
            for e in g.members:
                if e.kind is not EdgeKind.OPTIONAL:
                    diags.append(error("OVM008", f"non-optional member in group of '{vp.id}'", vp.id, e.variant_id))
                edge_variants.append(e.variant_id)
                _check_guard(diags, vp.id, e)
            if len(g.members) < 1:
                diags.append(error("OVM003", f"group of '{vp.id}' has no members", vp.id))
            if not (0 <= g.min <= g.max <= len(g.members)):
                diags.append(
                    error(
                        "OVM003",
                        f"group of '{vp.id}' has bad cardinality [{g.min}..{g.max}] over {len(g.members)} members",
                        vp.id,
                    )
                )

        if not edge_variants:
            diags.append(error("OVM001", f"variation point '{vp.id}' references no variants", vp.id))

        dup_seen: set[str] = set()
        for vid in edge_variants:
            if vid in dup_seen:
                diags.append(error("OVM008", f"variant '{vid}' attached more than once to '{vp.id}'", vp.id, vid))
            dup_seen.add(vid)
            if vid not in declared_variants:
                diags.append(error("OVM002", f"edge of '{vp.id}' references undeclared variant '{vid}'", vp.id, vid))
            referenced.add(vid)

    for v in model.variants:
        if v.id not in referenced:
            diags.append(error("OVM006", f"variant '{v.id}' is referenced by no variation point", v.id))

    known = set(model.vp_ids()) | declared_variants
    vps_with_mandatory = {vp.id for vp in model.vps if vp.mandatory_edges}
    constraint_seen: set[tuple[str, str, str]] = set()
    for c in model.constraints:
        for endpoint in (c.source, c.target):
            if endpoint not in known:
                diags.append(error("OVM002", f"constraint '{c}' references unknown id '{endpoint}'", endpoint))
        if c.source == c.target:
            diags.append(error("OVM005", f"constraint '{c}' relates an element to itself", c.source))
        if c.key() in constraint_seen:
            diags.append(warning("OVM008", f"duplicate constraint '{c}'", c.source, c.target))
        constraint_seen.add(c.key())
        if c.kind is ConstraintKind.EXCLUDES:
            # Exclusion of a VP that carries mandatory variants has no agreed
            # semantics; flag it so analysis can refuse instead of guessing.
            for endpoint in (c.source, c.target):
                if endpoint in vps_with_mandatory:
                    diags.append(
                        warning(
                            "OVM005",
                            f"excludes endpoint '{endpoint}' is a variation point with mandatory variants; "
                            "the exclusion can never hold while the other side is active",
                            c.source,
                            c.target,
                        )
                    )

    return diags


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)
