"""Developer-stage derivation: bind variants to internal variation points,
propagate requires/excludes to a fixpoint, and emit the customization model
containing only external VPs.

Propagation is deterministic: effects of chosen variants fire in
binding-declaration order, then cascaded effects in model declaration order,
ties broken lexicographically. Every step strictly removes, promotes, retains,
or drops an element, so the fixpoint terminates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .model import (
    AlternativeGroup,
    Constraint,
    ConstraintKind,
    Diagnostic,
    EdgeKind,
    Severity,
    VariabilityModel,
    Variant,
    VariantEdge,
    VariationPoint,
    Visibility,
    error,
    has_errors,
    well_formed,
)


@dataclass(frozen=True)
class DeveloperBinding:
    """Developer choices at internal VPs: VP id -> chosen variant ids, in
    declaration order. Mandatory variants need not be listed; they are always
    included."""

    choices: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def of(cls, mapping: dict[str, list[str] | tuple[str, ...]]) -> "DeveloperBinding":
        return cls(tuple((vp, tuple(vs)) for vp, vs in mapping.items()))

    @classmethod
    def from_json(cls, doc: dict) -> "DeveloperBinding":
        bindings = doc.get("bindings", {})
        if not isinstance(bindings, dict):
            raise ValueError('binding document must have shape {"bindings": {...}}')
        return cls.of({vp: list(vs) for vp, vs in bindings.items()})

    def to_json(self) -> dict:
        return {"bindings": {vp: list(vs) for vp, vs in self.choices}}

    def as_dict(self) -> dict[str, tuple[str, ...]]:
        return dict(self.choices)


# ---------------------------------------------------------------------------
# Trace effects


@dataclass(frozen=True)
class VariantRemoved:
    variant: str
    cause: Constraint


@dataclass(frozen=True)
class VariantPromoted:
    variant: str
    vp: str
    cause: Constraint


@dataclass(frozen=True)
class CardinalityAdjusted:
    vp: str
    old: tuple[int, int]
    new: tuple[int, int]


@dataclass(frozen=True)
class VpDropped:
    vp: str
    reason: str


@dataclass(frozen=True)
class ConstraintCarried:
    constraint: Constraint


@dataclass(frozen=True)
class ConstraintDiscarded:
    constraint: Constraint
    reason: str


Effect = Union[
    VariantRemoved, VariantPromoted, CardinalityAdjusted, VpDropped, ConstraintCarried, ConstraintDiscarded
]


def effect_to_json(effect: Effect) -> dict:
    if isinstance(effect, VariantRemoved):
        return {"effect": "variant-removed", "variant": effect.variant, "cause": str(effect.cause)}
    if isinstance(effect, VariantPromoted):
        return {"effect": "variant-promoted", "variant": effect.variant, "vp": effect.vp, "cause": str(effect.cause)}
    if isinstance(effect, CardinalityAdjusted):
        return {"effect": "cardinality-adjusted", "vp": effect.vp, "old": list(effect.old), "new": list(effect.new)}
    if isinstance(effect, VpDropped):
        return {"effect": "vp-dropped", "vp": effect.vp, "reason": effect.reason}
    if isinstance(effect, ConstraintCarried):
        return {"effect": "constraint-carried", "constraint": str(effect.constraint)}
    if isinstance(effect, ConstraintDiscarded):
        return {"effect": "constraint-discarded", "constraint": str(effect.constraint), "reason": effect.reason}
    raise TypeError(f"not an effect: {effect!r}")


@dataclass(frozen=True)
class DerivationTrace:
    effects: tuple[Effect, ...]

    def to_json(self) -> list[dict]:
        return [effect_to_json(e) for e in self.effects]


@dataclass(frozen=True)
class CustomizationModel:
    """A variability model whose VPs are all external, with provenance."""

    model: VariabilityModel
    source_name: str
    binding: DeveloperBinding


class DerivationError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(f"{d.code}: {d.message}" for d in diagnostics))
        self.diagnostics = diagnostics


def _der(code: str, message: str, *subject: str) -> DerivationError:
    return DerivationError([error(code, message, *subject)])


class _VpStatus(Enum):
    INTERNAL = "internal"  # live internal VP (standalone state, pre-binding)
    BOUND = "bound"  # internal VP consumed by the binding
    RETAINED = "retained"  # external, never a requires target: always kept
    PENDING = "pending"  # external requires target, retention undecided
    REQUIRED = "required"  # external requires target, actively required
    DROPPED_EXCLUDED = "dropped-excluded"
    DROPPED_EMPTY = "dropped-empty"
    DROPPED_NOT_REQUIRED = "dropped-not-required"

    @property
    def survives(self) -> bool:
        return self in (_VpStatus.RETAINED, _VpStatus.PENDING, _VpStatus.REQUIRED)


class _WorkingVP:
    __slots__ = ("vp", "mandatory", "optional", "group_min", "group_max", "members", "has_group")

    def __init__(self, vp: VariationPoint):
        self.vp = vp
        self.mandatory = list(vp.mandatory_edges)
        self.optional = list(vp.optional_edges)
        self.has_group = vp.group is not None
        self.group_min = vp.group.min if vp.group else 0
        self.group_max = vp.group.max if vp.group else 0
        self.members = list(vp.group.members) if vp.group else []

    def variant_ids(self) -> list[str]:
        return [e.variant_id for e in self.mandatory + self.optional + self.members]

    def to_vp(self) -> VariationPoint:
        group = None
        if self.has_group:
            group = AlternativeGroup(self.group_min, self.group_max, tuple(self.members))
        return VariationPoint(
            self.vp.id,
            self.vp.visibility,
            self.vp.layer,
            tuple(self.mandatory),
            tuple(self.optional),
            group,
        )


class DerivationState:
    """Mutable working state of one derivation; exposed so the single
    constraint-application steps can be exercised directly."""

    def __init__(self, model: VariabilityModel, binding: Optional[DeveloperBinding] = None):
        self.model = model
        self.binding = binding
        self.working: dict[str, _WorkingVP] = {vp.id: _WorkingVP(vp) for vp in model.vps}
        self.order: list[str] = model.vp_ids()
        requires_targets = {
            c.target
            for c in model.effective_constraints()
            if c.kind is ConstraintKind.REQUIRES and model.vp(c.target) is not None
        }
        self.status: dict[str, _VpStatus] = {}
        for vp in model.vps:
            if vp.visibility is Visibility.INTERNAL:
                self.status[vp.id] = _VpStatus.INTERNAL
            elif vp.id in requires_targets:
                self.status[vp.id] = _VpStatus.PENDING
            else:
                self.status[vp.id] = _VpStatus.RETAINED
        self.established: set[str] = set()
        self.removed: set[str] = set()
        self.chosen_at: dict[str, frozenset[str]] = {}  # bound internal VP -> effective choice
        self.queue: list[str] = []
        self.fired: set[tuple[tuple[str, str, str], str]] = set()
        self.effects: list[Effect] = []

    @classmethod
    def from_model(cls, model: VariabilityModel) -> "DerivationState":
        return cls(model)

    # -- helpers ------------------------------------------------------------

    def live_hosts(self, variant_id: str) -> list[_WorkingVP]:
        return [
            self.working[vp_id]
            for vp_id in self.order
            if self.status[vp_id].survives or self.status[vp_id] is _VpStatus.INTERNAL
            if variant_id in self.working[vp_id].variant_ids()
        ]

    def establish(self, variant_id: str) -> None:
        if variant_id not in self.established:
            self.established.add(variant_id)
            self.queue.append(variant_id)

    def activate_vp(self, vp_id: str) -> None:
        if vp_id not in self.established:
            self.established.add(vp_id)
            self.queue.append(vp_id)

    def is_mandatory_somewhere(self, variant_id: str) -> bool:
        return any(
            variant_id in (e.variant_id for e in host.mandatory) for host in self.live_hosts(variant_id)
        )

    def _retain(self, vp_id: str) -> None:
        """An active requires established this external VP as part of the product."""
        self.status[vp_id] = _VpStatus.REQUIRED
        wvp = self.working[vp_id]
        for e in wvp.mandatory:
            self.establish(e.variant_id)
        if self.always_part(wvp):
            self.activate_vp(vp_id)
        self.check_saturation(wvp)

    @staticmethod
    def always_part(wvp: _WorkingVP) -> bool:
        """Whether this VP has a selected variant in every product containing it."""
        return bool(wvp.mandatory) or (wvp.has_group and wvp.group_min >= 1)

    def check_saturation(self, wvp: _WorkingVP) -> None:
        """A group whose minimum equals its member count forces every member,
        exactly like mandatory edges. Saturation can also arise mid-propagation
        when removals or promotions shrink a group."""
        if not (wvp.has_group and wvp.members and wvp.group_min == len(wvp.members)):
            return
        if wvp.vp.visibility is Visibility.EXTERNAL and self.status[wvp.vp.id].survives:
            for e in list(wvp.members):
                self.establish(e.variant_id)

    def _drop_group_if_empty(self, wvp: _WorkingVP) -> None:
        if wvp.has_group and not wvp.members:
            wvp.has_group = False
            wvp.group_min = wvp.group_max = 0

    def _drop_vp_if_empty(self, wvp: _WorkingVP) -> None:
        if not wvp.variant_ids() and self.status[wvp.vp.id].survives:
            self.status[wvp.vp.id] = _VpStatus.DROPPED_EMPTY
            self.effects.append(VpDropped(wvp.vp.id, "no variants left"))
            self._contrapositive_vp(wvp.vp.id)

    def _remove_at(self, wvp: _WorkingVP, variant_id: str) -> None:
        """Detach one variant from one VP, clamping group cardinality."""
        wvp.optional = [e for e in wvp.optional if e.variant_id != variant_id]
        if any(e.variant_id == variant_id for e in wvp.members):
            wvp.members = [e for e in wvp.members if e.variant_id != variant_id]
            remaining = len(wvp.members)
            if wvp.group_min > remaining:
                raise _der(
                    "DER003",
                    f"removing '{variant_id}' leaves group of '{wvp.vp.id}' below its minimum "
                    f"({wvp.group_min} over {remaining} members)",
                    wvp.vp.id,
                    variant_id,
                )
            new_max = min(wvp.group_max, remaining)
            if new_max != wvp.group_max:
                self.effects.append(
                    CardinalityAdjusted(wvp.vp.id, (wvp.group_min, wvp.group_max), (wvp.group_min, new_max))
                )
                wvp.group_max = new_max
            self._drop_group_if_empty(wvp)
            self.check_saturation(wvp)
        self._drop_vp_if_empty(wvp)

    def remove_variant(self, variant_id: str, cause: Constraint) -> None:
        """Remove a variant from every VP that contains it (never part of any product)."""
        if variant_id in self.removed:
            return
        if variant_id in self.established or self.is_mandatory_somewhere(variant_id):
            raise _der(
                "DER002",
                f"variant '{variant_id}' is both required in every product and removed by '{cause}'",
                variant_id,
            )
        self.removed.add(variant_id)
        self.effects.append(VariantRemoved(variant_id, cause))
        for wvp in list(self.live_hosts(variant_id)):
            self._remove_at(wvp, variant_id)
        self._contrapositive_variant(variant_id)

    def _contrapositive_variant(self, removed_id: str) -> None:
        # requires(u, x) with x unavailable forces u out as well.
        for c in self.model.effective_constraints():
            if c.kind is ConstraintKind.REQUIRES and c.target == removed_id:
                u = c.source
                if self.model.vp(u) is not None or u in self.removed:
                    continue
                if u in self.established or self.is_mandatory_somewhere(u):
                    raise _der(
                        "DER002",
                        f"'{u}' is part of every product but requires removed '{removed_id}'",
                        u,
                        removed_id,
                    )
                self.remove_variant(u, c)

    def _contrapositive_vp(self, dropped_vp: str) -> None:
        # requires(u, VP) where the VP can never be part of a product.
        for c in self.model.effective_constraints():
            if c.kind is ConstraintKind.REQUIRES and c.target == dropped_vp:
                u = c.source
                if self.model.vp(u) is not None or u in self.removed:
                    continue
                if u in self.established or self.is_mandatory_somewhere(u):
                    raise _der(
                        "DER002",
                        f"'{u}' is part of every product but requires dropped VP '{dropped_vp}'",
                        u,
                        dropped_vp,
                    )
                self.remove_variant(u, c)


def _find_constraint(model: VariabilityModel, kind: ConstraintKind, a: str, b: str) -> Constraint:
    for c in model.effective_constraints():
        if c.kind is kind and (c.source, c.target) == (a, b):
            return c
        if kind is ConstraintKind.EXCLUDES and c.kind is kind and (c.source, c.target) == (b, a):
            return c
    raise ValueError(f"no {kind.value} constraint between '{a}' and '{b}'")


def apply_excludes(
    state: DerivationState, active: str, other: str, cause: Optional[Constraint] = None
) -> list[Effect]:
    """Active element excludes `other`: remove the variant everywhere, or drop
    the VP with its exclusive variants. Returns the effects it recorded."""
    cause = cause or _find_constraint(state.model, ConstraintKind.EXCLUDES, active, other)
    state.established.add(active)
    start = len(state.effects)
    vp = state.model.vp(other)
    if vp is None:
        if other in state.established:
            raise _der(
                "DER002", f"'{other}' is both part of every product and excluded by '{cause}'", other
            )
        state.remove_variant(other, cause)
        return state.effects[start:]

    status = state.status[other]
    if vp.visibility is Visibility.INTERNAL:
        chosen = state.chosen_at.get(other)
        if chosen is None or chosen:
            raise _der(
                "DER002",
                f"excluded internal VP '{other}' is bound with a nonempty choice ('{cause}')",
                other,
            )
        return state.effects[start:]
    if status is _VpStatus.REQUIRED or state.always_part(state.working[other]):
        raise _der(
            "DER002",
            f"VP '{other}' is part of every product but excluded by '{cause}'",
            other,
        )
    if not status.survives:
        return state.effects[start:]
    state.status[other] = _VpStatus.DROPPED_EXCLUDED
    state.effects.append(VpDropped(other, f"excluded by '{cause}'"))
    wvp = state.working[other]
    for variant_id in list(wvp.variant_ids()):
        if not [h for h in state.live_hosts(variant_id) if h.vp.id != other]:
            # exclusive to the dropped VP: gone from the product line
            if variant_id in state.established:
                raise _der(
                    "DER002",
                    f"variant '{variant_id}' is part of every product but its only VP "
                    f"'{other}' was excluded by '{cause}'",
                    variant_id,
                )
            if variant_id not in state.removed:
                state.removed.add(variant_id)
                state._contrapositive_variant(variant_id)
    state._contrapositive_vp(other)
    return state.effects[start:]


def apply_requires(
    state: DerivationState, active: str, needed: str, cause: Optional[Constraint] = None
) -> list[Effect]:
    """Active element requires `needed`: promote the variant to mandatory at
    its VPs (shifting group cardinality), or retain the VP. Idempotent: an
    already-established target yields no effects."""
    cause = cause or _find_constraint(state.model, ConstraintKind.REQUIRES, active, needed)
    state.established.add(active)
    start = len(state.effects)
    vp = state.model.vp(needed)
    if vp is not None:
        status = state.status[needed]
        if vp.visibility is Visibility.INTERNAL:
            chosen = state.chosen_at.get(needed)
            if chosen is not None and not chosen:
                raise _der(
                    "DER002",
                    f"required internal VP '{needed}' is bound with an empty choice ('{cause}')",
                    needed,
                )
            return state.effects[start:]
        if status in (_VpStatus.DROPPED_EXCLUDED, _VpStatus.DROPPED_EMPTY):
            raise _der(
                "DER002", f"required VP '{needed}' was already dropped ('{cause}')", needed
            )
        if status is _VpStatus.PENDING:
            state._retain(needed)
        return state.effects[start:]

    if needed in state.removed:
        raise _der(
            "DER002", f"'{active}' requires '{needed}', which was removed earlier", active, needed
        )
    if needed in state.established:
        return state.effects[start:]

    hosts = state.live_hosts(needed)
    promoted_any = False
    for wvp in hosts:
        vp_id = wvp.vp.id
        if any(e.variant_id == needed for e in wvp.mandatory):
            promoted_any = True
            continue
        edge = next((e for e in wvp.optional if e.variant_id == needed), None)
        if edge is not None:
            wvp.optional.remove(edge)
            wvp.mandatory.append(VariantEdge(needed, EdgeKind.MANDATORY, guard=edge.guard))
            state.effects.append(VariantPromoted(needed, vp_id, cause))
            promoted_any = True
        else:
            member = next((e for e in wvp.members if e.variant_id == needed), None)
            if member is None:
                continue
            if wvp.group_max < 1:
                raise _der(
                    "DER002",
                    f"cannot promote '{needed}' in group of '{vp_id}': no selectable slot remains",
                    vp_id,
                    needed,
                )
            wvp.members.remove(member)
            wvp.mandatory.append(VariantEdge(needed, EdgeKind.MANDATORY, guard=member.guard))
            old = (wvp.group_min, wvp.group_max)
            new = (max(0, wvp.group_min - 1), wvp.group_max - 1)
            state.effects.append(VariantPromoted(needed, vp_id, cause))
            state.effects.append(CardinalityAdjusted(vp_id, old, new))
            wvp.group_min, wvp.group_max = new
            state._drop_group_if_empty(wvp)
            state.check_saturation(wvp)
            promoted_any = True
        if state.status[vp_id] is _VpStatus.PENDING:
            # a variant forced into every product pins its customization point
            state._retain(vp_id)
        elif state.status[vp_id].survives:
            state.activate_vp(vp_id)  # the VP now carries a mandatory edge
    if not promoted_any:
        raise _der(
            "DER002", f"'{active}' requires '{needed}', which no surviving VP offers", active, needed
        )
    state.establish(needed)
    return state.effects[start:]


def _validate_binding(model: VariabilityModel, binding: DeveloperBinding) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    internal = {vp.id: vp for vp in model.internal_vps()}
    bound = binding.as_dict()
    for vp_id in bound:
        if vp_id not in internal:
            diags.append(error("DER004", f"binding names '{vp_id}', which is not an internal VP", vp_id))
    for vp_id in internal:
        if vp_id not in bound:
            diags.append(error("DER004", f"internal VP '{vp_id}' is not bound", vp_id))
    for vp_id, chosen in bound.items():
        vp = internal.get(vp_id)
        if vp is None:
            continue
        attached = set(vp.variant_ids())
        for v in chosen:
            if v not in attached:
                diags.append(
                    error("DER001", f"'{v}' is not a variant of bound VP '{vp_id}'", vp_id, v)
                )
        if vp.group is not None:
            members = {e.variant_id for e in vp.group.members}
            count = len(set(chosen) & members)
            if not (vp.group.min <= count <= vp.group.max):
                diags.append(
                    error(
                        "DER001",
                        f"binding chooses {count} of group [{vp.group.min}..{vp.group.max}] at '{vp_id}'",
                        vp_id,
                    )
                )
    return diags


def derive(model: VariabilityModel, binding: DeveloperBinding) -> tuple[CustomizationModel, DerivationTrace]:
    """Derive the tenant-facing customization model.

    Raises DerivationError with DER001..DER004 diagnostics when the binding is
    invalid or constraint propagation reaches a contradiction.
    """
    wf = well_formed(model)
    if has_errors(wf):
        raise DerivationError([d for d in wf if d.severity is Severity.ERROR])
    diags = _validate_binding(model, binding)
    if diags:
        raise DerivationError(diags)

    state = DerivationState(model, binding)

    # Establish every developer choice first (a variant unchosen at one VP may
    # be chosen at another), then drop the bound VPs and remove variants that
    # no longer exist anywhere. The applied binding keeps the developer's
    # order and appends the auto-included mandatory variants.
    applied: list[tuple[str, tuple[str, ...]]] = []
    for vp_id, chosen in binding.choices:
        vp = model.vp(vp_id)
        extra = tuple(
            e.variant_id for e in vp.mandatory_edges if e.variant_id not in chosen
        )
        ordered = tuple(dict.fromkeys(chosen)) + extra
        applied.append((vp_id, ordered))
        effective = frozenset(ordered)
        state.chosen_at[vp_id] = effective
        for v in sorted(effective):
            state.establish(v)
        if effective:
            state.activate_vp(vp_id)

    for vp_id, _ in binding.choices:
        vp = model.vp(vp_id)
        state.status[vp_id] = _VpStatus.BOUND
        state.effects.append(VpDropped(vp_id, "bound"))
        for variant_id in vp.variant_ids():
            if variant_id in state.established or variant_id in state.removed:
                continue
            if all(h.visibility is Visibility.INTERNAL for h in model.hosts_of(variant_id)):
                # unchosen and offered nowhere survivable: never part of a product
                state.removed.add(variant_id)
                state._contrapositive_variant(variant_id)

    # Mandatory and group-saturated variants of external VPs are part of every
    # product and fire constraints. This includes retention-pending CPs:
    # dropping a CP removes it from the tenant view, not from the product the
    # source model defines.
    for vp in model.external_vps():
        if state.status[vp.id] in (_VpStatus.RETAINED, _VpStatus.PENDING):
            wvp = state.working[vp.id]
            for e in vp.mandatory_edges:
                state.establish(e.variant_id)
            state.check_saturation(wvp)
            if state.always_part(wvp):
                state.activate_vp(vp.id)

    # Fixpoint: fire each constraint once per active endpoint.
    while state.queue:
        element = state.queue.pop(0)
        if element in state.removed:
            continue
        for c in model.effective_constraints():
            if c.kind is ConstraintKind.REQUIRES:
                if c.source == element and (c.key(), element) not in state.fired:
                    state.fired.add((c.key(), element))
                    apply_requires(state, element, c.target, c)
            else:
                for other in ((c.target,) if c.source == element else (c.source,) if c.target == element else ()):
                    if (c.key(), element) not in state.fired:
                        state.fired.add((c.key(), element))
                        apply_excludes(state, element, other, c)

    # Retention: requires-targeted CPs nobody required are not part of this product.
    for vp in model.external_vps():
        if state.status[vp.id] is _VpStatus.PENDING:
            state.status[vp.id] = _VpStatus.DROPPED_NOT_REQUIRED
            state.effects.append(VpDropped(vp.id, "required by no chosen variant"))

    surviving_vps = [state.working[vp_id].to_vp() for vp_id in state.order if state.status[vp_id].survives]
    surviving_variant_ids = {v for vp in surviving_vps for v in vp.variant_ids()}
    vp_survives = {vp.id for vp in surviving_vps}

    carried: list[Constraint] = []
    for c in model.effective_constraints():
        dead = []
        for endpoint in (c.source, c.target):
            if model.vp(endpoint) is not None:
                if endpoint not in vp_survives:
                    dead.append(f"VP '{endpoint}' did not survive")
            elif endpoint not in surviving_variant_ids:
                dead.append(f"variant '{endpoint}' did not survive")
        if dead:
            state.effects.append(ConstraintDiscarded(c, "; ".join(dead)))
        else:
            carried.append(c)
            state.effects.append(ConstraintCarried(c))

    out = VariabilityModel(
        name=f"{model.name}-derived",
        vps=tuple(surviving_vps),
        variants=tuple(v for v in model.variants if v.id in surviving_variant_ids),
        constraints=tuple(carried),
    )
    check = well_formed(out)
    if has_errors(check):
        raise DerivationError(
            [error("DER002", f"derived model is not well-formed: {d.code}: {d.message}") for d in check]
        )
    cm = CustomizationModel(out, model.name, DeveloperBinding(tuple(applied)))
    return cm, DerivationTrace(tuple(state.effects))


def replay(model: VariabilityModel, trace: DerivationTrace) -> VariabilityModel:
    """Apply a trace's effects to the source model; reproduces derive's output."""
    working = {vp.id: _WorkingVP(vp) for vp in model.vps}
    order = model.vp_ids()
    dropped: set[str] = set()
    carried: list[Constraint] = []
    for effect in trace.effects:
        if isinstance(effect, VpDropped):
            dropped.add(effect.vp)
        elif isinstance(effect, VariantRemoved):
            for vp_id in order:
                if vp_id in dropped:
                    continue
                wvp = working[vp_id]
                wvp.optional = [e for e in wvp.optional if e.variant_id != effect.variant]
                wvp.members = [e for e in wvp.members if e.variant_id != effect.variant]
                if wvp.has_group and not wvp.members:
                    wvp.has_group = False
                    wvp.group_min = wvp.group_max = 0
        elif isinstance(effect, VariantPromoted):
            wvp = working[effect.vp]
            edge = next(
                e for e in wvp.optional + wvp.members if e.variant_id == effect.variant
            )
            wvp.optional = [e for e in wvp.optional if e.variant_id != effect.variant]
            wvp.members = [e for e in wvp.members if e.variant_id != effect.variant]
            wvp.mandatory.append(VariantEdge(effect.variant, EdgeKind.MANDATORY, guard=edge.guard))
            if wvp.has_group and not wvp.members:
                wvp.has_group = False
                wvp.group_min = wvp.group_max = 0
        elif isinstance(effect, CardinalityAdjusted):
            wvp = working[effect.vp]
            wvp.group_min, wvp.group_max = effect.new
        elif isinstance(effect, ConstraintCarried):
            carried.append(effect.constraint)
    vps = tuple(working[vp_id].to_vp() for vp_id in order if vp_id not in dropped)
    attached = {v for vp in vps for v in vp.variant_ids()}
    return VariabilityModel(
        name=f"{model.name}-derived",
        vps=vps,
        variants=tuple(v for v in model.variants if v.id in attached),
        constraints=tuple(carried),
    )
