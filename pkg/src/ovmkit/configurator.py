"""Tenant-stage machinery: configuration validation and interactive sessions.

Sessions are immutable values; decide/retract return new sessions and leave
the old one usable. Forced decisions are always recomputed from scratch from
the remaining tenant decisions, trading speed for correctness at desk scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

from . import analysis
from .model import ConstraintKind, Diagnostic, VariabilityModel, error
from .derivation import CustomizationModel

EXACT_PAIR_CAP = 16  # ≤ 2^16 completions: exact propagation by enumeration

Pair = tuple[str, str]  # (cp id, variant id)


class Decision(str, Enum):
    SELECTED = "selected"
    DESELECTED = "deselected"
    UNDECIDED = "undecided"


class SessionError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class TenantConfiguration:
    """A tenant's selections per customization point."""

    model_name: str
    selections: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def of(cls, model_name: str, mapping: dict[str, list[str] | tuple[str, ...]]) -> "TenantConfiguration":
        return cls(model_name, tuple((cp, tuple(vs)) for cp, vs in mapping.items()))

    @classmethod
    def from_json(cls, doc: dict) -> "TenantConfiguration":
        selections = doc.get("selections", {})
        if not isinstance(selections, dict):
            raise ValueError('configuration must have shape {"model": ..., "selections": {...}}')
        return cls.of(str(doc.get("model", "")), {cp: list(vs) for cp, vs in selections.items()})

    def to_json(self) -> dict:
        return {"model": self.model_name, "selections": {cp: list(vs) for cp, vs in self.selections}}

    def as_dict(self) -> dict[str, tuple[str, ...]]:
        return dict(self.selections)

    def selected_set(self) -> frozenset[str]:
        return frozenset(v for _, vs in self.selections for v in vs)


def _unwrap(cm: Union[CustomizationModel, VariabilityModel]) -> VariabilityModel:
    return cm.model if isinstance(cm, CustomizationModel) else cm


def _as_full(model: VariabilityModel, cfg: TenantConfiguration) -> analysis.FullConfiguration:
    selections = cfg.as_dict()
    return analysis.FullConfiguration(
        tuple((vp.id, frozenset(selections.get(vp.id, ()))) for vp in model.vps)
    )


def validate_configuration(
    cm: Union[CustomizationModel, VariabilityModel], cfg: TenantConfiguration
) -> list[Diagnostic]:
    """Check a complete tenant configuration; empty list means valid.

    CFG001 missing-mandatory, CFG002 cardinality-violation, CFG003
    constraint-violation, CFG004 unknown-selection. A VP constraint endpoint
    counts as satisfied by existing in the customization model.
    """
    model = _unwrap(cm)
    diags: list[Diagnostic] = []
    cp_ids = set(model.vp_ids())
    selections = cfg.as_dict()

    for cp in selections:
        if cp not in cp_ids:
            diags.append(error("CFG004", f"selection names unknown customization point '{cp}'", cp))

    selected = cfg.selected_set()
    for vp in model.vps:
        chosen = set(selections.get(vp.id, ()))
        attached = set(vp.variant_ids())
        for v in sorted(chosen - attached):
            diags.append(error("CFG004", f"'{v}' is not a variant of '{vp.id}'", vp.id, v))
        for e in vp.mandatory_edges:
            if e.variant_id not in chosen:
                diags.append(error("CFG001", f"mandatory variant '{e.variant_id}' of '{vp.id}' is not selected", vp.id, e.variant_id))
        if vp.group is not None:
            count = len(chosen & {e.variant_id for e in vp.group.members})
            if not (vp.group.min <= count <= vp.group.max):
                diags.append(
                    error(
                        "CFG002",
                        f"group of '{vp.id}' has {count} selected, outside [{vp.group.min}..{vp.group.max}]",
                        vp.id,
                    )
                )

    def part(endpoint: str) -> bool:
        if endpoint in cp_ids:
            return True  # a CP cannot be removed by a tenant
        return endpoint in selected

    for c in model.effective_constraints():
        if c.kind is ConstraintKind.REQUIRES:
            if part(c.source) and not part(c.target):
                diags.append(error("CFG003", f"constraint '{c}' is violated", c.source, c.target))
        else:
            if part(c.source) and part(c.target):
                diags.append(error("CFG003", f"constraint '{c}' is violated", c.source, c.target))
    return diags


@dataclass(frozen=True)
class PropagationReport:
    forced: tuple[tuple[Pair, Decision], ...]
    conflict: bool


@dataclass(frozen=True)
class ConfiguratorSession:
    cm: CustomizationModel
    tenant: tuple[tuple[Pair, Decision], ...] = ()
    forced: tuple[tuple[Pair, Decision], ...] = ()
    conflict: bool = False

    # -- structure ----------------------------------------------------------

    def pairs(self) -> list[Pair]:
        model = _unwrap(self.cm)
        return [(vp.id, e.variant_id) for vp in model.vps for e in vp.edges()]

    def mandatory_pairs(self) -> set[Pair]:
        model = _unwrap(self.cm)
        return {(vp.id, e.variant_id) for vp in model.vps for e in vp.mandatory_edges}

    def value(self, cp: str, variant: str) -> Decision:
        pair = (cp, variant)
        if pair in self.mandatory_pairs():
            return Decision.SELECTED
        for p, v in self.tenant:
            if p == pair:
                return v
        for p, v in self.forced:
            if p == pair:
                return v
        return Decision.UNDECIDED

    def is_forced(self, cp: str, variant: str) -> bool:
        """Mandatory pairs count as forced: they were never tenant decisions."""
        pair = (cp, variant)
        return pair in self.mandatory_pairs() or any(p == pair for p, _ in self.forced)

    def undecided_pairs(self) -> list[Pair]:
        fixed = self.mandatory_pairs() | {p for p, _ in self.tenant}
        return [p for p in self.pairs() if p not in fixed]

    @property
    def mode(self) -> str:
        return "exact" if len(self.undecided_pairs()) <= EXACT_PAIR_CAP else "heuristic"

    def selected_map(self) -> dict[str, list[str]]:
        model = _unwrap(self.cm)
        return {
            vp.id: [e.variant_id for e in vp.edges() if self.value(vp.id, e.variant_id) is Decision.SELECTED]
            for vp in model.vps
        }


def _completions(session: ConfiguratorSession, assumption: dict[Pair, Decision]) -> list[dict[Pair, bool]]:
    """Valid full completions consistent with mandatory + given fixed pairs."""
    model = _unwrap(session.cm)
    fixed: dict[Pair, bool] = {p: True for p in session.mandatory_pairs()}
    for pair, value in assumption.items():
        fixed[pair] = value is Decision.SELECTED
    free = [p for p in session.pairs() if p not in fixed]
    out = []
    for bits in itertools.product((False, True), repeat=len(free)):
        assignment = dict(fixed)
        assignment.update(zip(free, bits))
        config = analysis.FullConfiguration(
            tuple(
                (vp.id, frozenset(e.variant_id for e in vp.edges() if assignment[(vp.id, e.variant_id)]))
                for vp in model.vps
            )
        )
        if analysis.is_valid_configuration(session.cm, config):
            out.append(assignment)
    return out


def _exact_propagate(session: ConfiguratorSession) -> tuple[tuple[tuple[Pair, Decision], ...], bool]:
    assumption = dict(session.tenant)
    completions = _completions(session, assumption)
    if not completions:
        return session.forced, True
    forced: list[tuple[Pair, Decision]] = []
    for pair in session.undecided_pairs():
        values = {c[pair] for c in completions}
        if len(values) == 1:
            forced.append((pair, Decision.SELECTED if values.pop() else Decision.DESELECTED))
    return tuple(forced), False


def _heuristic_propagate(session: ConfiguratorSession) -> tuple[tuple[tuple[Pair, Decision], ...], bool]:
    """Unit-rule propagation: sound but not complete."""
    model = _unwrap(session.cm)
    cp_ids = set(model.vp_ids())
    state: dict[Pair, Decision] = {p: Decision.UNDECIDED for p in session.pairs()}
    for p in session.mandatory_pairs():
        state[p] = Decision.SELECTED
    locked = set(session.mandatory_pairs())
    for p, v in session.tenant:
        state[p] = v
        locked.add(p)
    forced: dict[Pair, Decision] = {}
    conflict = False

    def hosts(variant: str) -> list[Pair]:
        return [p for p in state if p[1] == variant]

    def assign(pair: Pair, value: Decision) -> bool:
        nonlocal conflict
        if state[pair] is value:
            return False
        if state[pair] is not Decision.UNDECIDED:
            conflict = True
            return False
        state[pair] = value
        if pair not in locked:
            forced[pair] = value
        return True

    def variant_selected(variant: str) -> bool:
        return any(state[p] is Decision.SELECTED for p in hosts(variant))

    def rule_pass() -> bool:
        changed = False
        for c in model.effective_constraints():
            src_is_cp = c.source in cp_ids
            tgt_is_cp = c.target in cp_ids
            if c.kind is ConstraintKind.REQUIRES:
                if tgt_is_cp:
                    continue  # the CP exists: satisfied
                if src_is_cp or variant_selected(c.source):
                    needed = hosts(c.target)
                    if len(needed) == 1:
                        changed |= assign(needed[0], Decision.SELECTED)
                    elif needed and all(state[p] is Decision.DESELECTED for p in needed):
                        nonlocal_conflict()
            else:
                if src_is_cp and tgt_is_cp:
                    nonlocal_conflict()  # carried modeling error: always violated
                elif src_is_cp or tgt_is_cp:
                    variant = c.target if src_is_cp else c.source
                    for p in hosts(variant):
                        changed |= assign(p, Decision.DESELECTED)
                else:
                    if variant_selected(c.source):
                        for p in hosts(c.target):
                            changed |= assign(p, Decision.DESELECTED)
                    if variant_selected(c.target):
                        for p in hosts(c.source):
                            changed |= assign(p, Decision.DESELECTED)
        for vp in model.vps:
            if vp.group is None:
                continue
            member_pairs = [(vp.id, e.variant_id) for e in vp.group.members]
            selected = [p for p in member_pairs if state[p] is Decision.SELECTED]
            undecided = [p for p in member_pairs if state[p] is Decision.UNDECIDED]
            if len(selected) > vp.group.max or len(selected) + len(undecided) < vp.group.min:
                nonlocal_conflict()
            elif len(selected) == vp.group.max:
                for p in undecided:
                    changed |= assign(p, Decision.DESELECTED)
            elif len(selected) + len(undecided) == vp.group.min:
                for p in undecided:
                    changed |= assign(p, Decision.SELECTED)
        return changed

    def nonlocal_conflict() -> None:
        nonlocal conflict
        conflict = True

    while not conflict and rule_pass():
        pass
    if conflict:
        return session.forced, True
    return tuple(sorted(forced.items())), False


def _propagate(session: ConfiguratorSession, mode_override: Optional[str] = None) -> ConfiguratorSession:
    mode = mode_override or session.mode
    if mode == "exact":
        forced, conflict = _exact_propagate(session)
    else:
        forced, conflict = _heuristic_propagate(session)
    return replace(session, forced=forced, conflict=conflict)


def new_session(cm: CustomizationModel) -> ConfiguratorSession:
    """Fresh session: mandatory variants locked selected, everything else
    undecided. SES001 if the model admits no configuration at all (exact mode)."""
    session = ConfiguratorSession(cm)
    if session.mode == "exact":
        if not _completions(session, {}):
            raise SessionError("SES001", f"'{_unwrap(cm).name}' admits no valid configuration")
    return session


def decide(
    session: ConfiguratorSession,
    cp: str,
    variant: str,
    value: Decision,
    mode_override: Optional[str] = None,
) -> tuple[ConfiguratorSession, PropagationReport]:
    if value is Decision.UNDECIDED:
        raise ValueError("decide() takes selected or deselected; retract() clears a decision")
    pair = (cp, variant)
    if pair not in set(session.pairs()):
        raise SessionError("SES003", f"no variant '{variant}' at '{cp}'")
    if pair in session.mandatory_pairs():
        raise SessionError("SES002", f"'{variant}' is mandatory at '{cp}'")
    if session.is_forced(cp, variant):
        raise SessionError("SES002", f"'{variant}' at '{cp}' is locked by propagation")
    tenant = tuple(t for t in session.tenant if t[0] != pair) + ((pair, value),)
    before = {p for p, _ in session.forced}
    updated = _propagate(replace(session, tenant=tenant), mode_override)
    newly = tuple((p, v) for p, v in updated.forced if p not in before)
    return updated, PropagationReport(newly, updated.conflict)


def retract(
    session: ConfiguratorSession, cp: str, variant: str, mode_override: Optional[str] = None
) -> ConfiguratorSession:
    pair = (cp, variant)
    if pair not in set(session.pairs()):
        raise SessionError("SES003", f"no variant '{variant}' at '{cp}'")
    if pair in session.mandatory_pairs():
        raise SessionError("SES002", f"'{variant}' is mandatory at '{cp}'")
    if session.is_forced(cp, variant):
        raise SessionError("SES004", f"'{variant}' at '{cp}' was forced by propagation; retract its cause instead")
    if not any(p == pair for p, _ in session.tenant):
        raise SessionError("SES004", f"'{variant}' at '{cp}' carries no tenant decision")
    tenant = tuple(t for t in session.tenant if t[0] != pair)
    return _propagate(replace(session, tenant=tenant, forced=(), conflict=False), mode_override)


def complete(session: ConfiguratorSession) -> tuple[Optional[TenantConfiguration], list[Diagnostic]]:
    """Project the session onto a configuration, treating undecided as
    deselected; returns (configuration, []) or (None, blocking diagnostics)."""
    model = _unwrap(session.cm)
    cfg = TenantConfiguration.of(model.name, session.selected_map())
    diags = validate_configuration(session.cm, cfg)
    if diags:
        return None, diags
    return cfg, []
