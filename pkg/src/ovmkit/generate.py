"""Seeded random model generation for corpus-style testing.

The generator emits well-formed models in the semantically coherent subset:
each variant is attached to exactly one VP, constraints are sourced at
variants, requires may target a VP only when that VP carries a mandatory
variant, excludes never has VP endpoints, and nothing is sourced at a variant
of a droppable (requires-targeted external) VP. Within that subset derivation
and full-model enumeration are checked against each other exactly.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterator

from .analysis import local_choices
from .derivation import DeveloperBinding
from .model import (
    AlternativeGroup,
    Constraint,
    ConstraintKind,
    EdgeKind,
    Layer,
    Variant,
    VariantEdge,
    VariabilityModel,
    VariationPoint,
    Visibility,
)

_LAYERS = list(Layer)


def _random_vp(rng: random.Random, vp_id: str, visibility: Visibility, fresh) -> VariationPoint:
    layer = rng.choice(_LAYERS)

    def guard() -> str | None:
        return f"cond_{rng.randrange(100)}" if rng.random() < 0.2 else None

    def edge(kind=EdgeKind.OPTIONAL) -> VariantEdge:
        return VariantEdge(fresh(), kind, guard=guard())

    mandatory: list[VariantEdge] = []
    optional: list[VariantEdge] = []
    group = None
    shape = rng.random()
    if shape < 0.30:
        for _ in range(rng.randint(1, 2)):
            mandatory.append(edge(EdgeKind.MANDATORY))
    elif shape < 0.55:
        members = [edge() for _ in range(rng.randint(2, 3))]
        hi = rng.randint(1, len(members))
        lo = rng.randint(0, hi)
        group = AlternativeGroup(lo, hi, tuple(members))
    elif shape < 0.80:
        mandatory.append(edge(EdgeKind.MANDATORY))
        members = [edge() for _ in range(2)]
        hi = rng.randint(1, 2)
        group = AlternativeGroup(rng.randint(0, hi), hi, tuple(members))
    else:
        for _ in range(rng.randint(1, 2)):
            optional.append(edge())
        if rng.random() < 0.5:
            mandatory.append(edge(EdgeKind.MANDATORY))
    return VariationPoint(vp_id, visibility, layer, tuple(mandatory), tuple(optional), group)


def random_model(
    rng: random.Random, max_variants: int = 12, max_constraints: int = 6
) -> VariabilityModel:
    counter = itertools.count(1)
    made: list[str] = []

    def fresh() -> str:
        vid = f"V{next(counter)}"
        made.append(vid)
        return vid

    vps: list[VariationPoint] = []
    n_vps = rng.randint(2, 5)
    internal_slots = rng.randint(1, max(1, n_vps - 1))
    for i in range(n_vps):
        if len(made) > max_variants - 3:  # a VP adds at most 3 variants
            break
        visibility = Visibility.INTERNAL if i < internal_slots else Visibility.EXTERNAL
        prefix = "VP" if visibility is Visibility.INTERNAL else "CP"
        vps.append(_random_vp(rng, f"{prefix}{i + 1}", visibility, fresh))
    if all(vp.visibility is Visibility.INTERNAL for vp in vps):
        last = vps[-1]
        vps[-1] = VariationPoint(
            "CP" + last.id.removeprefix("VP"),
            Visibility.EXTERNAL,
            last.layer,
            last.mandatory_edges,
            last.optional_edges,
            last.group,
        )

    host_of = {v: vp.id for vp in vps for v in vp.variant_ids()}
    vp_by_id = {vp.id: vp for vp in vps}
    # declaration order = first mention in canonical DSL form
    variants = [Variant(v) for vp in vps for v in vp.variant_ids()]
    constraints: list[Constraint] = []
    seen_keys: set[tuple[str, str, str]] = set()
    targeted_cps: set[str] = set()

    def forced_at_host(variant: str) -> bool:
        vp = vp_by_id[host_of[variant]]
        if any(e.variant_id == variant for e in vp.mandatory_edges):
            return True
        if vp.group and vp.group.min == len(vp.group.members):
            return any(e.variant_id == variant for e in vp.group.members)
        return False

    def free_at_droppable(variant: str, targets: set[str]) -> bool:
        # free variants of requires-targeted (droppable) CPs stay out of
        # constraints: the retention rule gives their interactions no
        # agreed semantics beyond what the forced variants carry
        return host_of[variant] in targets and not forced_at_host(variant)

    attempts = 0
    want = rng.randint(0, max_constraints)
    while len(constraints) < want and attempts < 60:
        attempts += 1
        kind = rng.choice([ConstraintKind.REQUIRES, ConstraintKind.REQUIRES, ConstraintKind.EXCLUDES])
        source = rng.choice(variants).id
        if free_at_droppable(source, targeted_cps):
            continue
        if kind is ConstraintKind.REQUIRES and rng.random() < 0.25:
            candidates = [
                vp.id
                for vp in vps
                if vp.visibility is Visibility.EXTERNAL
                and vp.mandatory_edges
                and vp.id != host_of[source]
            ]
            if not candidates:
                continue
            target = rng.choice(candidates)
            widened = targeted_cps | {target}
            endpoints = {source} | {
                e for c in constraints for e in (c.source, c.target) if e in host_of
            }
            if any(free_at_droppable(e, widened) for e in endpoints):
                continue
            targeted_cps.add(target)
        else:
            target = rng.choice(variants).id
            if target == source or free_at_droppable(target, targeted_cps):
                continue
        c = Constraint(kind, source, target)
        if c.key() in seen_keys:
            continue
        seen_keys.add(c.key())
        constraints.append(c)

    return VariabilityModel(
        name=f"R{rng.randrange(10**6)}",
        vps=tuple(vps),
        variants=tuple(variants),
        constraints=tuple(constraints),
    )


def valid_bindings(model: VariabilityModel, limit: int = 256) -> Iterator[DeveloperBinding]:
    """Every locally-legal developer binding of the internal VPs (cardinality
    and mandatory rules honored; cross-tree constraints deliberately ignored
    so contradictory bindings exercise the error paths too)."""
    internal = model.internal_vps()
    per_vp = [[sorted(choice) for choice in local_choices(vp)] for vp in internal]
    count = 0
    for combo in itertools.product(*per_vp):
        if count >= limit:
            return
        count += 1
        yield DeveloperBinding.of({vp.id: chosen for vp, chosen in zip(internal, combo)})


def binding_count(model: VariabilityModel) -> int:
    n = 1
    for vp in model.internal_vps():
        n *= len(local_choices(vp))
    return n
