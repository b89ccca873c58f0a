"""Brute-force semantic analysis: enumeration, void detection, dead variants.

This module is the independent oracle the rest of the engine is checked
against, so it stays deliberately simple: per-VP choice generation and a flat
validity predicate. Correctness is defined by the unpruned predicate; the
per-VP generation only prunes locally-illegal selections.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

from .model import ConstraintKind, VariabilityModel

DEFAULT_CAP = 1_000_000


class CapExceededError(Exception):
    def __init__(self, raw_space: int, cap: int):
        super().__init__(f"raw choice space {raw_space} exceeds cap {cap}")
        self.raw_space = raw_space
        self.cap = cap


class UnsupportedModelError(Exception):
    """Model uses an excludes constraint against a VP with mandatory variants;
    those have no agreed semantics and are refused rather than guessed."""


@dataclass(frozen=True)
class FullConfiguration:
    """Chosen-variant sets covering every VP of a model, in declaration order."""

    selections: tuple[tuple[str, frozenset[str]], ...]

    def get(self, vp_id: str) -> frozenset[str]:
        for key, chosen in self.selections:
            if key == vp_id:
                return chosen
        raise KeyError(vp_id)

    def selected(self) -> frozenset[str]:
        out: set[str] = set()
        for _, chosen in self.selections:
            out |= chosen
        return frozenset(out)

    def as_dict(self) -> dict[str, frozenset[str]]:
        return dict(self.selections)

    def restrict(self, vp_ids: Iterable[str]) -> "FullConfiguration":
        keep = set(vp_ids)
        return FullConfiguration(tuple((k, v) for k, v in self.selections if k in keep))


def _unwrap(model) -> tuple[VariabilityModel, bool]:
    """Accept either a plain model or a derived customization model.

    For customization models a VP constraint endpoint counts as "part of the
    product" by existing: tenants cannot remove CPs at runtime.
    """
    inner = getattr(model, "model", None)
    if isinstance(inner, VariabilityModel):
        return inner, True
    return model, False


def _reject_unsupported(model: VariabilityModel) -> None:
    with_mandatory = {vp.id for vp in model.vps if vp.mandatory_edges}
    for c in model.effective_constraints():
        if c.kind is ConstraintKind.EXCLUDES:
            for endpoint in (c.source, c.target):
                if endpoint in with_mandatory:
                    raise UnsupportedModelError(
                        f"excludes constraint '{c}' targets VP '{endpoint}' with mandatory variants"
                    )


def local_choices(vp) -> list[frozenset[str]]:
    """Legal selections at one VP: mandatory edges always, free optional
    edges, and group subsets within the cardinality."""
    base = frozenset(e.variant_id for e in vp.mandatory_edges)
    option_ids = [e.variant_id for e in vp.optional_edges]
    member_ids = [e.variant_id for e in vp.group.members] if vp.group else []
    group_choices: list[tuple[str, ...]] = []
    if vp.group:
        lo, hi = vp.group.min, vp.group.max
        for size in range(lo, min(hi, len(member_ids)) + 1):
            group_choices.extend(itertools.combinations(member_ids, size))
    else:
        group_choices = [()]
    choices = []
    for r in range(len(option_ids) + 1):
        for opts in itertools.combinations(option_ids, r):
            for grp in group_choices:
                choices.append(base | set(opts) | set(grp))
    choices.sort(key=lambda s: tuple(sorted(s)))
    return [frozenset(c) for c in choices]


def local_choice_count(vp) -> int:
    """Number of legal selections at one VP, without materializing them."""
    group_count = 1
    if vp.group:
        n = len(vp.group.members)
        group_count = sum(math.comb(n, s) for s in range(vp.group.min, min(vp.group.max, n) + 1))
    return (2 ** len(vp.optional_edges)) * group_count


def satisfies_constraints(
    model: VariabilityModel, config: FullConfiguration, cp_semantics: bool = False
) -> bool:
    selected = config.selected()
    vp_ids = set(model.vp_ids())

    def part(endpoint: str) -> bool:
        if endpoint in vp_ids:
            return True if cp_semantics else len(config.get(endpoint)) > 0
        return endpoint in selected

    for c in model.effective_constraints():
        if c.kind is ConstraintKind.REQUIRES:
            if part(c.source) and not part(c.target):
                return False
        else:
            if part(c.source) and part(c.target):
                return False
    return True


def is_valid_configuration(model, config: FullConfiguration) -> bool:
    """Flat validity predicate: per-VP legality plus every constraint."""
    inner, cp_semantics = _unwrap(model)
    selections = config.as_dict()
    if set(selections) != set(inner.vp_ids()):
        return False
    for vp in inner.vps:
        chosen = selections[vp.id]
        attached = set(vp.variant_ids())
        if not chosen <= attached:
            return False
        if not {e.variant_id for e in vp.mandatory_edges} <= chosen:
            return False
        if vp.group:
            count = len(chosen & {e.variant_id for e in vp.group.members})
            if not (vp.group.min <= count <= vp.group.max):
                return False
    return satisfies_constraints(inner, config, cp_semantics)


@dataclass(frozen=True)
class EnumerationResult:
    configurations: tuple[FullConfiguration, ...]
    mode: str  # "exact" | "cap-exceeded"
    raw_space: int

    @property
    def cap_exceeded(self) -> bool:
        return self.mode == "cap-exceeded"


def enumerate_configurations(model, cap: int = DEFAULT_CAP) -> EnumerationResult:
    """All valid full configurations in deterministic lexicographic order, or
    a cap-exceeded result when the raw per-VP choice space is larger than cap."""
    inner, cp_semantics = _unwrap(model)
    _reject_unsupported(inner)
    raw_space = 1
    for vp in inner.vps:
        raw_space *= local_choice_count(vp)
    if raw_space > cap:
        return EnumerationResult((), "cap-exceeded", raw_space)
    per_vp = [(vp.id, local_choices(vp)) for vp in inner.vps]
    configs = []
    names = [vp_id for vp_id, _ in per_vp]
    for combo in itertools.product(*(choices for _, choices in per_vp)):
        config = FullConfiguration(tuple(zip(names, combo)))
        if satisfies_constraints(inner, config, cp_semantics):
            configs.append(config)
    return EnumerationResult(tuple(configs), "exact", raw_space)


def is_void(model, cap: int = DEFAULT_CAP) -> bool:
    result = enumerate_configurations(model, cap)
    if result.cap_exceeded:
        raise CapExceededError(result.raw_space, cap)
    return not result.configurations


def dead_variants(model, cap: int = DEFAULT_CAP) -> set[str]:
    """Variants appearing in no valid configuration."""
    inner, _ = _unwrap(model)
    result = enumerate_configurations(model, cap)
    if result.cap_exceeded:
        raise CapExceededError(result.raw_space, cap)
    alive: set[str] = set()
    for config in result.configurations:
        alive |= config.selected()
    return set(inner.variant_ids()) - alive


def report(model, cap: int = DEFAULT_CAP) -> dict:
    """The `analyze` report document."""
    result = enumerate_configurations(model, cap)
    if result.cap_exceeded:
        return {"configurations": None, "void": None, "dead": [], "mode": "cap-exceeded"}
    inner, _ = _unwrap(model)
    alive: set[str] = set()
    for config in result.configurations:
        alive |= config.selected()
    dead = sorted(set(inner.variant_ids()) - alive)
    return {
        "configurations": len(result.configurations),
        "void": not result.configurations,
        "dead": dead,
        "mode": "exact",
    }
