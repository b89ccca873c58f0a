"""Acceptance gate: each criterion runs at its stated tolerance and prints a
PASS line; any violation fails the test outright.

The random corpus is seeded and regenerated identically on every run.
"""

import json
import random
import time

import pytest

from ovmkit import analysis, dsl, generate, workflow
from ovmkit.analysis import enumerate_configurations, local_choice_count
from ovmkit.configurator import (
    Decision,
    SessionError,
    TenantConfiguration,
    complete,
    decide,
    new_session,
    validate_configuration,
    _completions,
)
from ovmkit.derivation import DerivationError, DeveloperBinding, derive, replay
from ovmkit.model import has_errors, well_formed

from .conftest import FIXTURES, GOLDEN
from .graphiso import isomorphic

CORPUS_SEED = 0x0A5EED
CORPUS_SIZE = 200
MUTATION_GOAL = 1000
SESSION_GOAL = 100


def report(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE PASS — {name}" + (f" ({detail})" if detail else ""))


@pytest.fixture(scope="module")
def corpus():
    rng = random.Random(CORPUS_SEED)
    models = []
    while len(models) < CORPUS_SIZE:
        m = generate.random_model(rng, max_variants=12, max_constraints=6)
        raw = 1
        for vp in m.vps:
            raw *= local_choice_count(vp)
        if raw > 50_000 or generate.binding_count(m) > 64:
            continue
        assert not has_errors(well_formed(m))
        models.append(m)
    return models


@pytest.fixture(scope="module")
def corpus_derivations(corpus):
    """For every model: its source enumeration and every binding's outcome."""
    out = []
    for m in corpus:
        src = enumerate_configurations(m)
        assert not src.cap_exceeded
        rows = []
        for binding in generate.valid_bindings(m):
            try:
                cm, trace = derive(m, binding)
                rows.append((binding, cm, trace))
            except DerivationError:
                rows.append((binding, None, None))
        out.append((m, src, rows))
    return out


def _key(mapping: dict) -> tuple:
    return tuple(sorted((k, tuple(sorted(v))) for k, v in mapping.items()))


# --- criterion 1: Fig 5 reproduction -----------------------------------------


def test_fig5_reproduction(fig4):
    start = time.perf_counter()
    cm, _ = derive(fig4, DeveloperBinding.of({"VP1": ["V1"], "VP2": ["VC3"]}))
    text = dsl.serialize(cm.model)
    elapsed = time.perf_counter() - start
    assert text == (GOLDEN / "fig5.ovm").read_text()
    assert "V3" not in text
    cp1 = cm.model.vp("CP1")
    assert [e.variant_id for e in cp1.group.members] == ["V4", "V5"]
    assert (cp1.group.min, cp1.group.max) == (1, 2)
    assert cm.model.vp("CP3") is not None
    assert cm.model.vp("CP2") is None
    assert elapsed < 1.0
    report("Fig 5 reproduction", f"{elapsed * 1000:.1f} ms, golden byte-equal")


# --- criterion 2: Fig 6 reproduction -----------------------------------------


def test_fig6_reproduction(fig4):
    start = time.perf_counter()
    cm, _ = derive(fig4, DeveloperBinding.of({"VP1": ["V2"], "VP2": ["VC2"]}))
    text = dsl.serialize(cm.model)
    elapsed = time.perf_counter() - start
    assert text == (GOLDEN / "fig6.ovm").read_text()
    cp1 = cm.model.vp("CP1")
    assert [e.variant_id for e in cp1.mandatory_edges] == ["V5"]
    assert (cp1.group.min, cp1.group.max) == (0, 1)
    assert elapsed < 1.0
    report("Fig 6 reproduction", f"{elapsed * 1000:.1f} ms, golden byte-equal")


# --- criterion 3: oracle equivalence ------------------------------------------


def test_oracle_equivalence(corpus_derivations):
    start = time.perf_counter()
    mismatches = 0
    bindings_checked = 0
    for m, src, rows in corpus_derivations:
        internal_ids = [vp.id for vp in m.internal_vps()]
        for binding, cm, _ in rows:
            bindings_checked += 1
            bmap = {vp: set(vs) for vp, vs in binding.choices}

            def consistent(cfg):
                return all(set(cfg.get(vp)) == bmap[vp] for vp in internal_ids)

            consistent_src = [cfg for cfg in src.configurations if consistent(cfg)]
            if cm is None:
                if consistent_src:
                    mismatches += 1
                continue
            surviving = set(cm.model.vp_ids())
            derived_set = {
                _key(cfg.as_dict()) for cfg in enumerate_configurations(cm).configurations
            }
            projected = {_key(cfg.restrict(surviving).as_dict()) for cfg in consistent_src}
            if derived_set != projected:
                mismatches += 1
    elapsed = time.perf_counter() - start
    assert mismatches == 0
    assert len(corpus_derivations) >= 200
    assert elapsed < 300.0
    report(
        "oracle equivalence (semantic preservation)",
        f"{len(corpus_derivations)} models, {bindings_checked} bindings, "
        f"0 mismatches, {elapsed:.1f} s",
    )


# --- criterion 4: validator/oracle agreement ----------------------------------


def _mutations(rng, cm, base: dict):
    """Candidate invalid mutations of a valid configuration with the code
    each one is meant to trigger."""
    model = cm.model
    out = []
    cp_ids = model.vp_ids()
    ghost_cp = {k: set(v) for k, v in base.items()}
    ghost_cp["GHOST_CP"] = {"GHOST"}
    out.append((ghost_cp, "CFG004"))
    if not cp_ids:
        return out
    victim = rng.choice(cp_ids)
    with_ghost = {k: set(v) for k, v in base.items()}
    with_ghost.setdefault(victim, set()).add("GHOST")
    out.append((with_ghost, "CFG004"))
    for vp in model.vps:
        if vp.mandatory_edges:
            drop = {k: set(v) for k, v in base.items()}
            drop[vp.id] = drop.get(vp.id, set()) - {vp.mandatory_edges[0].variant_id}
            out.append((drop, "CFG001"))
            break
    for vp in model.vps:
        if vp.group is None:
            continue
        members = {e.variant_id for e in vp.group.members}
        selected = set(base.get(vp.id, ())) & members
        if len(members) > vp.group.max:
            over = {k: set(v) for k, v in base.items()}
            over[vp.id] = set(base.get(vp.id, ())) | members
            out.append((over, "CFG002"))
            break
        if vp.group.min > 0 and selected:
            under = {k: set(v) for k, v in base.items()}
            under[vp.id] = set(base.get(vp.id, ())) - members
            out.append((under, "CFG002"))
            break
    variant_hosts = {v: [vp.id for vp in model.vps if v in vp.variant_ids()] for v in model.variant_ids()}
    for c in model.effective_constraints():
        src_hosts = variant_hosts.get(c.source)
        tgt_hosts = variant_hosts.get(c.target)
        if not src_hosts:
            continue
        broken = {k: set(v) for k, v in base.items()}
        broken.setdefault(src_hosts[0], set()).add(c.source)
        if str(c.kind.value) == "requires":
            if tgt_hosts:
                for host in tgt_hosts:
                    broken[host] = broken.get(host, set()) - {c.target}
                out.append((broken, "CFG003"))
        else:
            if tgt_hosts:
                broken.setdefault(tgt_hosts[0], set()).add(c.target)
                out.append((broken, "CFG003"))
        break
    return out


def test_validator_oracle_agreement(corpus_derivations):
    rng = random.Random(CORPUS_SEED + 1)
    disagreements = 0
    accepted_checked = 0
    rejected_checked = 0
    for _, _, rows in corpus_derivations:
        for _, cm, _ in rows:
            if cm is None:
                continue
            enumerated = enumerate_configurations(cm).configurations
            valid_keys = {_key(cfg.as_dict()) for cfg in enumerated}
            for cfg in enumerated:
                doc = TenantConfiguration.of(
                    cm.model.name, {k: sorted(v) for k, v in cfg.as_dict().items()}
                )
                if validate_configuration(cm, doc) != []:
                    disagreements += 1
                accepted_checked += 1
            for base in enumerated[:2]:
                for mutated, expected in _mutations(rng, cm, base.as_dict()):
                    if _key(mutated) in valid_keys:
                        continue  # mutation landed on another valid configuration
                    doc = TenantConfiguration.of(
                        cm.model.name, {k: sorted(v) for k, v in mutated.items()}
                    )
                    diags = validate_configuration(cm, doc)
                    if not diags or expected not in {d.code for d in diags}:
                        disagreements += 1
                    rejected_checked += 1
    assert disagreements == 0
    assert rejected_checked >= MUTATION_GOAL
    report(
        "validator/oracle agreement",
        f"{accepted_checked} accepted, {rejected_checked} mutants rejected with "
        f"correct codes, 0 disagreements",
    )


# --- criterion 5: propagation soundness and completeness -----------------------


def test_propagation_soundness_and_completeness(corpus_derivations):
    rng = random.Random(CORPUS_SEED + 2)
    sessions = 0
    violations = 0
    pool = [cm for _, _, rows in corpus_derivations for _, cm, _ in rows if cm is not None]
    for cm in pool:
        if sessions >= SESSION_GOAL:
            break
        try:
            session = new_session(cm)
        except SessionError:
            continue
        sessions += 1
        for _ in range(rng.randint(1, 5)):
            candidates = [
                p
                for p in session.undecided_pairs()
                if not session.is_forced(*p)
            ]
            if not candidates or session.conflict:
                break
            cp, variant = rng.choice(candidates)
            value = rng.choice([Decision.SELECTED, Decision.DESELECTED])
            mode = rng.choice([None, "heuristic"])  # exercise both propagators
            session, _ = decide(session, cp, variant, value, mode_override=mode)
            completions = _completions(session, dict(session.tenant))
            if session.conflict:
                if completions:
                    violations += 1  # conflict flagged although completions exist
                break
            for (fcp, fvariant), fvalue in session.forced:
                want = fvalue is Decision.SELECTED
                if not all(c[(fcp, fvariant)] == want for c in completions):
                    violations += 1
            if mode is None and session.mode == "exact":
                if not completions:
                    violations += 1  # conflict missed in exact mode
                forced_pairs = {p for p, _ in session.forced}
                for pair in session.undecided_pairs():
                    if pair in forced_pairs:
                        continue
                    values = {c[pair] for c in completions}
                    if len(values) == 1:
                        violations += 1
    assert violations == 0
    assert sessions >= SESSION_GOAL
    report(
        "propagation soundness + exact completeness",
        f"{sessions} sessions, both modes, 0 violations",
    )


# --- criterion 6: parser round-trip --------------------------------------------


def test_parser_round_trip():
    rng = random.Random(CORPUS_SEED + 3)
    fixtures = [
        dsl.parse((FIXTURES / name).read_text())
        for name in ("fig4.ovm", "fig4_guarded.ovm", "fig4_tenant.ovm")
    ]
    checked = 0
    for m in fixtures:
        assert dsl.parse(dsl.serialize(m)) == m
        checked += 1
    for _ in range(500):
        m = generate.random_model(rng)
        text = dsl.serialize(m)
        assert dsl.parse(text) == m
        assert dsl.serialize(dsl.parse(text)) == text  # byte-exact determinism
        assert dsl.serialize(m) == text
        checked += 1
    report("parser round-trip", f"{checked} models, byte-exact")


# --- criterion 7: workflow resolution -------------------------------------------


def test_workflow_resolution(fig9_graph, fig4_guarded):
    from .test_workflow import expected_fig5_resolution

    cm, trace = derive(fig4_guarded, DeveloperBinding.of({"VP1": ["V1"], "VP2": ["VC3"]}))
    assert workflow.validate_workflow(fig9_graph, fig4_guarded) == []
    resolved = workflow.resolve_workflow(fig9_graph, cm, trace)

    decisions = [n for n in resolved.nodes if n.kind is workflow.NodeKind.DECISION]
    merges = [n for n in resolved.nodes if n.kind is workflow.NodeKind.MERGE]
    assert len(decisions) == 1 and len(merges) == 1
    out_edges = resolved.outgoing(decisions[0].id)
    assert len(out_edges) == 2
    assert all(e.guard for e in out_edges)
    model_guards = {e.guard for vp in fig4_guarded.vps for e in vp.edges() if e.guard}
    assert {e.guard for e in out_edges} <= model_guards  # verbatim
    expected_actions = {"receive_order", "finalize", "vc3_notify", "v4_approve", "v5_approve"}
    assert set(resolved.action_ids()) == expected_actions
    assert len(resolved.action_ids()) == len(expected_actions)
    assert isomorphic(resolved, expected_fig5_resolution())

    cfg = TenantConfiguration.of(cm.model.name, {"CP1": ["V5"], "CP3": ["V7"]})
    pruned = workflow.apply_configuration(resolved, cfg, cm)
    assert [n for n in pruned.nodes if n.kind in (workflow.NodeKind.DECISION, workflow.NodeKind.MERGE)] == []
    assert pruned.node("v5_approve") is not None and pruned.node("v4_approve") is None
    report("workflow resolution", "decision/merge structure, guards verbatim, collapse checked")


# --- criterion 8: trace replay ----------------------------------------------------


def test_trace_replay(fig4, fig4_guarded, fig4_tenant, corpus_derivations):
    replayed = 0
    for m, bindings in (
        (fig4, [{"VP1": ["V1"], "VP2": ["VC3"]}, {"VP1": ["V2"], "VP2": ["VC2"]}]),
        (fig4_guarded, [{"VP1": ["V1"], "VP2": ["VC3"]}]),
        (fig4_tenant, [{"VP1": ["V2"], "VP2": ["VC2"]}]),
    ):
        for b in bindings:
            cm, trace = derive(m, DeveloperBinding.of(b))
            assert replay(m, trace) == cm.model
            replayed += 1
    for m, _, rows in corpus_derivations:
        for _, cm, trace in rows:
            if cm is None:
                continue
            assert replay(m, trace) == cm.model
            replayed += 1
    report("derivation trace replay", f"{replayed} derivations reproduced exactly")
