import json

import pytest

from ovmkit import dsl, workflow
from ovmkit.configurator import TenantConfiguration
from ovmkit.derivation import DeveloperBinding, derive
from ovmkit.workflow import (
    ActivityGraph,
    ActivityNode,
    Edge,
    GraphFormatError,
    NodeKind,
    WorkflowError,
    apply_configuration,
    graph_to_json,
    load_graph,
    resolve_workflow,
    validate_workflow,
)

from .graphiso import isomorphic

FIG5_BINDING = DeveloperBinding.of({"VP1": ["V1"], "VP2": ["VC3"]})
FIG6_BINDING = DeveloperBinding.of({"VP1": ["V2"], "VP2": ["VC2"]})


def codes(diags):
    return [d.code for d in diags]


def node(graph, node_id):
    n = graph.node(node_id)
    assert n is not None, f"missing node {node_id}"
    return n


def frag(name, action):
    return {
        "entry": f"{name}_start",
        "exit": f"{name}_end",
        "nodes": [
            {"id": f"{name}_start", "kind": "initial"},
            {"id": action, "kind": "action"},
            {"id": f"{name}_end", "kind": "final"},
        ],
        "edges": [
            {"from": f"{name}_start", "to": action},
            {"from": action, "to": f"{name}_end"},
        ],
    }


# --- document format ---------------------------------------------------------


def test_fig9_round_trips_through_json(fig9_graph):
    assert load_graph(graph_to_json(fig9_graph)) == fig9_graph


def test_duplicate_ids_rejected_at_load(fig9_graph):
    doc = graph_to_json(fig9_graph)
    doc["nodes"][1]["id"] = "start"
    with pytest.raises(GraphFormatError):
        load_graph(doc)


def test_dangling_edge_rejected_at_load():
    with pytest.raises(GraphFormatError):
        load_graph(
            {
                "entry": "a",
                "exit": "b",
                "nodes": [{"id": "a", "kind": "initial"}, {"id": "b", "kind": "final"}],
                "edges": [{"from": "a", "to": "ghost"}],
            }
        )


# --- validation ----------------------------------------------------------------


def test_fig9_validates_against_fig4(fig9_graph, fig4, fig4_guarded):
    assert validate_workflow(fig9_graph, fig4) == []
    assert validate_workflow(fig9_graph, fig4_guarded) == []


def test_unknown_vp_is_wf001(fig9_graph, fig4):
    doc = graph_to_json(fig9_graph)
    doc["nodes"][3]["vp"] = "NOPE"
    diags = validate_workflow(load_graph(doc), fig4)
    assert "WF001" in codes(diags)


def test_region_variant_mismatch_is_wf002(fig9_graph, fig4):
    doc = graph_to_json(fig9_graph)
    regions = doc["nodes"][3]["regions"]
    regions["V1"] = regions.pop("V6")
    diags = validate_workflow(load_graph(doc), fig4)
    assert "WF002" in codes(diags)


def test_unreachable_node_is_wf003(fig4):
    g = ActivityGraph(
        nodes=(
            ActivityNode("s", NodeKind.INITIAL),
            ActivityNode("a", NodeKind.ACTION),
            ActivityNode("orphan", NodeKind.ACTION),
            ActivityNode("e", NodeKind.FINAL),
        ),
        edges=(Edge("s", "a"), Edge("a", "e"), Edge("orphan", "e")),
        entry="s",
        exit="e",
    )
    diags = validate_workflow(g, fig4)
    assert codes(diags) == ["WF003"]
    assert diags[0].subject == ("orphan",)


def test_missing_final_is_wf004(fig4):
    g = ActivityGraph(
        nodes=(ActivityNode("s", NodeKind.INITIAL), ActivityNode("a", NodeKind.ACTION)),
        edges=(Edge("s", "a"),),
        entry="s",
        exit="a",
    )
    assert "WF004" in codes(validate_workflow(g, fig4))


def test_decision_arity_is_wf008(fig4):
    g = ActivityGraph(
        nodes=(
            ActivityNode("s", NodeKind.INITIAL),
            ActivityNode("d", NodeKind.DECISION),
            ActivityNode("e", NodeKind.FINAL),
        ),
        edges=(Edge("s", "d"), Edge("d", "e")),
        entry="s",
        exit="e",
    )
    assert "WF008" in codes(validate_workflow(g, fig4))


# --- resolution -----------------------------------------------------------------


def expected_fig5_resolution():
    """Hand-built expectation for fig9 under the Fig-5 binding."""
    return load_graph(
        {
            "entry": "start",
            "exit": "end",
            "nodes": [
                {"id": "start", "kind": "initial"},
                {"id": "receive_order", "kind": "action"},
                {"id": "vc3_notify", "kind": "action"},
                {"id": "d", "kind": "decision", "vp": "CP1"},
                {"id": "v4_approve", "kind": "action"},
                {"id": "v5_approve", "kind": "action"},
                {"id": "m", "kind": "merge", "vp": "CP1"},
                {"id": "finalize", "kind": "action"},
                {"id": "end", "kind": "final"},
            ],
            "edges": [
                {"from": "start", "to": "receive_order"},
                {"from": "receive_order", "to": "vc3_notify"},
                {"from": "vc3_notify", "to": "d"},
                {"from": "d", "to": "v4_approve", "guard": "order.amount < 1000", "variant": "V4"},
                {"from": "d", "to": "v5_approve", "guard": "order.amount >= 1000", "variant": "V5"},
                {"from": "v4_approve", "to": "m"},
                {"from": "v5_approve", "to": "m"},
                {"from": "m", "to": "finalize"},
                {"from": "finalize", "to": "end"},
            ],
        }
    )


def test_fig9_resolution_with_fig5_trace(fig9_graph, fig4_guarded):
    cm, trace = derive(fig4_guarded, FIG5_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)

    decisions = [n for n in resolved.nodes if n.kind is NodeKind.DECISION]
    merges = [n for n in resolved.nodes if n.kind is NodeKind.MERGE]
    assert len(decisions) == 1 and len(merges) == 1
    out_edges = resolved.outgoing(decisions[0].id)
    assert len(out_edges) == 2
    assert {e.guard for e in out_edges} == {"order.amount < 1000", "order.amount >= 1000"}
    # V3's fragment is gone, VC3's was spliced inline, CP2's passed through
    assert resolved.node("v3_approve") is None
    assert resolved.node("vc3_notify") is not None
    assert resolved.node("v6_meter") is None
    assert isomorphic(resolved, expected_fig5_resolution())


def test_guard_preservation(fig9_graph, fig4_guarded):
    cm, trace = derive(fig4_guarded, FIG5_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)
    source_guards = {e.guard for e in fig9_graph.edges if e.guard} | {
        e.guard for vp in fig4_guarded.vps for e in vp.edges() if e.guard
    }
    for e in resolved.edges:
        if e.guard is not None:
            assert e.guard in source_guards


def test_fragment_conservation(fig9_graph, fig4_guarded):
    cm, trace = derive(fig4_guarded, FIG5_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)
    expected = {"receive_order", "finalize", "vc3_notify", "v4_approve", "v5_approve"}
    assert set(resolved.action_ids()) == expected
    assert len(resolved.action_ids()) == len(expected)


def test_internal_vp_splices_without_decision(fig9_graph, fig4_guarded):
    cm, trace = derive(fig4_guarded, FIG6_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)
    # VC2 spliced inline; CP2 survives with single V6 -> degenerate splice too
    assert resolved.node("vc2_notify") is not None
    assert resolved.node("v6_meter") is not None
    decisions = [n for n in resolved.nodes if n.kind is NodeKind.DECISION]
    assert [d.vp_id for d in decisions] == ["CP1"]
    # Fig 6 keeps V3, V4 in the group plus mandatory V5: three branches
    assert len(resolved.outgoing(decisions[0].id)) == 3


def test_degenerate_single_survivor_collapses_to_splice():
    m = dsl.parse(
        'model "M" vp P layer process { alt [1..1] { I1; I2; } } '
        'cp C layer process { alt [1..2] { A; B; } } I1 excludes A;'
    )
    graph = load_graph(
        {
            "entry": "s",
            "exit": "e",
            "nodes": [
                {"id": "s", "kind": "initial"},
                {
                    "id": "r",
                    "kind": "vp_region",
                    "vp": "C",
                    "regions": {"A": frag("a", "do_a"), "B": frag("b", "do_b")},
                },
                {"id": "e", "kind": "final"},
            ],
            "edges": [{"from": "s", "to": "r"}, {"from": "r", "to": "e"}],
        }
    )
    cm, trace = derive(m, DeveloperBinding.of({"P": ["I1"]}))
    resolved = resolve_workflow(graph, cm, trace)
    assert [n.kind for n in resolved.nodes if n.kind is NodeKind.DECISION] == []
    assert resolved.node("do_b") is not None
    assert resolved.node("do_a") is None
    expected = load_graph(
        {
            "entry": "s",
            "exit": "e",
            "nodes": [
                {"id": "s", "kind": "initial"},
                {"id": "do_b", "kind": "action"},
                {"id": "e", "kind": "final"},
            ],
            "edges": [{"from": "s", "to": "do_b"}, {"from": "do_b", "to": "e"}],
        }
    )
    assert isomorphic(resolved, expected)


def test_missing_fragment_for_survivor_is_wf006():
    m = dsl.parse('model "M" cp C layer process { alt [1..2] { A; B; } }')
    graph = load_graph(
        {
            "entry": "s",
            "exit": "e",
            "nodes": [
                {"id": "s", "kind": "initial"},
                {"id": "r", "kind": "vp_region", "vp": "C", "regions": {"A": frag("a", "do_a")}},
                {"id": "e", "kind": "final"},
            ],
            "edges": [{"from": "s", "to": "r"}, {"from": "r", "to": "e"}],
        }
    )
    cm, trace = derive(m, DeveloperBinding.of({}))
    with pytest.raises(WorkflowError) as exc:
        resolve_workflow(graph, cm, trace)
    assert codes(exc.value.diagnostics) == ["WF006"]


def test_all_fragments_removed_is_wf005():
    m = dsl.parse(
        'model "M" vp P layer process { alt [1..1] { I1; I2; } } '
        'cp C layer process { alt [0..2] { A; B; } } I1 excludes A;'
    )
    graph = load_graph(
        {
            "entry": "s",
            "exit": "e",
            "nodes": [
                {"id": "s", "kind": "initial"},
                {"id": "r", "kind": "vp_region", "vp": "C", "regions": {"A": frag("a", "do_a")}},
                {"id": "e", "kind": "final"},
            ],
            "edges": [{"from": "s", "to": "r"}, {"from": "r", "to": "e"}],
        }
    )
    cm, trace = derive(m, DeveloperBinding.of({"P": ["I1"]}))
    with pytest.raises(WorkflowError) as exc:
        resolve_workflow(graph, cm, trace)
    assert codes(exc.value.diagnostics) == ["WF005"]


# --- runtime configuration ---------------------------------------------------


def test_apply_configuration_collapses_to_splice(fig9_graph, fig4_guarded):
    cm, trace = derive(fig4_guarded, FIG5_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)
    cfg = TenantConfiguration.of(cm.model.name, {"CP1": ["V5"], "CP3": ["V7"]})
    pruned = apply_configuration(resolved, cfg, cm)
    assert [n for n in pruned.nodes if n.kind in (NodeKind.DECISION, NodeKind.MERGE)] == []
    assert pruned.node("v5_approve") is not None
    assert pruned.node("v4_approve") is None
    expected = load_graph(
        {
            "entry": "start",
            "exit": "end",
            "nodes": [
                {"id": "start", "kind": "initial"},
                {"id": "receive_order", "kind": "action"},
                {"id": "vc3_notify", "kind": "action"},
                {"id": "v5_approve", "kind": "action"},
                {"id": "finalize", "kind": "action"},
                {"id": "end", "kind": "final"},
            ],
            "edges": [
                {"from": "start", "to": "receive_order"},
                {"from": "receive_order", "to": "vc3_notify"},
                {"from": "vc3_notify", "to": "v5_approve"},
                {"from": "v5_approve", "to": "finalize"},
                {"from": "finalize", "to": "end"},
            ],
        }
    )
    assert isomorphic(pruned, expected)


def test_apply_configuration_keeps_both_selected_branches(fig9_graph, fig4_guarded):
    cm, trace = derive(fig4_guarded, FIG5_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)
    cfg = TenantConfiguration.of(cm.model.name, {"CP1": ["V4", "V5"], "CP3": ["V7"]})
    pruned = apply_configuration(resolved, cfg, cm)
    decision = next(n for n in pruned.nodes if n.kind is NodeKind.DECISION)
    out = pruned.outgoing(decision.id)
    assert len(out) == 2
    assert {e.guard for e in out} == {"order.amount < 1000", "order.amount >= 1000"}


def test_apply_configuration_rejects_invalid_config(fig9_graph, fig4_guarded):
    cm, trace = derive(fig4_guarded, FIG5_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)
    bad = TenantConfiguration.of(cm.model.name, {"CP1": ["V3"], "CP3": ["V7"]})
    with pytest.raises(WorkflowError) as exc:
        apply_configuration(resolved, bad, cm)
    assert all(d.code == "WF007" for d in exc.value.diagnostics)


def test_decisions_and_merges_stay_in_bijection():
    m = dsl.parse(
        'model "M" cp C layer process { alt [1..2] { A; B; } } cp D layer process { alt [1..2] { E; F; } }'
    )
    graph = load_graph(
        {
            "entry": "s",
            "exit": "e",
            "nodes": [
                {"id": "s", "kind": "initial"},
                {"id": "r1", "kind": "vp_region", "vp": "C", "regions": {"A": frag("a", "do_a"), "B": frag("b", "do_b")}},
                {"id": "r2", "kind": "vp_region", "vp": "D", "regions": {"E": frag("x", "do_e"), "F": frag("y", "do_f")}},
                {"id": "e", "kind": "final"},
            ],
            "edges": [
                {"from": "s", "to": "r1"},
                {"from": "r1", "to": "r2"},
                {"from": "r2", "to": "e"},
            ],
        }
    )
    cm, trace = derive(m, DeveloperBinding.of({}))
    resolved = resolve_workflow(graph, cm, trace)
    decisions = [n for n in resolved.nodes if n.kind is NodeKind.DECISION]
    merges = [n for n in resolved.nodes if n.kind is NodeKind.MERGE]
    assert len(decisions) == len(merges) == 2
    from .graphiso import canonical_form  # the resolved graph stays structurally sound

    assert validate_workflow(resolved, cm.model) == []
    assert canonical_form(resolved)
    paired = {d.vp_id for d in decisions} == {mg.vp_id for mg in merges} == {"C", "D"}
    assert paired


def test_resolution_commutes_with_pruning(fig9_graph, fig4_guarded):
    # resolve-then-prune equals building the graph for the chosen variants directly
    cm, trace = derive(fig4_guarded, FIG5_BINDING)
    resolved = resolve_workflow(fig9_graph, cm, trace)
    for chosen in (["V4"], ["V5"], ["V4", "V5"]):
        cfg = TenantConfiguration.of(cm.model.name, {"CP1": chosen, "CP3": ["V7"]})
        pruned = apply_configuration(resolved, cfg, cm)
        direct_doc = graph_to_json(fig9_graph)
        cp1 = next(n for n in direct_doc["nodes"] if n.get("vp") == "CP1")
        cp1["regions"] = {v: cp1["regions"][v] for v in chosen}
        direct = resolve_workflow(load_graph(direct_doc), _restricted_cm(cm, chosen), trace)
        assert isomorphic(pruned, direct)


def _restricted_cm(cm, chosen):
    """cm with CP1's group narrowed to the chosen variants (direct-build oracle)."""
    from dataclasses import replace

    from ovmkit.model import AlternativeGroup

    model = cm.model
    cp1 = model.vp("CP1")
    members = tuple(e for e in cp1.group.members if e.variant_id in chosen)
    group = AlternativeGroup(min(cp1.group.min, len(members)), len(members), members) if members else None
    new_cp1 = replace(cp1, group=group)
    vps = tuple(new_cp1 if vp.id == "CP1" else vp for vp in model.vps)
    return replace(cm, model=replace(model, vps=vps, constraints=()))
