"""Workflow graphs with variation-point regions and their resolution.

A vp_region node holds one nested flow fragment per variant. Resolution
splices bound variants inline and expands surviving customization points into
a guarded decision node, the surviving fragments, and a matching merge node.
Tenant configurations then prune unselected branches at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .model import Diagnostic, VariabilityModel, error
from .configurator import TenantConfiguration, validate_configuration
from .derivation import CustomizationModel, DerivationTrace, VpDropped


class NodeKind(str, Enum):
    ACTION = "action"
    INITIAL = "initial"
    FINAL = "final"
    DECISION = "decision"
    MERGE = "merge"
    VP_REGION = "vp_region"


@dataclass(frozen=True)
class ActivityNode:
    id: str
    kind: NodeKind
    vp_id: Optional[str] = None  # vp_region reference; also set on generated decision/merge
    regions: tuple[tuple[str, "ActivityGraph"], ...] = ()

    def region_map(self) -> dict[str, "ActivityGraph"]:
        return dict(self.regions)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    guard: Optional[str] = None
    variant: Optional[str] = None  # set on decision edges generated from a CP region


@dataclass(frozen=True)
class ActivityGraph:
    nodes: tuple[ActivityNode, ...]
    edges: tuple[Edge, ...]
    entry: str
    exit: str

    def node(self, node_id: str) -> Optional[ActivityNode]:
        for n in self.nodes:
            if n.id == node_id:
                return n
        return None

    def outgoing(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.source == node_id]

    def incoming(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.target == node_id]

    def action_ids(self) -> list[str]:
        out = [n.id for n in self.nodes if n.kind is NodeKind.ACTION]
        for n in self.nodes:
            for _, fragment in n.regions:
                out.extend(fragment.action_ids())
        return out

    def all_ids(self) -> list[str]:
        out = [n.id for n in self.nodes]
        for n in self.nodes:
            for _, fragment in n.regions:
                out.extend(fragment.all_ids())
        return out


class GraphFormatError(Exception):
    pass


class WorkflowError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(f"{d.code}: {d.message}" for d in diagnostics))
        self.diagnostics = diagnostics


def _wf(code: str, message: str, *subject: str) -> WorkflowError:
    return WorkflowError([error(code, message, *subject)])


# ---------------------------------------------------------------------------
# Document format


def load_graph(doc: dict) -> ActivityGraph:
    """Build a graph from its JSON document, enforcing document integrity
    (shape, kinds, unique ids, resolvable edge endpoints)."""
    if not isinstance(doc, dict):
        raise GraphFormatError("graph document must be an object")
    for key in ("entry", "exit", "nodes", "edges"):
        if key not in doc:
            raise GraphFormatError(f"graph document lacks '{key}'")
    nodes = []
    ids: set[str] = set()
    for item in doc["nodes"]:
        node_id = item.get("id")
        if not node_id or not isinstance(node_id, str):
            raise GraphFormatError("node without id")
        if node_id in ids:
            raise GraphFormatError(f"duplicate node id '{node_id}'")
        ids.add(node_id)
        try:
            kind = NodeKind(item.get("kind"))
        except ValueError:
            raise GraphFormatError(f"node '{node_id}' has unknown kind {item.get('kind')!r}")
        regions: list[tuple[str, ActivityGraph]] = []
        if item.get("regions"):
            if kind is not NodeKind.VP_REGION:
                raise GraphFormatError(f"node '{node_id}' of kind {kind.value} cannot hold regions")
            for variant, sub in item["regions"].items():
                regions.append((variant, load_graph(sub)))
        nodes.append(ActivityNode(node_id, kind, item.get("vp"), tuple(regions)))
    edges = []
    for item in doc["edges"]:
        src, tgt = item.get("from"), item.get("to")
        if src not in ids or tgt not in ids:
            raise GraphFormatError(f"edge {src!r} -> {tgt!r} references unknown node")
        edges.append(Edge(src, tgt, item.get("guard"), item.get("variant")))
    graph = ActivityGraph(tuple(nodes), tuple(edges), doc["entry"], doc["exit"])
    if graph.node(graph.entry) is None or graph.node(graph.exit) is None:
        raise GraphFormatError("entry/exit reference unknown nodes")
    dup = _duplicate_ids(graph)
    if dup:
        raise GraphFormatError(f"node ids reused across fragments: {sorted(dup)}")
    return graph


def graph_to_json(graph: ActivityGraph) -> dict:
    nodes = []
    for n in graph.nodes:
        item: dict = {"id": n.id, "kind": n.kind.value}
        if n.vp_id is not None:
            item["vp"] = n.vp_id
        if n.regions:
            item["regions"] = {variant: graph_to_json(sub) for variant, sub in n.regions}
        nodes.append(item)
    edges = []
    for e in graph.edges:
        item = {"from": e.source, "to": e.target}
        if e.guard is not None:
            item["guard"] = e.guard
        if e.variant is not None:
            item["variant"] = e.variant
        edges.append(item)
    return {"entry": graph.entry, "exit": graph.exit, "nodes": nodes, "edges": edges}


def _duplicate_ids(graph: ActivityGraph) -> set[str]:
    seen: set[str] = set()
    dup: set[str] = set()
    for node_id in graph.all_ids():
        if node_id in seen:
            dup.add(node_id)
        seen.add(node_id)
    return dup


# ---------------------------------------------------------------------------
# Validation


def _reachable(graph: ActivityGraph, start: str, forward: bool) -> set[str]:
    adj: dict[str, list[str]] = {}
    for e in graph.edges:
        a, b = (e.source, e.target) if forward else (e.target, e.source)
        adj.setdefault(a, []).append(b)
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adj.get(stack.pop(), []):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _validate_level(graph: ActivityGraph, model: VariabilityModel, diags: list[Diagnostic]) -> None:
    initials = [n for n in graph.nodes if n.kind is NodeKind.INITIAL]
    finals = [n for n in graph.nodes if n.kind is NodeKind.FINAL]
    if len(initials) != 1 or len(finals) != 1:
        diags.append(
            error("WF004", f"graph needs exactly one initial and one final node (found {len(initials)}/{len(finals)})")
        )
    elif graph.entry != initials[0].id or graph.exit != finals[0].id:
        diags.append(error("WF004", "entry/exit do not name the initial/final nodes", graph.entry, graph.exit))
    else:
        forward = _reachable(graph, graph.entry, True)
        backward = _reachable(graph, graph.exit, False)
        for n in graph.nodes:
            if n.id not in forward:
                diags.append(error("WF003", f"node '{n.id}' is unreachable from the initial node", n.id))
            elif n.id not in backward:
                diags.append(error("WF003", f"the final node is unreachable from '{n.id}'", n.id))

    for n in graph.nodes:
        out_n, in_n = len(graph.outgoing(n.id)), len(graph.incoming(n.id))
        if n.kind is NodeKind.DECISION and out_n < 2:
            diags.append(error("WF008", f"decision node '{n.id}' has {out_n} outgoing edges", n.id))
        if n.kind is NodeKind.MERGE and in_n < 2:
            diags.append(error("WF008", f"merge node '{n.id}' has {in_n} incoming edges", n.id))
        if n.kind is NodeKind.VP_REGION and (in_n != 1 or out_n != 1):
            diags.append(error("WF008", f"vp_region '{n.id}' must have exactly one incoming and one outgoing edge", n.id))
        if n.kind is NodeKind.INITIAL and in_n:
            diags.append(error("WF008", f"initial node '{n.id}' has incoming edges", n.id))
        if n.kind is NodeKind.FINAL and out_n:
            diags.append(error("WF008", f"final node '{n.id}' has outgoing edges", n.id))

    for n in graph.nodes:
        if n.kind is NodeKind.VP_REGION:
            vp = model.vp(n.vp_id) if n.vp_id else None
            if vp is None:
                diags.append(error("WF001", f"region '{n.id}' references unknown VP {n.vp_id!r}", n.id))
            else:
                attached = set(vp.variant_ids())
                for variant, _ in n.regions:
                    if variant not in attached:
                        diags.append(
                            error(
                                "WF002",
                                f"region '{n.id}' keys a fragment by '{variant}', not a variant of '{vp.id}'",
                                n.id,
                                variant,
                            )
                        )
        for _, fragment in n.regions:
            _validate_level(fragment, model, diags)


def validate_workflow(graph: ActivityGraph, model: VariabilityModel) -> list[Diagnostic]:
    """Structural invariants plus agreement of every vp_region with the model."""
    diags: list[Diagnostic] = []
    for node_id in sorted(_duplicate_ids(graph)):
        diags.append(error("WF008", f"node id '{node_id}' is reused across fragments", node_id))
    _validate_level(graph, model, diags)
    return diags


# ---------------------------------------------------------------------------
# Resolution


class _Builder:
    def __init__(self, taken: set[str]):
        self.nodes: list[ActivityNode] = []
        self.edges: list[Edge] = []
        self.taken = taken

    def fresh_id(self, base: str) -> str:
        candidate = base
        k = 2
        while candidate in self.taken:
            candidate = f"{base}{k}"
            k += 1
        self.taken.add(candidate)
        return candidate

    def add_fragment_body(self, fragment: ActivityGraph) -> tuple[list[Edge], list[Edge]]:
        """Copy a fragment minus its initial/final nodes; returns the original
        initial-outgoing and final-incoming edges as the splice boundary."""
        for n in fragment.nodes:
            if n.kind not in (NodeKind.INITIAL, NodeKind.FINAL):
                self.nodes.append(n)
        boundary = {fragment.entry, fragment.exit}
        for e in fragment.edges:
            if e.source not in boundary and e.target not in boundary:
                self.edges.append(e)
        return fragment.outgoing(fragment.entry), fragment.incoming(fragment.exit)


def _splice_sequence(builder: _Builder, in_edge: Edge, out_edge: Edge, fragments: list[ActivityGraph]) -> None:
    """Wire fragments one after another between the region's outer edges.
    Outer guards win over fragment boundary guards; nothing else is rewritten."""
    cursor: list[tuple[str, Optional[str]]] = [(in_edge.source, in_edge.guard)]
    for fragment in fragments:
        entries, exits = builder.add_fragment_body(fragment)
        for src, src_guard in cursor:
            for entry_edge in entries:
                builder.edges.append(
                    Edge(src, entry_edge.target, src_guard if src_guard is not None else entry_edge.guard)
                )
        cursor = [(e.source, e.guard) for e in exits]
    for src, guard in cursor:
        builder.edges.append(Edge(src, out_edge.target, guard if guard is not None else out_edge.guard))


def _resolve_region(
    graph: ActivityGraph, region: ActivityNode, cm: CustomizationModel, dropped_vps: set[str]
) -> ActivityGraph:
    ins, outs = graph.incoming(region.id), graph.outgoing(region.id)
    if len(ins) != 1 or len(outs) != 1:
        raise _wf("WF008", f"vp_region '{region.id}' must have exactly one incoming and one outgoing edge", region.id)
    in_edge, out_edge = ins[0], outs[0]
    regions = region.region_map()
    model = cm.model
    binding = dict(cm.binding.choices)

    builder = _Builder(set(graph.all_ids()))
    builder.nodes = [n for n in graph.nodes if n.id != region.id]
    builder.edges = [e for e in graph.edges if region.id not in (e.source, e.target)]

    vp = model.vp(region.vp_id) if region.vp_id else None
    if vp is not None:
        survivors = vp.variant_ids()
        missing = [v for v in survivors if v not in regions]
        if missing:
            if not any(v in regions for v in survivors):
                raise _wf(
                    "WF005",
                    f"every fragment of region '{region.id}' belongs to a removed variant; "
                    f"no flow remains for '{vp.id}'",
                    region.id,
                )
            raise _wf(
                "WF006",
                f"region '{region.id}' has no fragment for surviving variant(s) {missing} of '{vp.id}'",
                region.id,
            )
        if len(survivors) == 1:
            _splice_sequence(builder, in_edge, out_edge, [regions[survivors[0]]])
        else:
            decision_id = builder.fresh_id(f"{region.id}__decision")
            merge_id = builder.fresh_id(f"{region.id}__merge")
            builder.nodes.append(ActivityNode(decision_id, NodeKind.DECISION, vp_id=vp.id))
            builder.nodes.append(ActivityNode(merge_id, NodeKind.MERGE, vp_id=vp.id))
            builder.edges.append(Edge(in_edge.source, decision_id, in_edge.guard))
            for variant in survivors:
                model_edge = vp.edge_for(variant)
                entries, exits = builder.add_fragment_body(regions[variant])
                for entry_edge in entries:
                    guard = model_edge.guard if model_edge.guard is not None else entry_edge.guard
                    builder.edges.append(Edge(decision_id, entry_edge.target, guard, variant=variant))
                for exit_edge in exits:
                    builder.edges.append(Edge(exit_edge.source, merge_id, exit_edge.guard))
            builder.edges.append(Edge(merge_id, out_edge.target, out_edge.guard))
    elif region.vp_id in binding:
        chosen = list(binding[region.vp_id])
        missing = [v for v in chosen if v not in regions]
        if missing:
            raise _wf("WF006", f"region '{region.id}' has no fragment for chosen variant(s) {missing}", region.id)
        _splice_sequence(builder, in_edge, out_edge, [regions[v] for v in chosen])
    elif region.vp_id in dropped_vps:
        _splice_sequence(builder, in_edge, out_edge, [])
    else:
        raise _wf(
            "WF006",
            f"region '{region.id}' references '{region.vp_id}', which the derivation neither kept nor dropped",
            region.id,
        )
    return ActivityGraph(tuple(builder.nodes), tuple(builder.edges), graph.entry, graph.exit)


def resolve_workflow(graph: ActivityGraph, cm: CustomizationModel, trace: DerivationTrace) -> ActivityGraph:
    """Replace every vp_region, one at a time so chained and nested regions
    see their already-resolved neighbors: bound internal VPs splice their
    chosen fragments in binding order; surviving CPs become decision ->
    guarded fragments -> merge (a single survivor collapses to a splice);
    regions of dropped VPs splice through."""
    dropped_vps = {e.vp for e in trace.effects if isinstance(e, VpDropped)}
    current = graph
    while True:
        region = next((n for n in current.nodes if n.kind is NodeKind.VP_REGION), None)
        if region is None:
            return current
        current = _resolve_region(current, region, cm, dropped_vps)


# ---------------------------------------------------------------------------
# Runtime configuration pruning


def _fragment_nodes(graph: ActivityGraph, start: str, stop: str) -> set[str]:
    """Nodes reachable from `start` without entering `stop`."""
    seen = {start}
    stack = [start]
    while stack:
        for e in graph.outgoing(stack.pop()):
            if e.target != stop and e.target not in seen:
                seen.add(e.target)
                stack.append(e.target)
    return seen


def _matching_merge(graph: ActivityGraph, decision: ActivityNode) -> Optional[ActivityNode]:
    """The merge closing this decision: first same-CP merge every branch runs into."""
    seen: set[str] = set()
    hits: set[str] = set()
    stack = [e.target for e in graph.outgoing(decision.id)]
    while stack:
        node_id = stack.pop()
        if node_id in seen:
            continue
        seen.add(node_id)
        node = graph.node(node_id)
        if node is None:
            continue
        if node.kind is NodeKind.MERGE and node.vp_id == decision.vp_id:
            hits.add(node_id)
            continue
        stack.extend(e.target for e in graph.outgoing(node_id))
    if len(hits) == 1:
        return graph.node(next(iter(hits)))
    return None


def apply_configuration(
    resolved: ActivityGraph, cfg: TenantConfiguration, cm: CustomizationModel
) -> ActivityGraph:
    """Prune decision branches the tenant did not select; a decision left with
    one branch (or none, for a satisfied min-0 group) collapses to a splice."""
    if cfg.model_name and cfg.model_name != cm.model.name:
        raise _wf("WF007", f"configuration is for '{cfg.model_name}', not '{cm.model.name}'")
    diags = validate_configuration(cm, cfg)
    if diags:
        raise WorkflowError(
            [error("WF007", f"configuration does not validate: {d.code}: {d.message}", *d.subject) for d in diags]
        )

    selections = {cp: set(vs) for cp, vs in cfg.selections}
    nodes = list(resolved.nodes)
    edges = list(resolved.edges)

    for decision in [n for n in resolved.nodes if n.kind is NodeKind.DECISION and n.vp_id]:
        current = ActivityGraph(tuple(nodes), tuple(edges), resolved.entry, resolved.exit)
        merge = _matching_merge(current, decision)
        if merge is None:
            continue
        selected = selections.get(decision.vp_id, set())
        keep_edges = [e for e in current.outgoing(decision.id) if e.variant is None or e.variant in selected]
        prune_edges = [e for e in current.outgoing(decision.id) if e not in keep_edges]
        doomed: set[str] = set()
        for e in prune_edges:
            doomed |= _fragment_nodes(current, e.target, merge.id)
        edges = [e for e in edges if e not in prune_edges and e.source not in doomed and e.target not in doomed]
        nodes = [n for n in nodes if n.id not in doomed]

        if len(keep_edges) > 1:
            continue
        in_edges = [e for e in edges if e.target == decision.id]
        out_edges = [e for e in edges if e.source == merge.id]
        edges = [
            e for e in edges if decision.id not in (e.source, e.target) and merge.id not in (e.source, e.target)
        ]
        nodes = [n for n in nodes if n.id not in (decision.id, merge.id)]
        if keep_edges:
            branch = keep_edges[0]
            trimmed = ActivityGraph(tuple(nodes), tuple(edges), resolved.entry, resolved.exit)
            frag = _fragment_nodes(trimmed, branch.target, merge.id)
            exit_sources = sorted(
                node_id
                for node_id in frag
                if any(e.source == node_id and e.target == merge.id for e in resolved.edges)
            )
            for e in in_edges:
                edges.append(Edge(e.source, branch.target, e.guard))
            for node_id in exit_sources:
                original = next(e for e in resolved.edges if e.source == node_id and e.target == merge.id)
                for o in out_edges:
                    edges.append(Edge(node_id, o.target, original.guard if original.guard is not None else o.guard))
        else:
            for e in in_edges:
                for o in out_edges:
                    edges.append(Edge(e.source, o.target, e.guard if e.guard is not None else o.guard))

    return ActivityGraph(tuple(nodes), tuple(edges), resolved.entry, resolved.exit)
