"""Topology checking, reference-integrity auditing and network statistics.

All functions here are read-only and safe to run on snapshots at any time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import DanglingReference
from .model import Dataset, ElementKind


@dataclass(frozen=True)
class Dangling:
    """One broken reference: object, field name, and the missing target id."""

    object_id: str
    field: str
    missing_id: str

    def as_dict(self) -> dict:
        return {"object_id": self.object_id, "field": self.field, "missing_id": self.missing_id}


@dataclass
class ComponentReport:
    node_ids: list[str]
    pipeline_ids: list[str]
    total_length_km: float
    dominant_sublayer: str | None


@dataclass
class TopologyReport:
    component_count: int
    components: list[ComponentReport] = field(default_factory=list)
    isolated_nodes: list[str] = field(default_factory=list)
    dangling_references: list[Dangling] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "component_count": self.component_count,
            "components": [
                {
                    "node_ids": c.node_ids,
                    "pipeline_ids": c.pipeline_ids,
                    "total_length_km": c.total_length_km,
                    "dominant_sublayer": c.dominant_sublayer,
                }
                for c in self.components
            ],
            "isolated_nodes": self.isolated_nodes,
            "dangling_references": [d.as_dict() for d in self.dangling_references],
        }


def check_references(dataset: Dataset) -> list[Dangling]:
    """All dangling identifier references; empty iff reference closure holds."""
    findings: list[Dangling] = []
    known_layers = {cfg.layer for cfg in dataset.layer_configs}

    for pipe in dataset.pipelines.values():
        if pipe.start_node not in dataset.nodes:
            findings.append(Dangling(pipe.id, "start_node", pipe.start_node))
        if pipe.end_node not in dataset.nodes:
            findings.append(Dangling(pipe.id, "end_node", pipe.end_node))
        if pipe.group_id is not None and pipe.group_id not in dataset.groups:
            findings.append(Dangling(pipe.id, "group_id", pipe.group_id))
        if pipe.sublayer not in known_layers:
            findings.append(Dangling(pipe.id, "sublayer", pipe.sublayer))

    for element in dataset.elements.values():
        if element.layer not in known_layers:
            findings.append(Dangling(element.id, "layer", element.layer))
        if element.kind == ElementKind.NODE_ATTACHED and element.node_ref not in dataset.nodes:
            findings.append(Dangling(element.id, "node_ref", element.node_ref))
        if element.kind == ElementKind.IN_LINE and element.pipeline_ref not in dataset.pipelines:
            findings.append(Dangling(element.id, "pipeline_ref", element.pipeline_ref))

    for group in dataset.groups.values():
        for member in sorted(group.member_ids):
            if member not in dataset.pipelines:
                findings.append(Dangling(group.id, "member_ids", member))

    findings.sort(key=lambda d: (d.object_id, d.field, d.missing_id))
    return findings


def topology_check(dataset: Dataset, scope: str = "all", *, strict: bool = True) -> TopologyReport:
    """Connected components of the undirected node-pipeline graph.

    Short-pipes count as edges. ``scope`` may name a pipeline sublayer to
    restrict the edge set. With ``strict`` (the default) any dangling
    reference aborts the check; lenient mode skips broken edges so partially
    repaired projects still get a report.
    """
    dangling = check_references(dataset)
    if dangling and strict:
        raise DanglingReference(f"{len(dangling)} dangling reference(s); repair first")

    edges: dict[str, list[tuple[str, str]]] = {nid: [] for nid in dataset.nodes}
    usable_pipes = []
    for pipe in dataset.pipelines.values():
        if scope != "all" and pipe.sublayer != scope:
            continue
        if pipe.start_node not in dataset.nodes or pipe.end_node not in dataset.nodes:
            continue  # lenient mode only; strict raised above
        usable_pipes.append(pipe)
        edges[pipe.start_node].append((pipe.end_node, pipe.id))
        edges[pipe.end_node].append((pipe.start_node, pipe.id))

    components: list[ComponentReport] = []
    visited: set[str] = set()
    for start in sorted(dataset.nodes):
        if start in visited:
            continue
        queue = deque([start])
        visited.add(start)
        node_ids, pipeline_ids = [], set()
        while queue:
            current = queue.popleft()
            node_ids.append(current)
            for neighbor, pid in edges[current]:
                pipeline_ids.add(pid)
                if neighbor not in visited:
                    visited.add(neighbor)
                    queue.append(neighbor)
        member_pipes = [dataset.pipelines[pid] for pid in pipeline_ids]
        by_sublayer: dict[str, tuple[float, int]] = {}
        for pipe in member_pipes:
            length, count = by_sublayer.get(pipe.sublayer, (0.0, 0))
            by_sublayer[pipe.sublayer] = (length + pipe.length_km, count + 1)
        dominant = None
        if by_sublayer:
            dominant = min(
                by_sublayer, key=lambda s: (-by_sublayer[s][0], -by_sublayer[s][1], s)
            )
        components.append(
            ComponentReport(
                node_ids=sorted(node_ids),
                pipeline_ids=sorted(pipeline_ids),
                total_length_km=sum(p.length_km for p in member_pipes),
                dominant_sublayer=dominant,
            )
        )
    components.sort(key=lambda c: c.node_ids[0])

    isolated = sorted(nid for nid in dataset.nodes if not edges[nid])
    return TopologyReport(
        component_count=len(components),
        components=components,
        isolated_nodes=isolated,
        dangling_references=dangling,
    )


def compute_statistics(dataset: Dataset) -> dict:
    """Live network statistics: counts, per-sublayer lengths, data sources.

    Short-pipes are lossless and contribute 0 km to every length sum. A
    missing ``source`` attribute counts as the pseudo-source "undocumented".
    The returned dict has deterministically sorted keys so the CLI and HTTP
    representations match byte-for-byte.
    """
    element_counts: dict[str, int] = {
        "nodes": len(dataset.nodes),
        "pipelines": len(dataset.pipelines),
    }
    for layer in dataset.element_layers():
        element_counts[layer] = len(dataset.elements_of_layer(layer))

    by_sublayer: dict[str, dict] = {}
    for pid in sorted(dataset.pipelines):
        pipe = dataset.pipelines[pid]
        entry = by_sublayer.setdefault(pipe.sublayer, {"count": 0, "total_length_km": 0.0})
        entry["count"] += 1
        if not pipe.is_short_pipe:
            entry["total_length_km"] += pipe.length_km

    sources: set[str] = set()
    for obj in (
        list(dataset.nodes.values())
        + list(dataset.pipelines.values())
        + list(dataset.elements.values())
    ):
        value = obj.attributes.get("source")
        sources.add(str(value) if value is not None else "undocumented")
    if not (dataset.nodes or dataset.pipelines or dataset.elements):
        sources = set()

    return {
        "data_source_count": len(sources),
        "data_sources": sorted(sources),
        "element_counts": {k: element_counts[k] for k in sorted(element_counts)},
        "pipelines_by_sublayer": {k: by_sublayer[k] for k in sorted(by_sublayer)},
        "total_length_km": sum(
            p.length_km for p in dataset.pipelines.values() if not p.is_short_pipe
        ),
    }
