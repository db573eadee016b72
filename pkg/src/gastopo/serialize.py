"""Canonical feature serialization shared by project IO and the HTTP service.

Canonical form: features sorted by id, JSON keys sorted, coordinates at
7 decimal places (~1 cm), stored lengths recomputed from the rounded
geometry, UTF-8, newline-terminated. Saving twice yields identical bytes.
"""

from __future__ import annotations

import json
from typing import Any

from .geomath import polyline_length_km
from .model import (
    Dataset,
    ElementKind,
    GeoPosition,
    InfrastructureElement,
    JournalEntry,
    LayerConfig,
    Node,
    Pipeline,
    PlanOverlay,
)
from .ops import rendered_position

COORD_DECIMALS = 7


def round_coord(value: float) -> float:
    rounded = round(value, COORD_DECIMALS)
    return 0.0 if rounded == 0.0 else rounded


def coords(position: GeoPosition) -> list[float]:
    return [round_coord(position.lon), round_coord(position.lat)]


def _rounded_route(route: list[GeoPosition]) -> list[GeoPosition]:
    return [GeoPosition(round_coord(p.lon), round_coord(p.lat)) for p in route]


def point_geometry(position: GeoPosition) -> dict:
    return {"type": "Point", "coordinates": coords(position)}


def line_geometry(route: list[GeoPosition]) -> dict:
    return {"type": "LineString", "coordinates": [coords(p) for p in route]}


def node_feature(node: Node) -> dict:
    return {
        "type": "Feature",
        "geometry": point_geometry(node.position),
        "properties": {"id": node.id, "name": node.name, **node.attributes},
    }


def pipeline_feature(pipe: Pipeline) -> dict:
    # the stored length must match the rounded geometry it ships with
    length = 0.0 if pipe.is_short_pipe else polyline_length_km(_rounded_route(pipe.route))
    return {
        "type": "Feature",
        "geometry": line_geometry(pipe.route),
        "properties": {
            "id": pipe.id,
            "start_node": pipe.start_node,
            "end_node": pipe.end_node,
            "length_km": length,
            "is_short_pipe": pipe.is_short_pipe,
            "sublayer": pipe.sublayer,
            "group_id": pipe.group_id,
            **pipe.attributes,
        },
    }


def element_feature(dataset: Dataset, element: InfrastructureElement) -> dict:
    properties: dict[str, Any] = {"id": element.id}
    if element.kind == ElementKind.LINE:
        geometry = line_geometry(element.route or [])
    else:
        position = rendered_position(dataset, element)
        geometry = point_geometry(position)
        if element.kind == ElementKind.NODE_ATTACHED:
            properties["node_ref"] = element.node_ref
        elif element.kind == ElementKind.IN_LINE:
            properties["pipeline_ref"] = element.pipeline_ref
            properties["position_fraction"] = element.position_fraction
    properties.update(element.attributes)
    return {"type": "Feature", "geometry": geometry, "properties": properties}


def feature_collection(features: list[dict]) -> dict:
    ordered = sorted(features, key=lambda f: f["properties"]["id"])
    return {"type": "FeatureCollection", "features": ordered}


def nodes_collection(dataset: Dataset) -> dict:
    return feature_collection([node_feature(n) for n in dataset.nodes.values()])


def pipelines_collection(dataset: Dataset, sublayer: str | None = None) -> dict:
    pipes = dataset.pipelines.values()
    if sublayer is not None:
        pipes = [p for p in pipes if p.sublayer == sublayer]
    return feature_collection([pipeline_feature(p) for p in pipes])


def layer_collection(dataset: Dataset, layer: str) -> dict:
    return feature_collection(
        [element_feature(dataset, e) for e in dataset.elements_of_layer(layer)]
    )


def layer_config_record(cfg: LayerConfig) -> dict:
    return {
        "layer": cfg.layer,
        "kind": cfg.kind,
        "legend_label": cfg.legend_label,
        "color": cfg.color,
        "marker": cfg.marker,
        "visible_default": cfg.visible_default,
        "sublayer_of": cfg.sublayer_of,
    }


def overlay_record(overlay: PlanOverlay) -> dict:
    t = overlay.transform
    return {
        "id": overlay.id,
        "image_file": overlay.image_file,
        "opacity": overlay.opacity,
        "source_note": overlay.source_note,
        "transform": {
            "a": t.a,
            "b": t.b,
            "c": t.c,
            "d": t.d,
            "e": t.e,
            "f": t.f,
            "rms_residual_deg": t.rms_residual_deg,
        },
    }


def conf_payload(dataset: Dataset) -> dict:
    return {
        "layers": [layer_config_record(c) for c in dataset.layer_configs],
        "schemas": {
            layer: [{"key": k, "default": d} for k, d in schema]
            for layer, schema in dataset.schemas.items()
        },
        "groups": [
            {"id": g.id, "name": g.name} for g in sorted(dataset.groups.values(), key=lambda g: g.id)
        ],
        "plans": [overlay_record(o) for o in dataset.plan_overlays],
    }


def journal_entry_record(entry: JournalEntry) -> dict:
    return {
        "seq": entry.seq,
        "timestamp": entry.timestamp,
        "user": entry.user,
        "op": entry.op,
        "params": entry.params,
        "affected_ids": entry.affected_ids,
    }


def journal_line(entry: JournalEntry) -> str:
    return json.dumps(
        journal_entry_record(entry), sort_keys=True, ensure_ascii=False, separators=(",", ":")
    )


def group_payload(dataset: Dataset) -> list[dict]:
    return [
        {
            "id": g.id,
            "name": g.name,
            "member_ids": sorted(g.member_ids),
            "total_length_km": dataset.group_total_length_km(g.id),
        }
        for g in sorted(dataset.groups.values(), key=lambda g: g.id)
    ]


def dataset_payload(dataset: Dataset) -> dict:
    """Full dataset snapshot as served by the HTTP API."""
    return {
        "configs": [layer_config_record(c) for c in dataset.layer_configs],
        "groups": group_payload(dataset),
        "journal_seq": dataset.journal[-1].seq if dataset.journal else 0,
        "layers": {layer: layer_collection(dataset, layer) for layer in dataset.element_layers()},
        "license": dataset.license_text,
        "nodes": nodes_collection(dataset),
        "pipelines": pipelines_collection(dataset),
        "plans": [overlay_record(o) for o in dataset.plan_overlays],
        "schemas": conf_payload(dataset)["schemas"],
    }


def content_payload(dataset: Dataset) -> dict:
    """Dataset content without the journal counter; used for equality checks."""
    payload = dataset_payload(dataset)
    payload.pop("journal_seq")
    return payload


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def compact_dumps(obj: Any) -> str:
    """Compact JSON exactly as FastAPI's JSONResponse emits it."""
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, indent=None, separators=(",", ":"))
