"""Domain types, the in-memory dataset container, identifier management and
layer/attribute-schema administration.

The dataset is a single mutable aggregate. All graph-changing operations live
in :mod:`gastopo.ops`; this module owns the types, id generation and the
layer-schema bookkeeping that every other module builds on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import (
    DuplicateLayer,
    ReservedAttribute,
    ReservedLayer,
    UnknownAttribute,
    UnknownId,
    UnknownLayer,
)

# Attribute value domain: scalars only, so serialization stays unambiguous.
AttrValue = str | float | int | bool | None
AttrMap = dict[str, AttrValue]

MANDATORY_LAYERS = ("nodes", "pipelines")

# Keys that live in structural fields and therefore may never appear in an
# attribute map (they would collide in the serialized feature properties).
RESERVED_ATTRIBUTES = frozenset(
    {
        "id",
        "start_node",
        "end_node",
        "length_km",
        "is_short_pipe",
        "sublayer",
        "group_id",
        "node_ref",
        "pipeline_ref",
        "position_fraction",
        "layer",
    }
)
# "name" is structural on nodes only; pipelines and elements may carry it
# as an ordinary attribute.
RESERVED_NODE_ATTRIBUTES = RESERVED_ATTRIBUTES | {"name"}


@dataclass(frozen=True)
class GeoPosition:
    """WGS84 longitude/latitude pair in decimal degrees."""

    lon: float
    lat: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise ValueError("coordinates must be finite")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of [-90, 90]")


def positions_equal(a: GeoPosition, b: GeoPosition, tol: float = 1e-9) -> bool:
    """Coordinate-wise equality within ``tol`` degrees."""
    return abs(a.lon - b.lon) <= tol and abs(a.lat - b.lat) <= tol


class ElementKind(str, Enum):
    LINE = "line"
    NODE_ATTACHED = "node_attached"
    POINT = "point"
    IN_LINE = "in_line"


@dataclass
class Node:
    id: str
    name: str
    position: GeoPosition
    attributes: AttrMap = field(default_factory=dict)


@dataclass
class Pipeline:
    id: str
    start_node: str
    end_node: str
    route: list[GeoPosition]
    length_km: float
    is_short_pipe: bool = False
    sublayer: str = "natural_gas"
    group_id: str | None = None
    attributes: AttrMap = field(default_factory=dict)


@dataclass
class InfrastructureElement:
    """Non-backbone component attached to the graph by reference.

    Exactly the reference fields demanded by ``kind`` are populated:
    node_attached -> node_ref; in_line -> pipeline_ref + position_fraction;
    point -> position; line -> route.
    """

    id: str
    layer: str
    kind: ElementKind
    node_ref: str | None = None
    pipeline_ref: str | None = None
    position_fraction: float | None = None
    position: GeoPosition | None = None
    route: list[GeoPosition] | None = None
    attributes: AttrMap = field(default_factory=dict)


@dataclass
class LayerConfig:
    layer: str
    kind: str  # ElementKind value, "pipeline" or "node"
    legend_label: str
    color: str = "#888888"
    marker: str = "circle"
    visible_default: bool = True
    sublayer_of: str | None = None


@dataclass
class PipelineGroup:
    id: str
    name: str
    member_ids: set[str] = field(default_factory=set)


@dataclass
class PlanOverlay:
    """Georeferenced plan image; the engine stores only the transform."""

    id: str
    image_file: str
    transform: "Any"  # geomath.AffineTransform; untyped to avoid a cycle
    opacity: float = 0.5
    source_note: str = ""
    source_path: str | None = None  # transient: where to copy the image from


@dataclass
class JournalEntry:
    seq: int
    timestamp: str  # UTC ISO-8601
    user: str
    op: str
    params: dict[str, Any]
    affected_ids: list[str]


# One schema entry: attribute key plus its default value, order preserved.
Schema = list[tuple[str, AttrValue]]


@dataclass
class Dataset:
    """In-memory project: graph backbone, layers, configuration, journal."""

    nodes: dict[str, Node] = field(default_factory=dict)
    pipelines: dict[str, Pipeline] = field(default_factory=dict)
    elements: dict[str, InfrastructureElement] = field(default_factory=dict)
    groups: dict[str, PipelineGroup] = field(default_factory=dict)
    layer_configs: list[LayerConfig] = field(default_factory=list)
    plan_overlays: list[PlanOverlay] = field(default_factory=list)
    schemas: dict[str, Schema] = field(default_factory=dict)
    license_text: str = ""
    journal: list[JournalEntry] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)  # transient load notes

    # -- lookups ---------------------------------------------------------

    def layer_config(self, name: str) -> LayerConfig | None:
        for cfg in self.layer_configs:
            if cfg.layer == name:
                return cfg
        return None

    def element_layers(self) -> list[str]:
        """Names of non-mandatory element layers, in config order."""
        return [
            cfg.layer
            for cfg in self.layer_configs
            if cfg.layer not in MANDATORY_LAYERS and cfg.sublayer_of is None
        ]

    def elements_of_layer(self, layer: str) -> list[InfrastructureElement]:
        return [e for e in self.elements.values() if e.layer == layer]

    def group_total_length_km(self, group_id: str) -> float:
        group = self.groups[group_id]
        return sum(self.pipelines[pid].length_km for pid in sorted(group.member_ids))

    # -- id generation ---------------------------------------------------

    def _existing_ids(self) -> set[str]:
        ids = set(self.nodes) | set(self.pipelines) | set(self.elements) | set(self.groups)
        ids.update(o.id for o in self.plan_overlays)
        return ids

    def next_id(self, prefix: str) -> str:
        """Deterministic ``<prefix>_<n>`` with n one past the largest suffix.

        Seeded from the ids already present so journal replay regenerates
        identical identifiers.
        """
        pattern = re.compile(rf"^{re.escape(prefix)}_(\d+)$")
        highest = 0
        for existing in self._existing_ids():
            m = pattern.match(existing)
            if m:
                highest = max(highest, int(m.group(1)))
        return f"{prefix}_{highest + 1}"

    def fresh_suffixed_id(self, base: str, suffix: str) -> str:
        """``<base><suffix>``, extended with underscores on collision."""
        candidate = base + suffix
        existing = self._existing_ids()
        while candidate in existing:
            candidate += "_"
        return candidate


def clone_for_write(dataset: Dataset) -> Dataset:
    """Deep copy of all mutable content; journal entries are shared.

    Entries are immutable once written, so the copy keeps command
    application linear in dataset size instead of journal length.
    """
    import copy

    clone = copy.copy(dataset)
    clone.nodes = copy.deepcopy(dataset.nodes)
    clone.pipelines = copy.deepcopy(dataset.pipelines)
    clone.elements = copy.deepcopy(dataset.elements)
    clone.groups = copy.deepcopy(dataset.groups)
    clone.layer_configs = copy.deepcopy(dataset.layer_configs)
    clone.plan_overlays = copy.deepcopy(dataset.plan_overlays)
    clone.schemas = {layer: list(schema) for layer, schema in dataset.schemas.items()}
    clone.journal = list(dataset.journal)
    clone.warnings = list(dataset.warnings)
    return clone


def new_dataset() -> Dataset:
    """Empty dataset with the mandatory layer entries in place."""
    ds = Dataset()
    ds.layer_configs = [
        LayerConfig(layer="nodes", kind="node", legend_label="Nodes", color="#1f4e79", marker="circle"),
        LayerConfig(layer="pipelines", kind="pipeline", legend_label="Pipelines", color="#c0392b", marker="line"),
    ]
    ds.schemas = {"nodes": [], "pipelines": []}
    return ds


# -------------------------------------------------------------------------
# Schema administration
# -------------------------------------------------------------------------

def _reserved_keys(layer: str) -> frozenset[str]:
    return RESERVED_NODE_ATTRIBUTES if layer == "nodes" else RESERVED_ATTRIBUTES


def _attribute_maps(dataset: Dataset, layer: str) -> list[AttrMap]:
    if layer == "nodes":
        return [n.attributes for n in dataset.nodes.values()]
    if layer == "pipelines":
        return [p.attributes for p in dataset.pipelines.values()]
    return [e.attributes for e in dataset.elements_of_layer(layer)]


def apply_schema_defaults(dataset: Dataset, layer: str, overrides: AttrMap | None = None) -> AttrMap:
    """Attribute map seeded with the layer schema defaults plus overrides.

    Override keys missing from the schema extend it (default ``None``) and
    are backfilled onto the layer's existing members, so the layer stays
    attribute-consistent.
    """
    attrs: AttrMap = {key: default for key, default in dataset.schemas.get(layer, [])}
    if overrides:
        reserved = _reserved_keys(layer)
        for key, value in overrides.items():
            if key in reserved:
                raise ReservedAttribute(f"attribute '{key}' is reserved")
            if key not in attrs:
                extend_schema(dataset, layer, key, None)
            attrs[key] = value
    return attrs


def extend_schema(dataset: Dataset, layer: str, key: str, default: AttrValue) -> None:
    """Add ``key`` to the layer schema and backfill existing members."""
    if layer not in dataset.schemas:
        dataset.schemas[layer] = []
    dataset.schemas[layer].append((key, default))
    for attrs in _attribute_maps(dataset, layer):
        attrs.setdefault(key, default)


# -------------------------------------------------------------------------
# Operations
# -------------------------------------------------------------------------

def define_element_type(
    dataset: Dataset,
    name: str,
    kind: ElementKind,
    schema: Schema | None = None,
    style: dict[str, Any] | None = None,
) -> LayerConfig:
    """Register a new, empty element layer with its schema and styling."""
    if name in MANDATORY_LAYERS:
        raise ReservedLayer(f"'{name}' is a mandatory layer name")
    if dataset.layer_config(name) is not None or name in dataset.schemas:
        raise DuplicateLayer(f"layer '{name}' already exists")
    kind = ElementKind(kind)
    reserved = _reserved_keys(name)
    for key, _default in schema or []:
        if key in reserved:
            raise ReservedAttribute(f"attribute '{key}' is reserved")
    style = dict(style or {})
    cfg = LayerConfig(
        layer=name,
        kind=kind.value,
        legend_label=style.get("legend_label", name),
        color=style.get("color", "#888888"),
        marker=style.get("marker", "circle"),
        visible_default=style.get("visible_default", True),
        sublayer_of=style.get("sublayer_of"),
    )
    dataset.layer_configs.append(cfg)
    dataset.schemas[name] = list(schema or [])
    return cfg


def manage_attribute(
    dataset: Dataset,
    layer: str,
    action: str,
    key: str,
    new_key_or_default: Any = None,
) -> int:
    """Add, rename, remove or re-default an attribute across a whole layer.

    Returns the number of affected members.
    """
    if layer not in dataset.schemas:
        raise UnknownLayer(f"layer '{layer}' does not exist")
    reserved = _reserved_keys(layer)
    if key in reserved:
        raise ReservedAttribute(f"attribute '{key}' is reserved")
    schema = dataset.schemas[layer]
    keys = [k for k, _ in schema]
    maps = _attribute_maps(dataset, layer)

    if action == "add":
        if key in keys:
            raise UnknownAttribute(f"attribute '{key}' already in schema of '{layer}'")
        schema.append((key, new_key_or_default))
        for attrs in maps:
            attrs[key] = new_key_or_default
        return len(maps)

    if key not in keys:
        raise UnknownAttribute(f"attribute '{key}' not in schema of '{layer}'")
    index = keys.index(key)

    if action == "rename":
        new_key = new_key_or_default
        if not isinstance(new_key, str) or not new_key:
            raise UnknownAttribute("rename requires a non-empty new key")
        if new_key in reserved:
            raise ReservedAttribute(f"attribute '{new_key}' is reserved")
        if new_key in keys:
            raise UnknownAttribute(f"attribute '{new_key}' already in schema of '{layer}'")
        schema[index] = (new_key, schema[index][1])
        for attrs in maps:
            attrs[new_key] = attrs.pop(key)
        return len(maps)

    if action == "remove":
        del schema[index]
        for attrs in maps:
            attrs.pop(key, None)
        return len(maps)

    if action == "set_default":
        schema[index] = (key, new_key_or_default)
        return 0

    raise UnknownAttribute(f"unknown action '{action}'")


def set_element_attributes(dataset: Dataset, obj_id: str, updates: AttrMap) -> dict[str, Any]:
    """Overwrite the listed attribute keys on one node, pipeline or element.

    Unlisted keys stay untouched; ``None`` values are permitted and mean
    "unknown". Keys not yet in the layer schema extend it. Returns a snapshot
    of the updated attributes.
    """
    if obj_id in dataset.nodes:
        node = dataset.nodes[obj_id]
        updates = dict(updates)
        new_name = updates.pop("name", None)
        for key in updates:
            if key in RESERVED_ATTRIBUTES:
                raise ReservedAttribute(f"attribute '{key}' is reserved")
        if new_name is not None:
            if not isinstance(new_name, str):
                raise ReservedAttribute("node name must be a string")
            node.name = new_name
        for key, value in updates.items():
            if key not in [k for k, _ in dataset.schemas["nodes"]]:
                extend_schema(dataset, "nodes", key, None)
            node.attributes[key] = value
        return {"id": node.id, "name": node.name, "attributes": dict(node.attributes)}

    if obj_id in dataset.pipelines:
        layer, attrs = "pipelines", dataset.pipelines[obj_id].attributes
    elif obj_id in dataset.elements:
        element = dataset.elements[obj_id]
        layer, attrs = element.layer, element.attributes
    else:
        raise UnknownId(f"no object with id '{obj_id}'")

    for key in updates:
        if key in RESERVED_ATTRIBUTES:
            raise ReservedAttribute(f"attribute '{key}' is reserved")
    schema_keys = [k for k, _ in dataset.schemas.get(layer, [])]
    for key, value in updates.items():
        if key not in schema_keys:
            extend_schema(dataset, layer, key, None)
        attrs[key] = value
    return {"id": obj_id, "attributes": dict(attrs)}
