"""Project directory IO: loading, canonical saving, plan overlays and
integration of external geospatial data.

A project directory holds nodes.geojson and pipelines.geojson (mandatory),
one <layer>.geojson per element layer, conf.json (layer configs, schemas,
groups, plan manifest), license.txt, journal.jsonl and a plans/ directory
with the georeferenced images.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IoError, MissingMandatoryFile, ParseError, SchemaError
from .geomath import (
    AffineTransform,
    ControlPointPair,
    haversine_km,
    polyline_length_km,
    solve_affine,
)
from .model import (
    AttrMap,
    Dataset,
    ElementKind,
    GeoPosition,
    InfrastructureElement,
    JournalEntry,
    LayerConfig,
    Node,
    Pipeline,
    PipelineGroup,
    PlanOverlay,
    RESERVED_NODE_ATTRIBUTES,
    apply_schema_defaults,
    extend_schema,
    new_dataset,
)
from .ops import ensure_pipeline_sublayer
from .serialize import (
    canonical_dumps,
    conf_payload,
    journal_line,
    layer_collection,
    nodes_collection,
    pipelines_collection,
)
from . import validation

NODES_FILE = "nodes.geojson"
PIPELINES_FILE = "pipelines.geojson"
CONF_FILE = "conf.json"
LICENSE_FILE = "license.txt"
JOURNAL_FILE = "journal.jsonl"
PLANS_DIR = "plans"

DEFAULT_SNAP_TOLERANCE_KM = 0.2

# "name" is structural on nodes only; elsewhere it is a free attribute
_STRUCTURAL_KEYS = {
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
}
_NODE_STRUCTURAL_KEYS = _STRUCTURAL_KEYS | {"name"}


@dataclass
class ProjectManifest:
    root: Path
    nodes_file: Path
    pipelines_file: Path
    layer_files: dict[str, Path] = field(default_factory=dict)
    config_file: Path | None = None
    plans_dir: Path | None = None
    license_file: Path | None = None
    journal_file: Path | None = None

    def written_files(self) -> list[str]:
        files = [self.nodes_file, self.pipelines_file]
        files.extend(self.layer_files.values())
        for extra in (self.config_file, self.license_file, self.journal_file):
            if extra is not None:
                files.append(extra)
        return sorted(str(f.relative_to(self.root)) for f in files)


# -------------------------------------------------------------------------
# Loading
# -------------------------------------------------------------------------

def _read_json(path: Path):
    try:
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path.name}: invalid JSON ({exc})") from exc


def _features(doc, path: Path) -> list[dict]:
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError(f"{path.name}: not a FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise ParseError(f"{path.name}: missing feature list")
    return features


def _geometry(feature: dict, expected: str, path: Path, index: int) -> list:
    geometry = feature.get("geometry") or {}
    if geometry.get("type") != expected:
        raise SchemaError(
            f"{path.name}: feature {index} has geometry "
            f"'{geometry.get('type')}', expected {expected}"
        )
    return geometry.get("coordinates") or []


def _position(raw, path: Path, index: int) -> GeoPosition:
    try:
        return GeoPosition(float(raw[0]), float(raw[1]))
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"{path.name}: feature {index}: bad coordinates ({exc})") from exc


def _props(feature: dict) -> dict:
    props = feature.get("properties")
    return props if isinstance(props, dict) else {}


def _require_id(props: dict, path: Path, index: int) -> str:
    feature_id = props.get("id")
    if not isinstance(feature_id, str) or not feature_id:
        raise ParseError(f"{path.name}: feature {index} lacks a string 'id'")
    return feature_id


def _free_attrs(props: dict, structural: set[str] = _STRUCTURAL_KEYS) -> AttrMap:
    return {k: v for k, v in props.items() if k not in structural}


def _load_conf(dataset: Dataset, root: Path) -> None:
    path = root / CONF_FILE
    if not path.exists():
        dataset.warnings.append(f"{CONF_FILE} missing; using mandatory defaults")
        return
    doc = _read_json(path)
    layers = doc.get("layers")
    if isinstance(layers, list) and layers:
        dataset.layer_configs = []
        for record in layers:
            dataset.layer_configs.append(
                LayerConfig(
                    layer=record["layer"],
                    kind=record["kind"],
                    legend_label=record.get("legend_label", record["layer"]),
                    color=record.get("color", "#888888"),
                    marker=record.get("marker", "circle"),
                    visible_default=record.get("visible_default", True),
                    sublayer_of=record.get("sublayer_of"),
                )
            )
        for mandatory, kind in (("nodes", "node"), ("pipelines", "pipeline")):
            if dataset.layer_config(mandatory) is None:
                dataset.layer_configs.insert(
                    0, LayerConfig(layer=mandatory, kind=kind, legend_label=mandatory.title())
                )
                dataset.warnings.append(f"{CONF_FILE}: '{mandatory}' entry missing; restored")
    schemas = doc.get("schemas")
    if isinstance(schemas, dict):
        dataset.schemas = {
            layer: [(e["key"], e.get("default")) for e in entries]
            for layer, entries in schemas.items()
        }
        dataset.schemas.setdefault("nodes", [])
        dataset.schemas.setdefault("pipelines", [])
    for record in doc.get("groups", []):
        group = PipelineGroup(id=record["id"], name=record.get("name", record["id"]))
        dataset.groups[group.id] = group
    for record in doc.get("plans", []):
        t = record.get("transform", {})
        overlay = PlanOverlay(
            id=record["id"],
            image_file=record["image_file"],
            transform=AffineTransform(
                a=t["a"], b=t["b"], c=t["c"], d=t["d"], e=t["e"], f=t["f"],
                rms_residual_deg=t.get("rms_residual_deg", 0.0),
            ),
            opacity=record.get("opacity", 0.5),
            source_note=record.get("source_note", ""),
        )
        if not (root / PLANS_DIR / overlay.image_file).exists():
            dataset.warnings.append(f"plan image '{overlay.image_file}' missing")
        dataset.plan_overlays.append(overlay)


def _backfill_schema(dataset: Dataset, layer: str, attrs: AttrMap) -> AttrMap:
    """Align one member's attributes with the layer schema, extending it for
    unexpected keys so the layer stays attribute-consistent after load."""
    schema = dataset.schemas.setdefault(layer, [])
    keys = [k for k, _ in schema]
    for extra in sorted(set(attrs) - set(keys)):
        schema.append((extra, None))
        keys.append(extra)
        dataset.warnings.append(f"layer '{layer}': attribute '{extra}' added to schema")
    return {k: attrs.get(k, default) for k, default in schema}


def read_journal_file(path: str | Path) -> list[JournalEntry]:
    """Parse a journal file: one JSON record per line, in order."""
    path = Path(path)
    if not path.exists():
        raise MissingMandatoryFile(f"journal file '{path}' missing")
    entries: list[JournalEntry] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            entries.append(
                JournalEntry(
                    seq=record["seq"],
                    timestamp=record["timestamp"],
                    user=record["user"],
                    op=record["op"],
                    params=record["params"],
                    affected_ids=record["affected_ids"],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"{path.name}: line {line_no}: {exc}") from exc
    return entries


def load_project(root: str | Path) -> Dataset:
    """Materialize a project directory; reference problems become warnings."""
    root = Path(root)
    nodes_path = root / NODES_FILE
    pipelines_path = root / PIPELINES_FILE
    for path in (nodes_path, pipelines_path):
        if not path.exists():
            raise MissingMandatoryFile(f"mandatory file '{path.name}' missing in {root}")

    dataset = new_dataset()
    _load_conf(dataset, root)

    for index, feature in enumerate(_features(_read_json(nodes_path), nodes_path)):
        raw = _geometry(feature, "Point", nodes_path, index)
        props = _props(feature)
        node_id = _require_id(props, nodes_path, index)
        dataset.nodes[node_id] = Node(
            id=node_id,
            name=props.get("name", node_id),
            position=_position(raw, nodes_path, index),
            attributes=_free_attrs(props, _NODE_STRUCTURAL_KEYS),
        )

    for index, feature in enumerate(_features(_read_json(pipelines_path), pipelines_path)):
        raw = _geometry(feature, "LineString", pipelines_path, index)
        props = _props(feature)
        pipe_id = _require_id(props, pipelines_path, index)
        if len(raw) < 2:
            raise ParseError(f"{pipelines_path.name}: feature {index}: route needs 2+ points")
        route = [_position(c, pipelines_path, index) for c in raw]
        is_short = bool(props.get("is_short_pipe", False))
        length = 0.0 if is_short else polyline_length_km(route)
        stored = props.get("length_km")
        if not is_short and isinstance(stored, (int, float)) and stored > 0:
            if abs(stored - length) > 1e-9 * max(stored, length):
                dataset.warnings.append(
                    f"pipeline '{pipe_id}': stored length {stored} differs from geometry; recomputed"
                )
        dataset.pipelines[pipe_id] = Pipeline(
            id=pipe_id,
            start_node=str(props.get("start_node", "")),
            end_node=str(props.get("end_node", "")),
            route=route,
            length_km=length,
            is_short_pipe=is_short,
            sublayer=str(props.get("sublayer", "natural_gas")),
            group_id=props.get("group_id"),
            attributes=_free_attrs(props),
        )

    for layer in dataset.element_layers():
        cfg = dataset.layer_config(layer)
        try:
            kind = ElementKind(cfg.kind)
        except ValueError:
            dataset.warnings.append(f"layer '{layer}' has unknown kind '{cfg.kind}'")
            continue
        path = root / f"{layer}.geojson"
        if not path.exists():
            continue
        geometry_type = "LineString" if kind == ElementKind.LINE else "Point"
        for index, feature in enumerate(_features(_read_json(path), path)):
            raw = _geometry(feature, geometry_type, path, index)
            props = _props(feature)
            element = InfrastructureElement(
                id=_require_id(props, path, index),
                layer=layer,
                kind=kind,
                attributes=_free_attrs(props),
            )
            if kind == ElementKind.NODE_ATTACHED:
                element.node_ref = str(props.get("node_ref", ""))
            elif kind == ElementKind.IN_LINE:
                element.pipeline_ref = str(props.get("pipeline_ref", ""))
                element.position_fraction = float(props.get("position_fraction", 0.0))
            elif kind == ElementKind.POINT:
                element.position = _position(raw, path, index)
            else:
                element.route = [_position(c, path, index) for c in raw]
            dataset.elements[element.id] = element

    # group membership is the pipelines' view; conf only names the groups
    for pipe in dataset.pipelines.values():
        if pipe.group_id is not None and pipe.group_id in dataset.groups:
            dataset.groups[pipe.group_id].member_ids.add(pipe.id)
    for group in list(dataset.groups.values()):
        if not group.member_ids:
            dataset.warnings.append(f"group '{group.id}' has no members; dropped")
            del dataset.groups[group.id]

    license_path = root / LICENSE_FILE
    if license_path.exists():
        dataset.license_text = license_path.read_text(encoding="utf-8")

    journal_path = root / JOURNAL_FILE
    if journal_path.exists():
        dataset.journal = read_journal_file(journal_path)

    for layer in ("nodes", "pipelines", *dataset.element_layers()):
        members = (
            dataset.nodes.values()
            if layer == "nodes"
            else dataset.pipelines.values()
            if layer == "pipelines"
            else dataset.elements_of_layer(layer)
        )
        for member in members:
            member.attributes = _backfill_schema(dataset, layer, member.attributes)

    for finding in validation.check_references(dataset):
        dataset.warnings.append(
            f"dangling reference: {finding.object_id}.{finding.field} -> {finding.missing_id}"
        )
    return dataset


# -------------------------------------------------------------------------
# Saving
# -------------------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def save_project(dataset: Dataset, root: str | Path) -> ProjectManifest:
    """Write the canonical on-disk form; byte-idempotent for a given dataset."""
    root = Path(root)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {root}: {exc}") from exc

    manifest = ProjectManifest(
        root=root,
        nodes_file=root / NODES_FILE,
        pipelines_file=root / PIPELINES_FILE,
    )
    _write(manifest.nodes_file, canonical_dumps(nodes_collection(dataset)))
    _write(manifest.pipelines_file, canonical_dumps(pipelines_collection(dataset)))
    for layer in dataset.element_layers():
        path = root / f"{layer}.geojson"
        _write(path, canonical_dumps(layer_collection(dataset, layer)))
        manifest.layer_files[layer] = path

    manifest.config_file = root / CONF_FILE
    _write(manifest.config_file, canonical_dumps(conf_payload(dataset)))

    manifest.license_file = root / LICENSE_FILE
    _write(manifest.license_file, dataset.license_text)

    if dataset.journal:
        manifest.journal_file = root / JOURNAL_FILE
        _write(manifest.journal_file, "".join(journal_line(e) + "\n" for e in dataset.journal))

    plans_dir = root / PLANS_DIR
    plans_dir.mkdir(exist_ok=True)
    manifest.plans_dir = plans_dir
    for overlay in dataset.plan_overlays:
        target = plans_dir / overlay.image_file
        if target.exists():
            continue
        if overlay.source_path and Path(overlay.source_path).exists():
            shutil.copyfile(overlay.source_path, target)
        else:
            raise IoError(f"plan image '{overlay.image_file}' unavailable for save")
    return manifest


# -------------------------------------------------------------------------
# Plan overlays
# -------------------------------------------------------------------------

def add_plan_overlay(
    dataset: Dataset,
    image_path: str | Path,
    pairs: list[ControlPointPair],
    opacity: float = 0.5,
    source_note: str = "",
) -> PlanOverlay:
    """Georeference a plan image from landmark pairs and register it."""
    image_path = Path(image_path)
    if not image_path.is_file():
        raise IoError(f"plan image '{image_path}' is not readable")
    if not 0.0 <= opacity <= 1.0:
        raise ValueError("opacity must lie in [0, 1]")
    transform = solve_affine(pairs)
    overlay_id = dataset.next_id("plan")
    basename = image_path.name
    if any(o.image_file == basename for o in dataset.plan_overlays):
        basename = f"{overlay_id}_{basename}"
    overlay = PlanOverlay(
        id=overlay_id,
        image_file=basename,
        transform=transform,
        opacity=opacity,
        source_note=source_note,
        source_path=str(image_path),
    )
    dataset.plan_overlays.append(overlay)
    return overlay


# -------------------------------------------------------------------------
# External dataset integration
# -------------------------------------------------------------------------

def integrate_dataset(
    dataset: Dataset,
    external: dict,
    snap_tolerance_km: float = DEFAULT_SNAP_TOLERANCE_KM,
) -> dict:
    """Merge external point/linestring collections into the dataset.

    External nodes match the nearest existing node within the tolerance
    (greedy by ascending distance, one-to-one) or are created fresh. External
    edges are re-referenced onto matched/created nodes; an edge whose node
    pair is already connected is skipped. Attribute transfer fills keys that
    are locally null or unknown; conflicting values are reported and the
    local value kept. Pre-existing geometry is never modified.
    """
    if snap_tolerance_km <= 0:
        raise ValueError("snap tolerance must be positive")

    fake_path = Path("external")
    ext_nodes: list[tuple[str, GeoPosition, AttrMap]] = []
    seen_ext_ids: set[str] = set()
    nodes_doc = external.get("nodes")
    if nodes_doc is not None:
        for index, feature in enumerate(_features(nodes_doc, fake_path)):
            raw = _geometry(feature, "Point", fake_path, index)
            props = _props(feature)
            ext_id = props.get("id") or f"external_node_{index}"
            if ext_id in seen_ext_ids:
                raise ParseError(f"external: duplicate node id '{ext_id}'")
            seen_ext_ids.add(ext_id)
            ext_nodes.append((ext_id, _position(raw, fake_path, index), _free_attrs(props)))

    ext_edges: list[tuple[str, list[GeoPosition], str, str, AttrMap, str | None]] = []
    anon_by_coord: dict[tuple[float, float], str] = {}
    pipes_doc = external.get("pipelines")
    if pipes_doc is not None:
        for index, feature in enumerate(_features(pipes_doc, fake_path)):
            raw = _geometry(feature, "LineString", fake_path, index)
            if len(raw) < 2:
                raise ParseError(f"external: edge feature {index}: route needs 2+ points")
            props = _props(feature)
            route = [_position(c, fake_path, index) for c in raw]

            def endpoint_ref(prop_key: str, position: GeoPosition) -> str:
                ref = props.get(prop_key)
                if ref is not None:
                    return str(ref)
                key = (round(position.lon, 7), round(position.lat, 7))
                if key not in anon_by_coord:
                    anon = f"external_endpoint_{len(anon_by_coord)}"
                    anon_by_coord[key] = anon
                    ext_nodes.append((anon, position, {}))
                return anon_by_coord[key]

            ext_edges.append(
                (
                    props.get("id") or f"external_edge_{index}",
                    route,
                    endpoint_ref("start_node", route[0]),
                    endpoint_ref("end_node", route[-1]),
                    _free_attrs(props),
                    props.get("sublayer"),
                )
            )

    ext_ids = {ext_id for ext_id, _, _ in ext_nodes}
    for edge_id, _, start_ref, end_ref, _, _ in ext_edges:
        for ref in (start_ref, end_ref):
            if ref not in ext_ids:
                raise ParseError(f"external: edge '{edge_id}' references unknown node '{ref}'")

    # greedy one-to-one matching by ascending geodesic distance
    candidates = []
    for ext_id, position, _attrs in ext_nodes:
        for local_id, node in dataset.nodes.items():
            distance = haversine_km(position, node.position)
            if distance <= snap_tolerance_km:
                candidates.append((distance, ext_id, local_id))
    candidates.sort()
    mapping: dict[str, str] = {}
    matched_pairs: list[list[str]] = []
    taken: set[str] = set()
    for _distance, ext_id, local_id in candidates:
        if ext_id in mapping or local_id in taken:
            continue
        mapping[ext_id] = local_id
        matched_pairs.append([ext_id, local_id])
        taken.add(local_id)

    created_nodes: list[str] = []
    transferred = 0
    conflicts: list[dict] = []
    node_schema_keys = {k for k, _ in dataset.schemas.get("nodes", [])}
    for ext_id, position, attrs in ext_nodes:
        clean = {k: v for k, v in attrs.items() if k not in RESERVED_NODE_ATTRIBUTES}
        if ext_id in mapping:
            node = dataset.nodes[mapping[ext_id]]
            for key, value in clean.items():
                local_value = node.attributes.get(key)
                if key not in node_schema_keys:
                    extend_schema(dataset, "nodes", key, None)
                    node_schema_keys.add(key)
                    node.attributes[key] = value
                    transferred += 1
                elif local_value is None and value is not None:
                    node.attributes[key] = value
                    transferred += 1
                elif local_value is not None and value is not None and local_value != value:
                    conflicts.append(
                        {"node_id": node.id, "key": key, "local": local_value, "external": value}
                    )
        else:
            node_id = dataset.next_id("node")
            dataset.nodes[node_id] = Node(
                id=node_id,
                name=str(attrs.get("name", node_id)) if "name" in attrs else node_id,
                position=position,
                attributes=apply_schema_defaults(dataset, "nodes", clean),
            )
            node_schema_keys = {k for k, _ in dataset.schemas.get("nodes", [])}
            mapping[ext_id] = node_id
            created_nodes.append(node_id)

    existing_pairs = {
        frozenset((p.start_node, p.end_node)) for p in dataset.pipelines.values()
    }
    created_pipes: list[str] = []
    skipped: list[str] = []
    for edge_id, route, start_ref, end_ref, attrs, sublayer in ext_edges:
        start_id, end_id = mapping[start_ref], mapping[end_ref]
        if start_id == end_id:
            skipped.append(edge_id)
            continue
        pair = frozenset((start_id, end_id))
        if pair in existing_pairs:
            skipped.append(edge_id)
            continue
        sublabel = str(sublayer) if sublayer else "integrated"
        ensure_pipeline_sublayer(dataset, sublabel)
        clean = {k: v for k, v in attrs.items() if k not in _STRUCTURAL_KEYS}
        route = [dataset.nodes[start_id].position, *route[1:-1], dataset.nodes[end_id].position]
        pipe = Pipeline(
            id=dataset.next_id("pipe"),
            start_node=start_id,
            end_node=end_id,
            route=route,
            length_km=polyline_length_km(route),
            sublayer=sublabel,
            attributes=apply_schema_defaults(dataset, "pipelines", clean),
        )
        dataset.pipelines[pipe.id] = pipe
        existing_pairs.add(pair)
        created_pipes.append(pipe.id)

    return {
        "conflicts": conflicts,
        "created_node_ids": created_nodes,
        "created_pipeline_ids": created_pipes,
        "matched": sorted(matched_pairs),
        "skipped_existing_edges": skipped,
        "transferred_attribute_count": transferred,
    }
