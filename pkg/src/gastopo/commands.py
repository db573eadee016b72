"""Command envelopes: validation, atomic application, journaling and replay.

Every mutating tool is exposed as a named operation taking a JSON-safe
parameter record. The processor applies commands one at a time to a working
copy and swaps it in on success, so a failing command can never leave a
half-mutated dataset or a journal entry behind.
"""

from __future__ import annotations

import copy
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable

from . import ops, project
from .errors import GastopoError, ReplayDivergence, UnknownOperation, ValidationError
from .geomath import ControlPointPair
from .model import (
    Dataset,
    ElementKind,
    GeoPosition,
    JournalEntry,
    clone_for_write,
    define_element_type,
    manage_attribute,
    set_element_attributes,
)
from .serialize import (
    element_feature,
    layer_config_record,
    node_feature,
    overlay_record,
    pipeline_feature,
)


# -------------------------------------------------------------------------
# Parameter conversion
# -------------------------------------------------------------------------

def _fail(op: str, message: str) -> ValidationError:
    return ValidationError(f"{op}: {message}")


def _as_position(op: str, value: Any, name: str) -> GeoPosition:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise _fail(op, f"'{name}' must be [lon, lat]")
    try:
        return GeoPosition(float(value[0]), float(value[1]))
    except (TypeError, ValueError) as exc:
        raise _fail(op, f"'{name}': {exc}") from exc


def _as_route(op: str, value: Any, name: str) -> list[GeoPosition]:
    if not isinstance(value, list):
        raise _fail(op, f"'{name}' must be a list of [lon, lat] pairs")
    return [_as_position(op, item, f"{name}[{i}]") for i, item in enumerate(value)]


def _as_str(op: str, value: Any, name: str) -> str:
    if not isinstance(value, str) or not value:
        raise _fail(op, f"'{name}' must be a non-empty string")
    return value


def _as_attrs(op: str, value: Any, name: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise _fail(op, f"'{name}' must be an object")
    for key, item in value.items():
        if not isinstance(key, str):
            raise _fail(op, f"'{name}' keys must be strings")
        if item is not None and not isinstance(item, (str, int, float, bool)):
            raise _fail(op, f"'{name}.{key}' must be a scalar or null")
    return dict(value)


def _as_int(op: str, value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(op, f"'{name}' must be an integer")
    return value


# -------------------------------------------------------------------------
# Operation handlers: (dataset, params) -> (payload, modified ids)
# -------------------------------------------------------------------------

Handler = Callable[[Dataset, dict], tuple[Any, list[str]]]


def _h_add_pipeline(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    pipe = ops.add_pipeline(
        ds,
        route=_as_route("add_pipeline", p.get("route"), "route"),
        start=_as_str("add_pipeline", p.get("start"), "start"),
        end=_as_str("add_pipeline", p.get("end"), "end"),
        sublayer=_as_str("add_pipeline", p.get("sublayer"), "sublayer"),
        attributes=_as_attrs("add_pipeline", p.get("attributes"), "attributes"),
    )
    return {"pipeline": pipeline_feature(pipe)}, []


def _h_divide_pipeline(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    id_a, id_b, node_id = ops.divide_pipeline(
        ds,
        _as_str("divide_pipeline", p.get("pipeline_id"), "pipeline_id"),
        _as_position("divide_pipeline", p.get("click"), "click"),
    )
    return {"pipeline_a": id_a, "pipeline_b": id_b, "node_id": node_id}, []


def _h_split_node(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "split_node"
    assignment = p.get("assignment")
    if not isinstance(assignment, dict):
        raise _fail(op, "'assignment' must map object ids to subnode indices")
    offsets = p.get("offsets")
    converted_offsets = None
    if offsets is not None:
        if not isinstance(offsets, list):
            raise _fail(op, "'offsets' must be a list of [dlon, dlat]")
        converted_offsets = []
        for item in offsets:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise _fail(op, "'offsets' entries must be [dlon, dlat]")
            converted_offsets.append((float(item[0]), float(item[1])))
    subnode_ids = ops.split_node(
        ds,
        _as_str(op, p.get("node_id"), "node_id"),
        _as_int(op, p.get("subnode_count"), "subnode_count"),
        {str(k): v for k, v in assignment.items()},
        converted_offsets,
    )
    return {"subnode_ids": subnode_ids}, sorted(assignment)


def _h_change_direction(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    pid = _as_str("change_direction", p.get("pipeline_id"), "pipeline_id")
    pipe = ops.change_direction(ds, pid)
    return {"pipeline": pipeline_feature(pipe)}, [pid]


def _h_add_short_pipe(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    pipe = ops.add_short_pipe(
        ds,
        _as_str("add_short_pipe", p.get("node_a"), "node_a"),
        _as_str("add_short_pipe", p.get("node_b"), "node_b"),
    )
    return {"pipeline": pipeline_feature(pipe)}, []


def _h_reconnect(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "reconnect"
    new_node = _as_str(op, p.get("new_node"), "new_node")
    if "element_id" in p:
        element_id = _as_str(op, p.get("element_id"), "element_id")
        element = ops.reconnect_element(ds, element_id, new_node)
        return {"element": element_feature(ds, element)}, [element_id]
    pid = _as_str(op, p.get("pipeline_id"), "pipeline_id")
    endpoint = _as_str(op, p.get("endpoint"), "endpoint")
    pipe = ops.reconnect_pipeline_endpoint(ds, pid, endpoint, new_node)
    return {"pipeline": pipeline_feature(pipe)}, [pid]


def _h_move_node(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    node_id = _as_str("move_node", p.get("node_id"), "node_id")
    node = ops.move_node(ds, node_id, _as_position("move_node", p.get("position"), "position"))
    touched = sorted(pipe.id for pipe in ops.incident_pipelines(ds, node_id))
    return {"node": node_feature(node)}, [node_id, *touched]


def _h_edit_route(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    pid = _as_str("edit_route", p.get("pipeline_id"), "pipeline_id")
    pipe = ops.edit_route(ds, pid, _as_route("edit_route", p.get("route"), "route"))
    return {"pipeline": pipeline_feature(pipe)}, [pid]


def _h_delete_element(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    deleted = ops.delete_element(
        ds,
        _as_str("delete_element", p.get("id"), "id"),
        cascade=bool(p.get("cascade", False)),
    )
    return {"deleted_ids": deleted}, []


def _h_distribute_compressors(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "distribute_compressors"
    target = p.get("target")
    if isinstance(target, list):
        target = [_as_str(op, item, "target[]") for item in target]
    else:
        target = _as_str(op, target, "target")
    n = _as_int(op, p.get("n"), "n")
    if n < 1:
        raise _fail(op, "'n' must be >= 1")
    element_ids = ops.distribute_compressors(
        ds, target, n, _as_str(op, p.get("element_layer"), "element_layer")
    )
    return {"element_ids": element_ids}, []


def _h_switch_sublayer(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "switch_sublayer"
    raw_ids = p.get("pipeline_ids")
    if not isinstance(raw_ids, list) or not raw_ids:
        raise _fail(op, "'pipeline_ids' must be a non-empty list")
    pipeline_ids = [_as_str(op, item, "pipeline_ids[]") for item in raw_ids]
    moved = ops.switch_sublayer(
        ds,
        pipeline_ids,
        _as_str(op, p.get("target_sublayer"), "target_sublayer"),
        create_if_missing=bool(p.get("create_if_missing", False)),
    )
    return {"moved": moved}, sorted(set(pipeline_ids))


def _h_group_pipelines(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "group_pipelines"
    raw_ids = p.get("pipeline_ids")
    if not isinstance(raw_ids, list) or not raw_ids:
        raise _fail(op, "'pipeline_ids' must be a non-empty list")
    group = ops.group_pipelines(
        ds,
        _as_str(op, p.get("name"), "name"),
        [_as_str(op, item, "pipeline_ids[]") for item in raw_ids],
    )
    payload = {
        "group": {
            "id": group.id,
            "name": group.name,
            "member_ids": sorted(group.member_ids),
            "total_length_km": ds.group_total_length_km(group.id),
        }
    }
    return payload, sorted(group.member_ids)


def _h_add_infrastructure(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "add_infrastructure"
    placement = p.get("placement")
    if not isinstance(placement, dict):
        raise _fail(op, "'placement' must be an object")
    converted: dict[str, Any] = {}
    if "node" in placement:
        converted["node"] = _as_str(op, placement["node"], "placement.node")
    if "position" in placement:
        converted["position"] = _as_position(op, placement["position"], "placement.position")
    if "pipeline" in placement:
        converted["pipeline"] = _as_str(op, placement["pipeline"], "placement.pipeline")
    if "fraction" in placement:
        try:
            converted["fraction"] = float(placement["fraction"])
        except (TypeError, ValueError) as exc:
            raise _fail(op, "'placement.fraction' must be a number") from exc
    if "route" in placement:
        converted["route"] = _as_route(op, placement["route"], "placement.route")
    element = ops.add_infrastructure(
        ds,
        _as_str(op, p.get("layer"), "layer"),
        converted,
        _as_attrs(op, p.get("attributes"), "attributes"),
    )
    return {"element": element_feature(ds, element)}, []


def _h_define_element_type(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "define_element_type"
    raw_schema = p.get("schema") or []
    if not isinstance(raw_schema, list):
        raise _fail(op, "'schema' must be a list of {key, default} records")
    schema = []
    for record in raw_schema:
        if not isinstance(record, dict) or "key" not in record:
            raise _fail(op, "'schema' entries need a 'key'")
        schema.append((str(record["key"]), record.get("default")))
    style = p.get("style") or {}
    if not isinstance(style, dict):
        raise _fail(op, "'style' must be an object")
    try:
        kind = ElementKind(_as_str(op, p.get("kind"), "kind"))
    except ValueError:
        raise _fail(op, f"unknown element kind '{p.get('kind')}'") from None
    name = _as_str(op, p.get("name"), "name")
    cfg = define_element_type(ds, name, kind, schema, style)
    return {"config": layer_config_record(cfg)}, [name]


def _h_manage_attribute(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "manage_attribute"
    layer = _as_str(op, p.get("layer"), "layer")
    action = _as_str(op, p.get("action"), "action")
    if action not in ("add", "rename", "remove", "set_default"):
        raise _fail(op, f"unknown action '{action}'")
    count = manage_attribute(
        ds, layer, action, _as_str(op, p.get("key"), "key"), p.get("new_key_or_default")
    )
    return {"affected_count": count}, [layer]


def _h_set_element_attributes(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "set_element_attributes"
    obj_id = _as_str(op, p.get("id"), "id")
    updates = p.get("updates")
    if not isinstance(updates, dict) or not updates:
        raise _fail(op, "'updates' must be a non-empty object")
    snapshot = set_element_attributes(ds, obj_id, _as_attrs(op, updates, "updates"))
    return {"snapshot": snapshot}, [obj_id]


def _h_add_plan_overlay(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "add_plan_overlay"
    raw_pairs = p.get("pairs")
    if not isinstance(raw_pairs, list):
        raise _fail(op, "'pairs' must be a list of {pixel, world} records")
    pairs = []
    for index, record in enumerate(raw_pairs):
        if not isinstance(record, dict) or "pixel" not in record or "world" not in record:
            raise _fail(op, f"pair {index} needs 'pixel' and 'world'")
        pixel = record["pixel"]
        if not isinstance(pixel, (list, tuple)) or len(pixel) != 2:
            raise _fail(op, f"pair {index}: 'pixel' must be [px, py]")
        try:
            pairs.append(
                ControlPointPair(
                    pixel=(float(pixel[0]), float(pixel[1])),
                    world=_as_position(op, record["world"], f"pairs[{index}].world"),
                )
            )
        except ValueError as exc:
            raise _fail(op, f"pair {index}: {exc}") from exc
    opacity = p.get("opacity", 0.5)
    if not isinstance(opacity, (int, float)) or not 0.0 <= float(opacity) <= 1.0:
        raise _fail(op, "'opacity' must lie in [0, 1]")
    overlay = project.add_plan_overlay(
        ds,
        _as_str(op, p.get("image_path"), "image_path"),
        pairs,
        opacity=float(opacity),
        source_note=str(p.get("source_note", "")),
    )
    return {"overlay": overlay_record(overlay)}, []


def _h_integrate_dataset(ds: Dataset, p: dict) -> tuple[Any, list[str]]:
    op = "integrate_dataset"
    external = p.get("external")
    if not isinstance(external, dict):
        raise _fail(op, "'external' must hold feature collections")
    tolerance = p.get("snap_tolerance_km", project.DEFAULT_SNAP_TOLERANCE_KM)
    if not isinstance(tolerance, (int, float)) or tolerance <= 0:
        raise _fail(op, "'snap_tolerance_km' must be positive")
    report = project.integrate_dataset(ds, external, float(tolerance))
    return {"report": report}, sorted(local for _ext, local in report["matched"])


OPERATIONS: dict[str, Handler] = {
    "add_pipeline": _h_add_pipeline,
    "divide_pipeline": _h_divide_pipeline,
    "split_node": _h_split_node,
    "change_direction": _h_change_direction,
    "add_short_pipe": _h_add_short_pipe,
    "reconnect": _h_reconnect,
    "move_node": _h_move_node,
    "edit_route": _h_edit_route,
    "delete_element": _h_delete_element,
    "distribute_compressors": _h_distribute_compressors,
    "switch_sublayer": _h_switch_sublayer,
    "group_pipelines": _h_group_pipelines,
    "add_infrastructure": _h_add_infrastructure,
    "define_element_type": _h_define_element_type,
    "manage_attribute": _h_manage_attribute,
    "set_element_attributes": _h_set_element_attributes,
    "add_plan_overlay": _h_add_plan_overlay,
    "integrate_dataset": _h_integrate_dataset,
}


# -------------------------------------------------------------------------
# Processor
# -------------------------------------------------------------------------

def _all_ids(dataset: Dataset) -> set[str]:
    ids = (
        set(dataset.nodes)
        | set(dataset.pipelines)
        | set(dataset.elements)
        | set(dataset.groups)
    )
    ids.update(o.id for o in dataset.plan_overlays)
    return ids


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


@dataclass
class CommandResult:
    status: str
    seq: int | None = None
    payload: Any = None
    affected_ids: list[str] | None = None
    error: dict | None = None

    def as_dict(self) -> dict:
        if self.status == "ok":
            return {
                "status": "ok",
                "seq": self.seq,
                "affected_ids": self.affected_ids,
                "payload": self.payload,
            }
        return {"status": "error", "error": self.error}


class CommandProcessor:
    """Serialized, atomic command applier with an append-only journal.

    Reads may use :attr:`dataset` at any time; it is swapped wholesale on
    success, never mutated in place, so a reference taken before a command
    stays a consistent snapshot.
    """

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.lock = threading.Lock()

    @property
    def last_seq(self) -> int:
        return self.dataset.journal[-1].seq if self.dataset.journal else 0

    def _apply(self, op: str, params: dict, user: str) -> tuple[Dataset, Any, list[str]]:
        handler = OPERATIONS.get(op)
        if handler is None:
            raise UnknownOperation(f"unknown operation '{op}'")
        if not isinstance(user, str) or not user.strip():
            raise ValidationError("command requires a non-empty 'user'")
        if not isinstance(params, dict):
            raise ValidationError("command 'params' must be an object")
        working = clone_for_write(self.dataset)
        before = _all_ids(working)
        try:
            payload, modified = handler(working, params)
        except GastopoError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ValidationError(f"{op}: {exc}") from exc
        after = _all_ids(working)
        affected = sorted((after - before) | (before - after) | set(modified))
        return working, payload, affected

    def dispatch(self, envelope: dict) -> CommandResult:
        """Validate, apply and journal one command envelope."""
        with self.lock:
            try:
                working, payload, affected = self._apply(
                    envelope.get("op"), envelope.get("params", {}), envelope.get("user")
                )
            except GastopoError as exc:
                return CommandResult(
                    status="error", error={"kind": exc.kind, "message": str(exc)}
                )
            entry = JournalEntry(
                seq=self.last_seq + 1,
                timestamp=_utc_now(),
                user=envelope["user"],
                op=envelope["op"],
                params=copy.deepcopy(envelope.get("params", {})),
                affected_ids=affected,
            )
            working.journal.append(entry)
            self.dataset = working
            return CommandResult(status="ok", seq=entry.seq, payload=payload, affected_ids=affected)


def replay_journal(initial: Dataset, entries: list[JournalEntry]) -> Dataset:
    """Re-apply journal entries over an initial dataset, verbatim.

    The resulting dataset carries the original entries (timestamps included),
    so a canonical save reproduces the live project byte for byte. A failing
    entry, a sequence gap or an affected-id mismatch raises ReplayDivergence:
    the journal no longer matches the data. Tampering that touches exactly
    the same objects with the same outcome topology is caught by the caller's
    byte comparison of the canonical save, not here.
    """
    processor = CommandProcessor(copy.deepcopy(initial))
    expected_seq = processor.last_seq
    for entry in entries:
        expected_seq += 1
        if entry.seq != expected_seq:
            raise ReplayDivergence(
                f"journal sequence gap: expected {expected_seq}, found {entry.seq}"
            )
        try:
            working, _payload, affected = processor._apply(entry.op, entry.params, entry.user)
        except GastopoError as exc:
            raise ReplayDivergence(f"entry {entry.seq} ({entry.op}) failed: {exc}") from exc
        if affected != list(entry.affected_ids):
            raise ReplayDivergence(
                f"entry {entry.seq} ({entry.op}) affected {affected}, "
                f"journal says {entry.affected_ids}"
            )
        working.journal.append(entry)
        processor.dataset = working
    return processor.dataset
