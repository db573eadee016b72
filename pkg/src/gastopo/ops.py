"""Dataset-modifying tools that preserve graph-reference integrity.

Every function validates its preconditions before touching the dataset.
Compound operations (divide, split, distribute) are made atomic by the
command applier in :mod:`gastopo.commands`, which works on a copy and swaps
on success; called directly, they raise before mutating in all single-step
cases.
"""

from __future__ import annotations

from .errors import (
    AlreadyGrouped,
    DuplicateShortPipe,
    EndpointMismatch,
    IncompleteAssignment,
    InvalidGeometry,
    InvalidSubnodeIndex,
    NodeInUse,
    NotAChain,
    PlacementKindMismatch,
    SelfLoop,
    ShortPipeNotDividable,
    SplitAtEndpoint,
    UnknownId,
    UnknownLayer,
    UnknownSublayer,
)
from .geomath import (
    gc_interpolate,
    haversine_km,
    point_along_polyline,
    polyline_length_km,
    project_point_to_polyline,
)
from .model import (
    AttrMap,
    Dataset,
    ElementKind,
    GeoPosition,
    InfrastructureElement,
    LayerConfig,
    Node,
    Pipeline,
    PipelineGroup,
    apply_schema_defaults,
    positions_equal,
)

# Endpoints this close to the chosen node (degrees, per coordinate) are
# snapped exactly; farther mismatches are errors, preventing silent drift.
SNAP_TOLERANCE_DEG = 1e-6

# Distribute-compressor boundaries this close to an existing node reuse it.
NODE_REUSE_TOLERANCE_KM = 1e-6

_SUBLAYER_PALETTE = (
    "#c0392b",
    "#2e86c1",
    "#27ae60",
    "#8e44ad",
    "#d35400",
    "#16a085",
    "#7f8c8d",
)


# -------------------------------------------------------------------------
# Graph helpers
# -------------------------------------------------------------------------

def incident_pipelines(dataset: Dataset, node_id: str) -> list[Pipeline]:
    return [
        p
        for p in dataset.pipelines.values()
        if p.start_node == node_id or p.end_node == node_id
    ]


def attached_elements(dataset: Dataset, node_id: str) -> list[InfrastructureElement]:
    return [
        e
        for e in dataset.elements.values()
        if e.kind == ElementKind.NODE_ATTACHED and e.node_ref == node_id
    ]


def node_degree(dataset: Dataset, node_id: str) -> int:
    degree = 0
    for p in dataset.pipelines.values():
        if p.start_node == node_id:
            degree += 1
        if p.end_node == node_id:
            degree += 1
    return degree


def rendered_position(dataset: Dataset, element: InfrastructureElement) -> GeoPosition | None:
    """Map position of an element; None for line elements (they have routes)."""
    if element.kind == ElementKind.NODE_ATTACHED:
        return dataset.nodes[element.node_ref].position
    if element.kind == ElementKind.POINT:
        return element.position
    if element.kind == ElementKind.IN_LINE:
        pipe = dataset.pipelines[element.pipeline_ref]
        total = polyline_length_km(pipe.route)
        if total <= 0.0:
            return pipe.route[0]
        return point_along_polyline(pipe.route, element.position_fraction * total)[2]
    return None


def ensure_pipeline_sublayer(dataset: Dataset, name: str) -> LayerConfig:
    """LayerConfig for a pipeline sublayer, created with a palette color if new."""
    cfg = dataset.layer_config(name)
    if cfg is not None:
        return cfg
    existing = sum(1 for c in dataset.layer_configs if c.sublayer_of == "pipelines")
    cfg = LayerConfig(
        layer=name,
        kind="pipeline",
        legend_label=name,
        color=_SUBLAYER_PALETTE[existing % len(_SUBLAYER_PALETTE)],
        marker="line",
        sublayer_of="pipelines",
    )
    dataset.layer_configs.append(cfg)
    return cfg


def _require_node(dataset: Dataset, node_id: str) -> Node:
    node = dataset.nodes.get(node_id)
    if node is None:
        raise UnknownId(f"no node with id '{node_id}'")
    return node


def _require_pipeline(dataset: Dataset, pipeline_id: str) -> Pipeline:
    pipe = dataset.pipelines.get(pipeline_id)
    if pipe is None:
        raise UnknownId(f"no pipeline with id '{pipeline_id}'")
    return pipe


def _validate_route(route: list[GeoPosition]) -> None:
    if len(route) < 2:
        raise InvalidGeometry("route needs at least 2 points")
    for i in range(len(route) - 1):
        if route[i] == route[i + 1]:
            raise InvalidGeometry(f"duplicate consecutive route points at index {i}")


def _recompute_length(pipe: Pipeline) -> None:
    pipe.length_km = 0.0 if pipe.is_short_pipe else polyline_length_km(pipe.route)


def _new_node(dataset: Dataset, position: GeoPosition, name: str | None = None) -> Node:
    node_id = dataset.next_id("node")
    node = Node(
        id=node_id,
        name=name or node_id,
        position=position,
        attributes=apply_schema_defaults(dataset, "nodes"),
    )
    dataset.nodes[node_id] = node
    return node


# -------------------------------------------------------------------------
# Pipeline creation and geometry
# -------------------------------------------------------------------------

def add_pipeline(
    dataset: Dataset,
    route: list[GeoPosition],
    start: str,
    end: str,
    sublayer: str,
    attributes: AttrMap | None = None,
) -> Pipeline:
    """Create a pipeline; ``start``/``end`` are node ids or the literal "new".

    Route endpoints within the snap tolerance of an existing endpoint node are
    snapped onto it exactly; new endpoints materialize nodes at the route ends.
    """
    _validate_route(route)
    route = list(route)

    def resolve(which: str, index: int) -> Node:
        if which == "new":
            return _new_node(dataset, route[index])
        node = _require_node(dataset, which)
        if not positions_equal(node.position, route[index], SNAP_TOLERANCE_DEG):
            raise InvalidGeometry(
                f"route endpoint {route[index]} too far from node '{which}'"
            )
        route[index] = node.position
        return node

    start_node = resolve(start, 0)
    end_node = resolve(end, -1)
    if start_node.id == end_node.id:
        raise SelfLoop("pipeline start and end node are identical")

    ensure_pipeline_sublayer(dataset, sublayer)
    pipe = Pipeline(
        id=dataset.next_id("pipe"),
        start_node=start_node.id,
        end_node=end_node.id,
        route=route,
        length_km=polyline_length_km(route),
        sublayer=sublayer,
        attributes=apply_schema_defaults(dataset, "pipelines", attributes),
    )
    dataset.pipelines[pipe.id] = pipe
    return pipe


def change_direction(dataset: Dataset, pipeline_id: str) -> Pipeline:
    """Invert flow direction: endpoints swapped, route reversed, length kept."""
    pipe = _require_pipeline(dataset, pipeline_id)
    pipe.start_node, pipe.end_node = pipe.end_node, pipe.start_node
    pipe.route.reverse()
    return pipe


def add_short_pipe(dataset: Dataset, node_a: str, node_b: str) -> Pipeline:
    """Lossless zero-length connector between two distinct nodes."""
    if node_a == node_b:
        raise SelfLoop("short-pipe endpoints must differ")
    a = _require_node(dataset, node_a)
    b = _require_node(dataset, node_b)
    for p in dataset.pipelines.values():
        if p.is_short_pipe and {p.start_node, p.end_node} == {node_a, node_b}:
            raise DuplicateShortPipe(f"short-pipe '{p.id}' already connects these nodes")
    ensure_pipeline_sublayer(dataset, "short_pipe")
    pipe = Pipeline(
        id=dataset.next_id("pipe"),
        start_node=a.id,
        end_node=b.id,
        route=[a.position, b.position],
        length_km=0.0,
        is_short_pipe=True,
        sublayer="short_pipe",
        attributes=apply_schema_defaults(dataset, "pipelines"),
    )
    dataset.pipelines[pipe.id] = pipe
    return pipe


def move_node(dataset: Dataset, node_id: str, new_position: GeoPosition) -> Node:
    """Reposition a node; incident pipelines follow, incidence sets unchanged."""
    node = _require_node(dataset, node_id)
    node.position = new_position
    for pipe in incident_pipelines(dataset, node_id):
        if pipe.start_node == node_id:
            pipe.route[0] = new_position
        if pipe.end_node == node_id:
            pipe.route[-1] = new_position
        _recompute_length(pipe)
    return node


def edit_route(dataset: Dataset, pipeline_id: str, new_route: list[GeoPosition]) -> Pipeline:
    """Replace a pipeline route; endpoints must stay on the endpoint nodes."""
    pipe = _require_pipeline(dataset, pipeline_id)
    _validate_route(new_route)
    if pipe.is_short_pipe and len(new_route) != 2:
        raise InvalidGeometry("short-pipe routes have exactly 2 points")
    start_pos = dataset.nodes[pipe.start_node].position
    end_pos = dataset.nodes[pipe.end_node].position
    if not positions_equal(new_route[0], start_pos):
        raise EndpointMismatch("first route vertex must equal the start node position")
    if not positions_equal(new_route[-1], end_pos):
        raise EndpointMismatch("last route vertex must equal the end node position")
    pipe.route = [start_pos, *new_route[1:-1], end_pos]
    _recompute_length(pipe)
    return pipe


def reconnect_pipeline_endpoint(
    dataset: Dataset, pipeline_id: str, which: str, new_node: str
) -> Pipeline:
    """Move one pipeline endpoint to another node."""
    pipe = _require_pipeline(dataset, pipeline_id)
    node = _require_node(dataset, new_node)
    if which not in ("start", "end"):
        raise UnknownId(f"endpoint designator must be 'start' or 'end', got '{which}'")
    opposite = pipe.end_node if which == "start" else pipe.start_node
    if opposite == new_node:
        raise SelfLoop("reconnect would create a self-loop")
    if which == "start":
        pipe.start_node = new_node
        pipe.route[0] = node.position
    else:
        pipe.end_node = new_node
        pipe.route[-1] = node.position
    _recompute_length(pipe)
    return pipe


def reconnect_element(dataset: Dataset, element_id: str, new_node: str) -> InfrastructureElement:
    """Re-reference a node-attached element to another node."""
    element = dataset.elements.get(element_id)
    if element is None:
        raise UnknownId(f"no element with id '{element_id}'")
    if element.kind != ElementKind.NODE_ATTACHED:
        raise PlacementKindMismatch("only node-attached elements can be reconnected")
    _require_node(dataset, new_node)
    element.node_ref = new_node
    return element


# -------------------------------------------------------------------------
# Divide / split
# -------------------------------------------------------------------------

def _split_route(
    route: list[GeoPosition], segment_index: int, t: float
) -> tuple[list[GeoPosition], list[GeoPosition], GeoPosition]:
    """Split a route at (segment, t); raises SplitAtEndpoint on terminal hits."""
    last_segment = len(route) - 2
    if t >= 1.0:
        vertex = segment_index + 1
        if vertex >= len(route) - 1:
            raise SplitAtEndpoint("split point coincides with the end node")
        return route[: vertex + 1], route[vertex:], route[vertex]
    if t <= 0.0:
        vertex = segment_index
        if vertex == 0:
            raise SplitAtEndpoint("split point coincides with the start node")
        return route[: vertex + 1], route[vertex:], route[vertex]
    position = gc_interpolate(route[segment_index], route[segment_index + 1], t)
    route_a = route[: segment_index + 1] + [position]
    route_b = [position] + route[segment_index + 1 :]
    return route_a, route_b, position


def _divide_at(
    dataset: Dataset, pipe: Pipeline, segment_index: int, t: float
) -> tuple[str, str, str]:
    """Core division: fresh _a/_b pipelines, split node, in-line reassignment."""
    route_a, route_b, split_pos = _split_route(pipe.route, segment_index, t)
    node = _new_node(dataset, split_pos)

    id_a = dataset.fresh_suffixed_id(pipe.id, "_a")
    id_b = dataset.fresh_suffixed_id(pipe.id, "_b")
    part_a = Pipeline(
        id=id_a,
        start_node=pipe.start_node,
        end_node=node.id,
        route=route_a,
        length_km=polyline_length_km(route_a),
        sublayer=pipe.sublayer,
        group_id=pipe.group_id,
        attributes=dict(pipe.attributes),
    )
    part_b = Pipeline(
        id=id_b,
        start_node=node.id,
        end_node=pipe.end_node,
        route=route_b,
        length_km=polyline_length_km(route_b),
        sublayer=pipe.sublayer,
        group_id=pipe.group_id,
        attributes=dict(pipe.attributes),
    )

    total = polyline_length_km(pipe.route)
    for element in dataset.elements.values():
        if element.kind == ElementKind.IN_LINE and element.pipeline_ref == pipe.id:
            arc = element.position_fraction * total
            if arc <= part_a.length_km:
                element.pipeline_ref = id_a
                element.position_fraction = (
                    arc / part_a.length_km if part_a.length_km > 0 else 0.0
                )
            else:
                element.pipeline_ref = id_b
                element.position_fraction = min(
                    1.0,
                    (arc - part_a.length_km) / part_b.length_km if part_b.length_km > 0 else 1.0,
                )

    if pipe.group_id is not None:
        group = dataset.groups[pipe.group_id]
        group.member_ids.discard(pipe.id)
        group.member_ids.update((id_a, id_b))

    del dataset.pipelines[pipe.id]
    dataset.pipelines[id_a] = part_a
    dataset.pipelines[id_b] = part_b
    return id_a, id_b, node.id


def divide_pipeline(dataset: Dataset, pipeline_id: str, click: GeoPosition) -> tuple[str, str, str]:
    """Subdivide a pipeline at the click's projection; returns (a, b, node)."""
    pipe = _require_pipeline(dataset, pipeline_id)
    if pipe.is_short_pipe:
        raise ShortPipeNotDividable(f"'{pipeline_id}' is a short-pipe")
    projection = project_point_to_polyline(click, pipe.route)
    return _divide_at(dataset, pipe, projection.segment_index, projection.t)


def split_node(
    dataset: Dataset,
    node_id: str,
    subnode_count: int,
    assignment: dict[str, int],
    offsets: list[tuple[float, float]] | None = None,
) -> list[str]:
    """Split a node into subnodes, rewiring incidents per the assignment.

    ``assignment`` maps every incident pipeline id and attached element id to a
    subnode index in [0, subnode_count). Subnodes left without incidents are
    permitted; the topology checker will flag them. ``offsets`` optionally
    displaces each subnode by (dlon, dlat) degrees.
    """
    node = _require_node(dataset, node_id)
    if subnode_count < 2:
        raise InvalidSubnodeIndex("subnode count must be at least 2")
    if offsets is not None and len(offsets) != subnode_count:
        raise InvalidSubnodeIndex("offsets must list one displacement per subnode")

    incidents = {p.id for p in incident_pipelines(dataset, node_id)}
    attached = {e.id for e in attached_elements(dataset, node_id)}
    expected = incidents | attached
    missing = expected - set(assignment)
    if missing:
        raise IncompleteAssignment(f"unassigned incidents: {sorted(missing)}")
    extra = set(assignment) - expected
    if extra:
        raise IncompleteAssignment(f"not incident to '{node_id}': {sorted(extra)}")
    for obj_id, index in assignment.items():
        if not isinstance(index, int) or not 0 <= index < subnode_count:
            raise InvalidSubnodeIndex(f"subnode index {index!r} for '{obj_id}'")

    subnodes: list[Node] = []
    for i in range(subnode_count):
        if offsets is not None:
            dlon, dlat = offsets[i]
            position = GeoPosition(node.position.lon + dlon, node.position.lat + dlat)
        else:
            position = node.position
        sub = _new_node(dataset, position, name=f"{node.name}_{i}")
        sub.attributes = dict(node.attributes)
        subnodes.append(sub)

    for pid in sorted(incidents):
        pipe = dataset.pipelines[pid]
        sub = subnodes[assignment[pid]]
        if pipe.start_node == node_id:
            pipe.start_node = sub.id
            pipe.route[0] = sub.position
        if pipe.end_node == node_id:
            pipe.end_node = sub.id
            pipe.route[-1] = sub.position
        _recompute_length(pipe)
    for eid in sorted(attached):
        dataset.elements[eid].node_ref = subnodes[assignment[eid]].id

    del dataset.nodes[node_id]
    return [s.id for s in subnodes]


# -------------------------------------------------------------------------
# Deletion
# -------------------------------------------------------------------------

def _delete_pipeline(dataset: Dataset, pipeline_id: str) -> list[str]:
    pipe = dataset.pipelines[pipeline_id]
    deleted: list[str] = []
    inline = sorted(
        e.id
        for e in dataset.elements.values()
        if e.kind == ElementKind.IN_LINE and e.pipeline_ref == pipeline_id
    )
    for eid in inline:
        del dataset.elements[eid]
        deleted.append(eid)
    if pipe.group_id is not None:
        group = dataset.groups.get(pipe.group_id)
        if group is not None:
            group.member_ids.discard(pipeline_id)
            if not group.member_ids:
                del dataset.groups[group.id]
    del dataset.pipelines[pipeline_id]
    deleted.append(pipeline_id)
    return deleted


def delete_element(dataset: Dataset, obj_id: str, cascade: bool = False) -> list[str]:
    """Delete a node, pipeline, element or group; returns all deleted ids.

    Nodes with incident pipelines or attached elements require ``cascade``;
    dependents then delete first. Deleting a group only dissolves the
    grouping, not its members.
    """
    if obj_id in dataset.pipelines:
        return _delete_pipeline(dataset, obj_id)

    if obj_id in dataset.elements:
        del dataset.elements[obj_id]
        return [obj_id]

    if obj_id in dataset.groups:
        group = dataset.groups.pop(obj_id)
        for pid in group.member_ids:
            member = dataset.pipelines.get(pid)
            if member is not None:
                member.group_id = None
        return [obj_id]

    if obj_id in dataset.nodes:
        pipelines = sorted(p.id for p in incident_pipelines(dataset, obj_id))
        elements = sorted(e.id for e in attached_elements(dataset, obj_id))
        if (pipelines or elements) and not cascade:
            raise NodeInUse(
                f"node '{obj_id}' has {len(pipelines)} pipeline(s) and "
                f"{len(elements)} attached element(s); use cascade"
            )
        deleted: list[str] = []
        for pid in pipelines:
            deleted.extend(_delete_pipeline(dataset, pid))
        for eid in elements:
            del dataset.elements[eid]
            deleted.append(eid)
        del dataset.nodes[obj_id]
        deleted.append(obj_id)
        return deleted

    raise UnknownId(f"no object with id '{obj_id}'")


# -------------------------------------------------------------------------
# Layers, groups, infrastructure
# -------------------------------------------------------------------------

def switch_sublayer(
    dataset: Dataset,
    pipeline_ids: list[str],
    target_sublayer: str,
    create_if_missing: bool = False,
) -> int:
    """Rewrite the sublayer label on pipelines; graph and geometry untouched."""
    pipes = [_require_pipeline(dataset, pid) for pid in pipeline_ids]
    if dataset.layer_config(target_sublayer) is None:
        if not create_if_missing:
            raise UnknownSublayer(f"sublayer '{target_sublayer}' does not exist")
        ensure_pipeline_sublayer(dataset, target_sublayer)
    for pipe in pipes:
        pipe.sublayer = target_sublayer
    return len(pipes)


def group_pipelines(dataset: Dataset, name: str, pipeline_ids: list[str]) -> PipelineGroup:
    """Aggregate pipelines into a named group (one group per pipeline)."""
    seen: list[str] = []
    for pid in pipeline_ids:
        pipe = _require_pipeline(dataset, pid)
        if pipe.group_id is not None:
            raise AlreadyGrouped(f"pipeline '{pid}' already belongs to '{pipe.group_id}'")
        if pid not in seen:
            seen.append(pid)
    if not seen:
        raise UnknownId("a group needs at least one pipeline")
    group = PipelineGroup(id=dataset.next_id("group"), name=name, member_ids=set(seen))
    dataset.groups[group.id] = group
    for pid in seen:
        dataset.pipelines[pid].group_id = group.id
    return group


def add_infrastructure(
    dataset: Dataset,
    layer: str,
    placement: dict,
    attributes: AttrMap | None = None,
) -> InfrastructureElement:
    """Place an infrastructure element; the placement form must match the
    layer's element kind: {"node": id} | {"position": GeoPosition} |
    {"pipeline": id, "fraction": f} | {"route": [GeoPosition, ...]}.
    """
    cfg = dataset.layer_config(layer)
    if cfg is None:
        raise UnknownLayer(f"layer '{layer}' does not exist")
    try:
        kind = ElementKind(cfg.kind)
    except ValueError:
        raise PlacementKindMismatch(f"'{layer}' is not an element layer") from None

    element = InfrastructureElement(
        id=dataset.next_id(layer),
        layer=layer,
        kind=kind,
        attributes=apply_schema_defaults(dataset, layer, attributes),
    )
    if kind == ElementKind.NODE_ATTACHED:
        if "node" not in placement:
            raise PlacementKindMismatch(f"layer '{layer}' needs a node placement")
        element.node_ref = _require_node(dataset, placement["node"]).id
    elif kind == ElementKind.POINT:
        if "position" not in placement:
            raise PlacementKindMismatch(f"layer '{layer}' needs a point placement")
        element.position = placement["position"]
    elif kind == ElementKind.IN_LINE:
        if "pipeline" not in placement or "fraction" not in placement:
            raise PlacementKindMismatch(f"layer '{layer}' needs pipeline + fraction")
        pipe = _require_pipeline(dataset, placement["pipeline"])
        fraction = float(placement["fraction"])
        if not 0.0 <= fraction <= 1.0:
            raise PlacementKindMismatch("position fraction must lie in [0, 1]")
        element.pipeline_ref = pipe.id
        element.position_fraction = fraction
    else:  # line
        if "route" not in placement:
            raise PlacementKindMismatch(f"layer '{layer}' needs a route placement")
        route = list(placement["route"])
        _validate_route(route)
        element.route = route

    dataset.elements[element.id] = element
    return element


# -------------------------------------------------------------------------
# Distribute compressors
# -------------------------------------------------------------------------

def _resolve_chain(
    dataset: Dataset, target: str | list[str]
) -> list[tuple[str, bool]]:
    """Order pipelines as a path; returns (pipeline id, reversed?) per hop.

    ``reversed?`` is True when traversal runs against the pipeline's route
    direction. Raises NotAChain unless the pipelines form one simple path.
    """
    if isinstance(target, str):
        group = dataset.groups.get(target)
        if group is None:
            raise UnknownId(f"no group with id '{target}'")
        member_ids = sorted(group.member_ids)
        ordered_hint = None
    else:
        member_ids = list(dict.fromkeys(target))
        ordered_hint = member_ids
    if not member_ids:
        raise NotAChain("no pipelines given")
    pipes = {pid: _require_pipeline(dataset, pid) for pid in member_ids}

    adjacency: dict[str, list[str]] = {}
    for pid, pipe in pipes.items():
        adjacency.setdefault(pipe.start_node, []).append(pid)
        adjacency.setdefault(pipe.end_node, []).append(pid)
    odd = sorted(n for n, ps in adjacency.items() if len(ps) == 1)
    if len(member_ids) == 1:
        ends = [pipes[member_ids[0]].start_node]
    elif len(odd) == 2 and all(len(ps) <= 2 for ps in adjacency.values()):
        ends = odd
    else:
        raise NotAChain("pipelines do not form a single simple path")

    if ordered_hint is not None and len(ordered_hint) > 1:
        # start from the free end of the first listed pipeline
        first = pipes[ordered_hint[0]]
        start = first.start_node if first.start_node in ends else first.end_node
        if start not in ends:
            start = ends[0]
    else:
        start = ends[0]

    chain: list[tuple[str, bool]] = []
    current, remaining = start, set(member_ids)
    while remaining:
        next_pid = None
        for pid in sorted(remaining):
            pipe = pipes[pid]
            if pipe.start_node == current:
                next_pid, reverse, current = pid, False, pipe.end_node
                break
            if pipe.end_node == current:
                next_pid, reverse, current = pid, True, pipe.start_node
                break
        if next_pid is None:
            raise NotAChain("pipelines do not form a connected path")
        chain.append((next_pid, reverse))
        remaining.discard(next_pid)
    return chain


def distribute_compressors(
    dataset: Dataset,
    target: str | list[str],
    n: int,
    element_layer: str,
) -> list[str]:
    """Place n compressors at equal arc-length boundaries along a chain.

    The chain's total length splits into n+1 equal arcs; each interior
    boundary divides the containing pipeline and attaches one node-attached
    element, reusing an existing node when the boundary lands on one.
    """
    if n < 1:
        raise ValueError("compressor count must be at least 1")
    cfg = dataset.layer_config(element_layer)
    if cfg is None:
        raise UnknownLayer(f"layer '{element_layer}' does not exist")
    if cfg.kind != ElementKind.NODE_ATTACHED.value:
        raise PlacementKindMismatch(f"layer '{element_layer}' must be node-attached")

    chain = _resolve_chain(dataset, target)
    total = sum(dataset.pipelines[pid].length_km for pid, _ in chain)
    if total <= 0.0:
        raise NotAChain("chain has zero length")

    created: list[str] = []
    for j in range(1, n + 1):
        boundary = j * total / (n + 1)
        # walk the current chain state to locate the boundary
        cursor = 0.0
        node_id: str | None = None
        for index, (pid, reverse) in enumerate(chain):
            pipe = dataset.pipelines[pid]
            near_node = pipe.end_node if reverse else pipe.start_node
            far_node = pipe.start_node if reverse else pipe.end_node
            if index == 0 and abs(boundary - cursor) <= NODE_REUSE_TOLERANCE_KM:
                node_id = near_node
                break
            segment_end = cursor + pipe.length_km
            if abs(boundary - segment_end) <= NODE_REUSE_TOLERANCE_KM:
                node_id = far_node
                break
            if boundary < segment_end:
                local = boundary - cursor
                if reverse:
                    local = pipe.length_km - local
                seg, t, _pos = point_along_polyline(pipe.route, local)
                id_a, id_b, node_id = _divide_at(dataset, pipe, seg, t)
                first, second = ((id_b, True), (id_a, True)) if reverse else (
                    (id_a, False),
                    (id_b, False),
                )
                chain[index : index + 1] = [first, second]
                break
            cursor = segment_end
        if node_id is None:  # numeric spill past the far end: reuse it
            last_pid, last_reverse = chain[-1]
            last_pipe = dataset.pipelines[last_pid]
            node_id = last_pipe.start_node if last_reverse else last_pipe.end_node
        element = add_infrastructure(dataset, element_layer, {"node": node_id})
        created.append(element.id)
    return created
