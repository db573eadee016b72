"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
lines. Tolerances and runtime budgets are fixed here and nowhere else.
"""

from __future__ import annotations

import copy
import json
import random
import time

import mpmath as mp
import pytest
from fastapi.testclient import TestClient

from conftest import (
    PLAN_PAIRS,
    assert_graph_invariants,
    dispatch_ok,
    random_position,
    run_multicarrier_workflow,
)
from gastopo import ops
from gastopo.commands import CommandProcessor, replay_journal
from gastopo.errors import DegenerateControlPoints, ReplayDivergence
from gastopo.geomath import (
    EARTH_RADIUS_KM,
    AffineTransform,
    ControlPointPair,
    apply_affine,
    haversine_km,
    point_along_polyline,
    polyline_length_km,
    solve_affine,
)
from gastopo.model import (
    Dataset,
    ElementKind,
    GeoPosition,
    Node,
    define_element_type,
    new_dataset,
)
from gastopo.project import load_project, save_project
from gastopo.sample import build_sample_dataset
from gastopo.serialize import content_payload
from gastopo.service import create_app
from gastopo.validation import topology_check

mp.mp.dps = 50


def _report(line: str) -> None:
    print(f"\nACCEPTANCE PASS: {line}")


# -------------------------------------------------------------------------
# 1. Geodesy oracle
# -------------------------------------------------------------------------

def _mp_sphere_distance_km(a: GeoPosition, b: GeoPosition) -> float:
    l1, p1 = mp.radians(mp.mpf(repr(a.lon))), mp.radians(mp.mpf(repr(a.lat)))
    l2, p2 = mp.radians(mp.mpf(repr(b.lon))), mp.radians(mp.mpf(repr(b.lat)))
    dl = l2 - l1
    y = mp.sqrt(
        (mp.cos(p2) * mp.sin(dl)) ** 2
        + (mp.cos(p1) * mp.sin(p2) - mp.sin(p1) * mp.cos(p2) * mp.cos(dl)) ** 2
    )
    x = mp.sin(p1) * mp.sin(p2) + mp.cos(p1) * mp.cos(p2) * mp.cos(dl)
    return float(mp.mpf(repr(EARTH_RADIUS_KM)) * mp.atan2(y, x))


def test_geodesy_oracle():
    started = time.perf_counter()
    rng = random.Random(815)
    for _ in range(1000):
        a = GeoPosition(rng.uniform(-180, 180), rng.uniform(-90, 90))
        b = GeoPosition(rng.uniform(-180, 180), rng.uniform(-90, 90))
        expected = _mp_sphere_distance_km(a, b)
        got = haversine_km(a, b)
        assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)
    meridian_degree = haversine_km(GeoPosition(0.0, 0.0), GeoPosition(0.0, 1.0))
    assert abs(meridian_degree - 111.1949266) <= 1e-6
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"geodesy oracle took {elapsed:.2f}s"
    _report(
        f"geodesy: 1000 pairs within 1e-9 of the high-precision oracle; "
        f"1 deg meridian = {meridian_degree:.7f} km ({elapsed:.2f}s)"
    )


# -------------------------------------------------------------------------
# 2. Topology property suite (randomized soak)
# -------------------------------------------------------------------------

def _build_soak_fixture(seed: int) -> Dataset:
    rng = random.Random(seed)
    ds = new_dataset()
    ds.schemas["nodes"] = [("source", "synthetic")]
    ds.schemas["pipelines"] = [("source", "synthetic")]
    define_element_type(
        ds, "compressors", ElementKind.NODE_ATTACHED, schema=[("capacity_mw", None)]
    )
    for i in range(1, 51):
        position = random_position(rng)
        ds.nodes[f"node_{i}"] = Node(
            id=f"node_{i}", name=f"node_{i}", position=position,
            attributes={"source": "synthetic"},
        )
    node_ids = sorted(ds.nodes)
    built = 0
    while built < 70:
        a, b = rng.sample(node_ids, 2)
        pa, pb = ds.nodes[a].position, ds.nodes[b].position
        interior = [
            GeoPosition(
                (pa.lon + pb.lon) / 2 + rng.uniform(-0.2, 0.2),
                (pa.lat + pb.lat) / 2 + rng.uniform(-0.2, 0.2),
            )
            for _ in range(rng.randint(0, 2))
        ]
        ops.add_pipeline(ds, [pa, *interior, pb], a, b, rng.choice(["natural_gas", "hydrogen"]))
        built += 1
    return ds


class _SoakDriver:
    """Generates valid random commands and checks the invariants after each."""

    SUBLAYERS = ["natural_gas", "hydrogen", "co2", "retrofit"]

    def __init__(self, processor: CommandProcessor, rng: random.Random):
        self.processor = processor
        self.rng = rng
        self.op_counts: dict[str, int] = {}

    @property
    def ds(self) -> Dataset:
        return self.processor.dataset

    def _pipes(self, *, short_ok=True, min_length=0.0):
        return [
            p
            for p in self.ds.pipelines.values()
            if (short_ok or not p.is_short_pipe) and p.length_km >= min_length
        ]

    def run_one(self) -> None:
        makers = [
            (self._cmd_move_node, 14),
            (self._cmd_edit_route, 10),
            (self._cmd_change_direction, 12),
            (self._cmd_divide, 10),
            (self._cmd_split_node, 8),
            (self._cmd_add_pipeline, 8),
            (self._cmd_add_short_pipe, 5),
            (self._cmd_reconnect, 8),
            (self._cmd_delete, 6),
            (self._cmd_switch_sublayer, 6),
            (self._cmd_group, 4),
            (self._cmd_set_attributes, 5),
            (self._cmd_add_infrastructure, 4),
            (self._cmd_distribute, 2),
        ]
        weights = [w for _, w in makers]
        while True:
            maker = self.rng.choices([m for m, _ in makers], weights=weights)[0]
            prepared = maker()
            if prepared is not None:
                break
        op, params, check = prepared
        result = dispatch_ok(self.processor, op, params, user="soak")
        self.op_counts[op] = self.op_counts.get(op, 0) + 1
        assert_graph_invariants(self.ds)
        if check is not None:
            check(result)

    # --- command makers; return None when no valid target exists ---------

    def _cmd_move_node(self):
        node_id = self.rng.choice(sorted(self.ds.nodes))
        position = random_position(self.rng)
        return "move_node", {"node_id": node_id, "position": [position.lon, position.lat]}, None

    def _cmd_edit_route(self):
        candidates = self._pipes(short_ok=False)
        if not candidates:
            return None
        pipe = self.rng.choice(sorted(candidates, key=lambda p: p.id))
        start, end = pipe.route[0], pipe.route[-1]
        mid = GeoPosition(
            (start.lon + end.lon) / 2 + self.rng.uniform(-0.1, 0.1),
            (start.lat + end.lat) / 2 + self.rng.uniform(-0.1, 0.1),
        )
        route = [[start.lon, start.lat], [mid.lon, mid.lat], [end.lon, end.lat]]
        return "edit_route", {"pipeline_id": pipe.id, "route": route}, None

    def _cmd_change_direction(self):
        pipe = self.rng.choice(sorted(self.ds.pipelines))
        return "change_direction", {"pipeline_id": pipe}, None

    def _cmd_divide(self):
        candidates = self._pipes(short_ok=False, min_length=0.05)
        if not candidates:
            return None
        pipe = self.rng.choice(sorted(candidates, key=lambda p: p.id))
        total = polyline_length_km(pipe.route)
        _seg, _t, click = point_along_polyline(
            pipe.route, total * self.rng.uniform(0.15, 0.85)
        )
        original_length = pipe.length_km

        def check(result):
            a = self.ds.pipelines[result.payload["pipeline_a"]]
            b = self.ds.pipelines[result.payload["pipeline_b"]]
            defect = abs(a.length_km + b.length_km - original_length) / original_length
            assert defect <= 1e-9, f"additivity defect {defect}"

        return "divide_pipeline", {"pipeline_id": pipe.id, "click": [click.lon, click.lat]}, check

    def _cmd_split_node(self):
        degrees = {
            nid: ops.node_degree(self.ds, nid)
            for nid in self.ds.nodes
        }
        candidates = sorted(nid for nid, d in degrees.items() if d >= 1)
        if not candidates:
            return None
        node_id = self.rng.choice(candidates)
        incidents = [p.id for p in ops.incident_pipelines(self.ds, node_id)]
        attached = [e.id for e in ops.attached_elements(self.ds, node_id)]
        k = self.rng.randint(2, 3)
        assignment = {obj: self.rng.randrange(k) for obj in incidents + attached}
        degree_before = degrees[node_id]

        def check(result):
            total = sum(
                ops.node_degree(self.ds, sub) for sub in result.payload["subnode_ids"]
            )
            assert total == degree_before, "degree not conserved by split_node"

        return (
            "split_node",
            {"node_id": node_id, "subnode_count": k, "assignment": assignment},
            check,
        )

    def _cmd_add_pipeline(self):
        if self.rng.random() < 0.5:
            a, b = self.rng.sample(sorted(self.ds.nodes), 2)
            pa, pb = self.ds.nodes[a].position, self.ds.nodes[b].position
            route = [[pa.lon, pa.lat], [pb.lon, pb.lat]]
            if route[0] == route[1]:
                return None
            params = {"route": route, "start": a, "end": b}
        else:
            pa, pb = random_position(self.rng), random_position(self.rng)
            if (pa.lon, pa.lat) == (pb.lon, pb.lat):
                return None
            params = {
                "route": [[pa.lon, pa.lat], [pb.lon, pb.lat]],
                "start": "new",
                "end": "new",
            }
        params["sublayer"] = self.rng.choice(self.SUBLAYERS)
        return "add_pipeline", params, None

    def _cmd_add_short_pipe(self):
        existing = {
            frozenset((p.start_node, p.end_node))
            for p in self.ds.pipelines.values()
            if p.is_short_pipe
        }
        node_ids = sorted(self.ds.nodes)
        for _ in range(10):
            a, b = self.rng.sample(node_ids, 2)
            if frozenset((a, b)) not in existing:
                return "add_short_pipe", {"node_a": a, "node_b": b}, None
        return None

    def _cmd_reconnect(self):
        pipes = sorted(self.ds.pipelines)
        pipe = self.ds.pipelines[self.rng.choice(pipes)]
        which = self.rng.choice(["start", "end"])
        opposite = pipe.end_node if which == "start" else pipe.start_node
        options = [n for n in sorted(self.ds.nodes) if n != opposite]
        if not options:
            return None
        return (
            "reconnect",
            {"pipeline_id": pipe.id, "endpoint": which, "new_node": self.rng.choice(options)},
            None,
        )

    def _cmd_delete(self):
        if len(self.ds.pipelines) <= 40:
            return None
        if self.ds.elements and self.rng.random() < 0.35:
            return (
                "delete_element",
                {"id": self.rng.choice(sorted(self.ds.elements))},
                None,
            )
        if self.rng.random() < 0.4 and len(self.ds.nodes) > 30:
            node_id = self.rng.choice(sorted(self.ds.nodes))
            return "delete_element", {"id": node_id, "cascade": True}, None
        return "delete_element", {"id": self.rng.choice(sorted(self.ds.pipelines))}, None

    def _cmd_switch_sublayer(self):
        pipes = sorted(self.ds.pipelines)
        chosen = self.rng.sample(pipes, min(len(pipes), self.rng.randint(1, 3)))
        return (
            "switch_sublayer",
            {
                "pipeline_ids": chosen,
                "target_sublayer": self.rng.choice(self.SUBLAYERS),
                "create_if_missing": True,
            },
            None,
        )

    def _cmd_group(self):
        free = sorted(p.id for p in self.ds.pipelines.values() if p.group_id is None)
        if not free:
            return None
        chosen = self.rng.sample(free, min(len(free), self.rng.randint(1, 2)))
        name = f"group of {chosen[0]}"
        return "group_pipelines", {"name": name, "pipeline_ids": chosen}, None

    def _cmd_set_attributes(self):
        pool = sorted(self.ds.nodes) + sorted(self.ds.pipelines)
        target = self.rng.choice(pool)
        updates = {"source": self.rng.choice(["synthetic", "survey", None])}
        return "set_element_attributes", {"id": target, "updates": updates}, None

    def _cmd_add_infrastructure(self):
        node_id = self.rng.choice(sorted(self.ds.nodes))
        return (
            "add_infrastructure",
            {"layer": "compressors", "placement": {"node": node_id}},
            None,
        )

    def _cmd_distribute(self):
        candidates = self._pipes(short_ok=False, min_length=5.0)
        if not candidates:
            return None
        pipe = self.rng.choice(sorted(candidates, key=lambda p: p.id))
        return (
            "distribute_compressors",
            {"target": [pipe.id], "n": self.rng.randint(1, 2), "element_layer": "compressors"},
            None,
        )


def test_topology_property_suite():
    started = time.perf_counter()
    processor = CommandProcessor(_build_soak_fixture(seed=424242))
    assert len(processor.dataset.nodes) == 50
    assert len(processor.dataset.pipelines) == 70
    driver = _SoakDriver(processor, random.Random(171717))
    for _ in range(1000):
        driver.run_one()
    elapsed = time.perf_counter() - started
    assert processor.last_seq == 1000
    assert elapsed < 30.0, f"soak took {elapsed:.1f}s"
    splits = driver.op_counts.get("split_node", 0)
    divides = driver.op_counts.get("divide_pipeline", 0)
    assert splits > 20 and divides > 20, f"soak mix too thin: {driver.op_counts}"
    _report(
        f"topology soak: 1000 random commands kept closure, endpoint coincidence, "
        f"degree conservation ({splits} splits) and length additivity "
        f"({divides} divides) intact ({elapsed:.1f}s)"
    )


# -------------------------------------------------------------------------
# 3. Multi-carrier workflow reproduction
# -------------------------------------------------------------------------

def test_multicarrier_workflow(plan_image):
    started = time.perf_counter()
    processor = CommandProcessor(build_sample_dataset())
    run_multicarrier_workflow(processor, plan_image)
    report = topology_check(processor.dataset)
    assert report.component_count == 3
    dominant = {c.dominant_sublayer for c in report.components}
    assert dominant == {"natural_gas", "hydrogen", "co2"}
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"workflow took {elapsed:.2f}s"
    _report(
        f"workflow: natural-gas fixture extended to exactly 3 networks "
        f"{sorted(dominant)} ({elapsed:.2f}s)"
    )


# -------------------------------------------------------------------------
# 4. Affine georeferencing
# -------------------------------------------------------------------------

def test_affine_georeferencing():
    started = time.perf_counter()
    rng = random.Random(99)
    for _ in range(25):
        truth = AffineTransform(
            a=rng.uniform(0.001, 0.01),
            b=rng.uniform(-0.002, 0.002),
            c=rng.uniform(-30, 30),
            d=rng.uniform(-0.002, 0.002),
            e=rng.uniform(-0.01, -0.001),
            f=rng.uniform(30, 60),
        )
        pixels = [(0.0, 0.0), (640.0, 0.0), (0.0, 480.0), (640.0, 480.0)]
        pairs = [ControlPointPair(pixel=p, world=apply_affine(truth, p)) for p in pixels]
        fit = solve_affine(pairs)
        for name in "abcdef":
            assert abs(getattr(fit, name) - getattr(truth, name)) <= 1e-9, name
    collinear = [
        ControlPointPair(pixel=(float(i * 10), float(i * 10)), world=GeoPosition(float(i), float(i)))
        for i in range(3)
    ]
    with pytest.raises(DegenerateControlPoints):
        solve_affine(collinear)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"affine suite took {elapsed:.2f}s"
    _report(
        f"affine georeferencing: 25 synthetic transforms recovered to 1e-9 per "
        f"coefficient; collinear pixels rejected ({elapsed:.2f}s)"
    )


# -------------------------------------------------------------------------
# 5. Round-trip determinism
# -------------------------------------------------------------------------

def _dir_bytes(root):
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = path.read_bytes()
    return out


def test_round_trip_determinism(tmp_path):
    original = build_sample_dataset()
    first_dir = tmp_path / "first"
    save_project(original, first_dir)
    loaded = load_project(first_dir)

    second_dir = tmp_path / "second"
    save_project(loaded, second_dir)
    reloaded = load_project(second_dir)
    assert content_payload(loaded) == content_payload(reloaded)

    third_dir = tmp_path / "third"
    save_project(loaded, third_dir)
    assert _dir_bytes(second_dir) == _dir_bytes(third_dir)
    assert _dir_bytes(first_dir) == _dir_bytes(second_dir)
    _report("round trip: load-save-load is identity; canonical saves are byte-idempotent")


# -------------------------------------------------------------------------
# 6. Journal replay
# -------------------------------------------------------------------------

def test_journal_replay(tmp_path, plan_image):
    initial_dir = tmp_path / "initial"
    save_project(build_sample_dataset(), initial_dir)

    processor = CommandProcessor(load_project(initial_dir))
    run_multicarrier_workflow(processor, plan_image)
    live_dir = tmp_path / "live"
    save_project(processor.dataset, live_dir)

    replayed = replay_journal(load_project(initial_dir), processor.dataset.journal)
    replay_dir = tmp_path / "replayed"
    save_project(replayed, replay_dir)
    assert _dir_bytes(live_dir) == _dir_bytes(replay_dir)

    tampered = copy.deepcopy(processor.dataset.journal)
    tampered[2].params["subnode_count"] = 3  # extra subnode the journal never saw
    with pytest.raises(ReplayDivergence):
        replay_journal(load_project(initial_dir), tampered)
    _report(
        "journal replay: workflow journal reproduces the live project byte for "
        "byte; tampered entry raises ReplayDivergence"
    )


# -------------------------------------------------------------------------
# 7. Service contract
# -------------------------------------------------------------------------

def test_service_contract(tmp_path, plan_image):
    project_dir = tmp_path / "project"
    save_project(build_sample_dataset(), project_dir)
    processor = CommandProcessor(load_project(project_dir))
    client = TestClient(create_app(processor, root=project_dir))

    dataset_body = client.get("/api/dataset").json()
    for key in ("nodes", "pipelines", "layers", "configs", "schemas", "plans",
                "groups", "license", "journal_seq"):
        assert key in dataset_body, key
    assert dataset_body["nodes"]["type"] == "FeatureCollection"

    for layer in ("nodes", "pipelines", "compressor_stations", "storage_sites", "natural_gas"):
        body = client.get(f"/api/layers/{layer}").json()
        assert body["type"] == "FeatureCollection", layer

    stats = client.get("/api/stats").json()
    for key in ("element_counts", "pipelines_by_sublayer", "total_length_km",
                "data_source_count", "data_sources"):
        assert key in stats, key

    topology = client.get("/api/topology").json()
    for key in ("component_count", "components", "isolated_nodes", "dangling_references"):
        assert key in topology, key

    assert client.get("/api/journal").json() == []

    ok = client.post(
        "/api/command",
        json={"op": "change_direction", "params": {"pipeline_id": "pipe_1"}, "user": "ana"},
    ).json()
    assert ok["status"] == "ok" and ok["seq"] == 1
    journal = client.get("/api/journal", params={"since": 0}).json()
    assert len(journal) == 1 and journal[0]["seq"] == 1

    exported = client.post("/api/export").json()
    assert "nodes.geojson" in exported["written"]
    before = _dir_bytes(project_dir)

    failed = client.post(
        "/api/command",
        json={"op": "divide_pipeline", "params": {"pipeline_id": "ghost", "click": [0, 0]}, "user": "ana"},
    ).json()
    assert failed["status"] == "error" and failed["error"]["kind"] == "UnknownId"
    assert client.get("/api/journal", params={"since": 1}).json() == []
    client.post("/api/export")
    assert _dir_bytes(project_dir) == before

    overlay = client.post(
        "/api/command",
        json={
            "op": "add_plan_overlay",
            "params": {"image_path": str(plan_image), "pairs": PLAN_PAIRS, "opacity": 0.6},
            "user": "ana",
        },
    ).json()
    assert overlay["status"] == "ok"
    image = client.get(f"/plans/{overlay['payload']['overlay']['image_file']}")
    assert image.status_code == 200 and image.content[:4] == b"\x89PNG"

    assert client.get("/").status_code == 200
    _report(
        "service contract: all documented endpoints answer with their schema; "
        "failed commands leave journal and exported project unchanged"
    )
