"""Shared fixtures: the sample project, a synthetic plan image, the scripted
multi-carrier workflow, and an independent union-find component oracle."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from gastopo.commands import CommandProcessor
from gastopo.model import Dataset, GeoPosition
from gastopo.sample import build_sample_dataset
from gastopo.project import save_project


@pytest.fixture
def dataset() -> Dataset:
    return build_sample_dataset()


@pytest.fixture
def processor(dataset) -> CommandProcessor:
    return CommandProcessor(dataset)


@pytest.fixture
def project_dir(tmp_path, dataset) -> Path:
    root = tmp_path / "project"
    save_project(dataset, root)
    return root


@pytest.fixture(scope="session")
def plan_image(tmp_path_factory) -> Path:
    """Small synthetic PNG standing in for a scanned infrastructure plan."""
    from PIL import Image, ImageDraw

    path = tmp_path_factory.mktemp("plans") / "h2_plan.png"
    image = Image.new("RGBA", (400, 300), (245, 240, 225, 255))
    draw = ImageDraw.Draw(image)
    draw.line([(40, 260), (180, 140), (360, 60)], fill=(40, 90, 200, 255), width=4)
    draw.ellipse([(170, 130), (190, 150)], fill=(200, 40, 40, 255))
    image.save(path)
    return path


# pixel -> world transform used for all synthetic georeferencing fixtures
PLAN_TRANSFORM = dict(a=0.002, b=0.0, c=13.4, d=0.0, e=-0.0015, f=47.0)

PLAN_PAIRS = [
    {"pixel": [0.0, 0.0], "world": [13.4, 47.0]},
    {"pixel": [400.0, 0.0], "world": [14.2, 47.0]},
    {"pixel": [0.0, 300.0], "world": [13.4, 46.55]},
    {"pixel": [400.0, 300.0], "world": [14.2, 46.55]},
]


def dispatch_ok(processor: CommandProcessor, op: str, params: dict, user: str = "tester"):
    """Dispatch one envelope and fail loudly if it is rejected."""
    result = processor.dispatch({"op": op, "params": params, "user": user})
    assert result.status == "ok", f"{op} failed: {result.error}"
    return result


def run_multicarrier_workflow(processor: CommandProcessor, plan_image: Path) -> dict:
    """Scripted transformation: extend the natural-gas sample project with
    hydrogen (repurposed pipelines, decoupled shared node) and CO2 (new
    layers, digitized pipelines and sources). Returns the key created ids.
    """
    dispatch_ok(
        processor,
        "add_plan_overlay",
        {
            "image_path": str(plan_image),
            "pairs": PLAN_PAIRS,
            "opacity": 0.6,
            "source_note": "hydrogen expansion plan",
        },
        user="maria",
    )
    dispatch_ok(
        processor,
        "switch_sublayer",
        {
            "pipeline_ids": ["pipe_8", "pipe_9"],
            "target_sublayer": "hydrogen",
            "create_if_missing": True,
        },
        user="maria",
    )
    split = dispatch_ok(
        processor,
        "split_node",
        {
            "node_id": "node_2",
            "subnode_count": 2,
            "assignment": {
                "pipe_1": 0,
                "pipe_2": 0,
                "pipe_12": 0,
                "compressor_stations_1": 0,
                "pipe_8": 1,
            },
        },
        user="maria",
    )
    dispatch_ok(
        processor,
        "define_element_type",
        {
            "name": "co2_sources",
            "kind": "point",
            "schema": [
                {"key": "capacity_kt_a", "default": None},
                {"key": "source", "default": "co2-plan-2026"},
            ],
            "style": {"legend_label": "CO2 sources", "color": "#555555", "marker": "square"},
        },
        user="jonas",
    )
    co2_a = dispatch_ok(
        processor,
        "add_pipeline",
        {
            "route": [[14.50, 46.55], [14.62, 46.58]],
            "start": "new",
            "end": "new",
            "sublayer": "co2",
            "attributes": {"source": "co2-plan-2026"},
        },
        user="jonas",
    )
    first_end = co2_a.payload["pipeline"]["properties"]["end_node"]
    dispatch_ok(
        processor,
        "add_pipeline",
        {
            "route": [[14.62, 46.58], [14.75, 46.62]],
            "start": first_end,
            "end": "new",
            "sublayer": "co2",
            "attributes": {"source": "co2-plan-2026"},
        },
        user="jonas",
    )
    dispatch_ok(
        processor,
        "add_infrastructure",
        {
            "layer": "co2_sources",
            "placement": {"position": [14.50, 46.55]},
            "attributes": {"capacity_kt_a": 120},
        },
        user="jonas",
    )
    return {"subnodes": split.payload["subnode_ids"], "co2_start": first_end}


def oracle_component_count(node_ids, edges) -> int:
    """Independent connected-component oracle using union-find."""
    parent = {n: n for n in node_ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(n) for n in node_ids})


def dataset_edges(dataset: Dataset):
    return [(p.start_node, p.end_node) for p in dataset.pipelines.values()]


def assert_graph_invariants(dataset: Dataset) -> None:
    """Reference closure, endpoint coincidence, layer schema consistency."""
    from gastopo.validation import check_references

    findings = check_references(dataset)
    assert findings == [], f"dangling references: {findings}"
    for pipe in dataset.pipelines.values():
        start = dataset.nodes[pipe.start_node].position
        end = dataset.nodes[pipe.end_node].position
        assert abs(pipe.route[0].lon - start.lon) <= 1e-9
        assert abs(pipe.route[0].lat - start.lat) <= 1e-9
        assert abs(pipe.route[-1].lon - end.lon) <= 1e-9
        assert abs(pipe.route[-1].lat - end.lat) <= 1e-9
    for layer, members in (
        ("nodes", dataset.nodes.values()),
        ("pipelines", dataset.pipelines.values()),
        *((name, dataset.elements_of_layer(name)) for name in dataset.element_layers()),
    ):
        expected = {key for key, _ in dataset.schemas.get(layer, [])}
        for member in members:
            assert set(member.attributes) == expected, (
                f"{layer} member {member.id} carries {sorted(member.attributes)}, "
                f"schema says {sorted(expected)}"
            )


def random_position(rng: random.Random, lon_range=(10.0, 16.0), lat_range=(45.0, 48.0)) -> GeoPosition:
    return GeoPosition(rng.uniform(*lon_range), rng.uniform(*lat_range))
