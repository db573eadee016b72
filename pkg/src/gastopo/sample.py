"""Bundled sample project: a small natural-gas transmission network in
Carinthia (Austria) used as template, demo and test fixture.

Counts are part of the fixture contract: 12 nodes, 12 pipelines (one ring,
three spurs), 2 compressor stations, 1 storage site.
"""

from __future__ import annotations

from pathlib import Path

from .geomath import polyline_length_km
from .model import (
    Dataset,
    ElementKind,
    GeoPosition,
    InfrastructureElement,
    LayerConfig,
    Node,
    Pipeline,
    new_dataset,
)
from .project import ProjectManifest, save_project

SAMPLE_SOURCE = "sample-grid-2026"

_NODES = [
    ("node_1", "Arnoldstein", 13.710, 46.546),
    ("node_2", "Villach", 13.855, 46.611),
    ("node_3", "Velden", 13.976, 46.612),
    ("node_4", "Klagenfurt", 14.308, 46.623),
    ("node_5", "St. Veit", 14.360, 46.768),
    ("node_6", "Friesach", 14.406, 46.953),
    ("node_7", "Voelkermarkt", 14.634, 46.662),
    ("node_8", "Wolfsberg", 14.844, 46.840),
    ("node_9", "Spittal", 13.495, 46.791),
    ("node_10", "Gmuend", 13.530, 46.897),
    ("node_11", "Feldkirchen", 14.095, 46.723),
    ("node_12", "Ferlach", 14.301, 46.527),
]

# (id, start, end, interior route vertices, diameter_mm, pressure_bar)
_PIPELINES = [
    ("pipe_1", "node_1", "node_2", [(13.780, 46.575)], 500, 70),
    ("pipe_2", "node_2", "node_3", [], 500, 70),
    ("pipe_3", "node_3", "node_4", [(14.130, 46.600)], 500, 70),
    ("pipe_4", "node_4", "node_5", [], 400, 70),
    ("pipe_5", "node_5", "node_6", [(14.380, 46.870)], 400, 70),
    ("pipe_6", "node_4", "node_7", [], 400, 70),
    ("pipe_7", "node_7", "node_8", [(14.750, 46.760)], 300, 64),
    ("pipe_8", "node_2", "node_9", [(13.640, 46.700)], 400, 70),
    ("pipe_9", "node_9", "node_10", [], 300, 64),
    ("pipe_10", "node_11", "node_5", [(14.240, 46.750)], 300, 64),
    ("pipe_11", "node_4", "node_12", [], 250, 64),
    ("pipe_12", "node_2", "node_11", [(13.960, 46.680)], 300, 64),
]


def build_sample_dataset() -> Dataset:
    ds = new_dataset()
    ds.layer_config("nodes").color = "#1f4e79"
    ds.layer_configs.append(
        LayerConfig(
            layer="natural_gas",
            kind="pipeline",
            legend_label="Natural gas",
            color="#c0392b",
            marker="line",
            sublayer_of="pipelines",
        )
    )
    ds.layer_configs.append(
        LayerConfig(
            layer="compressor_stations",
            kind=ElementKind.NODE_ATTACHED.value,
            legend_label="Compressor stations",
            color="#e67e22",
            marker="triangle",
        )
    )
    ds.layer_configs.append(
        LayerConfig(
            layer="storage_sites",
            kind=ElementKind.POINT.value,
            legend_label="Storage sites",
            color="#2c3e50",
            marker="square",
        )
    )
    ds.schemas = {
        "nodes": [("source", SAMPLE_SOURCE)],
        "pipelines": [
            ("name", None),
            ("diameter_mm", None),
            ("pressure_bar", None),
            ("source", SAMPLE_SOURCE),
        ],
        "compressor_stations": [("capacity_mw", None), ("source", SAMPLE_SOURCE)],
        "storage_sites": [("volume_gwh", None), ("source", SAMPLE_SOURCE)],
    }

    for node_id, name, lon, lat in _NODES:
        ds.nodes[node_id] = Node(
            id=node_id,
            name=name,
            position=GeoPosition(lon, lat),
            attributes={"source": SAMPLE_SOURCE},
        )

    for pipe_id, start, end, interior, diameter, pressure in _PIPELINES:
        route = [
            ds.nodes[start].position,
            *(GeoPosition(lon, lat) for lon, lat in interior),
            ds.nodes[end].position,
        ]
        ds.pipelines[pipe_id] = Pipeline(
            id=pipe_id,
            start_node=start,
            end_node=end,
            route=route,
            length_km=polyline_length_km(route),
            sublayer="natural_gas",
            attributes={
                "name": f"{ds.nodes[start].name} - {ds.nodes[end].name}",
                "diameter_mm": diameter,
                "pressure_bar": pressure,
                "source": SAMPLE_SOURCE,
            },
        )

    ds.elements["compressor_stations_1"] = InfrastructureElement(
        id="compressor_stations_1",
        layer="compressor_stations",
        kind=ElementKind.NODE_ATTACHED,
        node_ref="node_2",
        attributes={"capacity_mw": 12, "source": SAMPLE_SOURCE},
    )
    ds.elements["compressor_stations_2"] = InfrastructureElement(
        id="compressor_stations_2",
        layer="compressor_stations",
        kind=ElementKind.NODE_ATTACHED,
        node_ref="node_4",
        attributes={"capacity_mw": 8, "source": SAMPLE_SOURCE},
    )
    ds.elements["storage_sites_1"] = InfrastructureElement(
        id="storage_sites_1",
        layer="storage_sites",
        kind=ElementKind.POINT,
        position=GeoPosition(14.050, 46.640),
        attributes={"volume_gwh": 90, "source": SAMPLE_SOURCE},
    )

    ds.license_text = (
        "Sample gas infrastructure dataset (Carinthia, Austria).\n"
        "Synthetic demonstration data, free to use, share and adapt.\n"
        "Coordinates approximate real towns; technical attributes are fictitious.\n"
    )
    return ds


def write_sample_project(root: str | Path) -> ProjectManifest:
    """Materialize the sample project into a directory."""
    return save_project(build_sample_dataset(), root)


if __name__ == "__main__":  # python -m gastopo.sample <dir>
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "sample_project"
    manifest = write_sample_project(target)
    print(f"sample project written to {manifest.root}")
