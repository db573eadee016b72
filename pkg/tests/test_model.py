"""Core model: schema administration, attribute editing, id generation."""

import pytest

from gastopo.errors import (
    DuplicateLayer,
    ReservedAttribute,
    ReservedLayer,
    UnknownAttribute,
    UnknownId,
    UnknownLayer,
)
from gastopo.model import (
    ElementKind,
    GeoPosition,
    define_element_type,
    manage_attribute,
    new_dataset,
    set_element_attributes,
)
from gastopo.serialize import canonical_dumps, content_payload
from gastopo.project import load_project, save_project


class TestGeoPosition:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            GeoPosition(181.0, 0.0)
        with pytest.raises(ValueError):
            GeoPosition(0.0, -90.5)
        with pytest.raises(ValueError):
            GeoPosition(float("nan"), 0.0)

    def test_valid_extremes(self):
        GeoPosition(-180.0, -90.0)
        GeoPosition(180.0, 90.0)


class TestDefineElementType:
    def test_registers_layer_schema_and_style(self, dataset):
        cfg = define_element_type(
            dataset,
            "co2_sources",
            ElementKind.POINT,
            schema=[("capacity_kt_a", None)],
            style={"color": "#555555"},
        )
        assert cfg.color == "#555555"
        assert dataset.layer_config("co2_sources") is cfg
        assert dataset.schemas["co2_sources"] == [("capacity_kt_a", None)]
        assert dataset.elements_of_layer("co2_sources") == []

    def test_mandatory_names_reserved(self, dataset):
        with pytest.raises(ReservedLayer):
            define_element_type(dataset, "nodes", ElementKind.POINT)
        with pytest.raises(ReservedLayer):
            define_element_type(dataset, "pipelines", ElementKind.LINE)

    def test_duplicate_rejected(self, dataset):
        with pytest.raises(DuplicateLayer):
            define_element_type(dataset, "compressor_stations", ElementKind.POINT)

    def test_two_types_survive_round_trip(self, dataset, tmp_path):
        define_element_type(dataset, "electrolyzers", ElementKind.NODE_ATTACHED,
                            schema=[("power_mw", None)], style={"color": "#00aa88"})
        define_element_type(dataset, "biogas_sites", ElementKind.POINT,
                            schema=[("output_mw", 0)], style={"marker": "star"})
        save_project(dataset, tmp_path / "p")
        loaded = load_project(tmp_path / "p")
        assert loaded.schemas["electrolyzers"] == [("power_mw", None)]
        assert loaded.schemas["biogas_sites"] == [("output_mw", 0)]
        assert loaded.layer_config("electrolyzers").color == "#00aa88"
        assert loaded.layer_config("biogas_sites").marker == "star"


class TestManageAttribute:
    def test_add_reaches_every_member(self, dataset):
        count = manage_attribute(dataset, "pipelines", "add", "h2_ready", False)
        assert count == len(dataset.pipelines) == 12
        assert all(p.attributes["h2_ready"] is False for p in dataset.pipelines.values())
        assert ("h2_ready", False) in dataset.schemas["pipelines"]

    def test_reserved_keys_untouchable(self, dataset):
        for key in ("id", "start_node", "end_node", "length_km", "is_short_pipe", "sublayer"):
            with pytest.raises(ReservedAttribute):
                manage_attribute(dataset, "pipelines", "remove", key)
        with pytest.raises(ReservedAttribute):
            manage_attribute(dataset, "nodes", "add", "name", "x")

    def test_unknown_layer_and_key(self, dataset):
        with pytest.raises(UnknownLayer):
            manage_attribute(dataset, "nope", "add", "k")
        with pytest.raises(UnknownAttribute):
            manage_attribute(dataset, "pipelines", "remove", "not_there")

    def test_rename_is_involutive(self, dataset):
        before = canonical_dumps(content_payload(dataset))
        manage_attribute(dataset, "pipelines", "rename", "diameter_mm", "diameter")
        assert all("diameter" in p.attributes for p in dataset.pipelines.values())
        manage_attribute(dataset, "pipelines", "rename", "diameter", "diameter_mm")
        assert canonical_dumps(content_payload(dataset)) == before

    def test_add_then_remove_restores_canonical_form(self, dataset):
        before = canonical_dumps(content_payload(dataset))
        manage_attribute(dataset, "compressor_stations", "add", "operator", "ACME")
        manage_attribute(dataset, "compressor_stations", "remove", "operator")
        assert canonical_dumps(content_payload(dataset)) == before

    def test_set_default_leaves_members_alone(self, dataset):
        count = manage_attribute(dataset, "pipelines", "set_default", "pressure_bar", 64)
        assert count == 0
        assert dict(dataset.schemas["pipelines"])["pressure_bar"] == 64
        assert dataset.pipelines["pipe_1"].attributes["pressure_bar"] == 70


class TestSetElementAttributes:
    def test_point_update_keeps_other_keys(self, dataset):
        snapshot = set_element_attributes(dataset, "pipe_1", {"pressure_bar": 70.5})
        assert snapshot["attributes"]["pressure_bar"] == 70.5
        assert snapshot["attributes"]["diameter_mm"] == 500

    def test_unknown_id(self, dataset):
        with pytest.raises(UnknownId):
            set_element_attributes(dataset, "ghost", {"a": 1})

    def test_reserved_rejected(self, dataset):
        with pytest.raises(ReservedAttribute):
            set_element_attributes(dataset, "pipe_1", {"start_node": "node_9"})

    def test_last_writer_wins(self, dataset):
        set_element_attributes(dataset, "node_1", {"a": 1, "b": 2})
        set_element_attributes(dataset, "node_1", {"b": 3})
        attrs = dataset.nodes["node_1"].attributes
        assert attrs["a"] == 1 and attrs["b"] == 3

    def test_new_key_extends_layer_schema(self, dataset):
        set_element_attributes(dataset, "pipe_3", {"h2_ready": True})
        # consistency: every pipeline now carries the key
        assert all("h2_ready" in p.attributes for p in dataset.pipelines.values())
        assert dataset.pipelines["pipe_1"].attributes["h2_ready"] is None

    def test_null_means_unknown(self, dataset):
        snapshot = set_element_attributes(dataset, "pipe_2", {"pressure_bar": None})
        assert snapshot["attributes"]["pressure_bar"] is None

    def test_node_rename(self, dataset):
        snapshot = set_element_attributes(dataset, "node_3", {"name": "Velden am See"})
        assert snapshot["name"] == "Velden am See"
        assert dataset.nodes["node_3"].name == "Velden am See"


class TestIdGeneration:
    def test_counter_seeds_from_existing(self, dataset):
        assert dataset.next_id("node") == "node_13"
        assert dataset.next_id("pipe") == "pipe_13"
        assert dataset.next_id("group") == "group_1"

    def test_empty_dataset_counts_from_one(self):
        assert new_dataset().next_id("node") == "node_1"

    def test_suffixed_ids_avoid_collisions(self, dataset):
        assert dataset.fresh_suffixed_id("pipe_1", "_a") == "pipe_1_a"
        dataset.pipelines["pipe_1_a"] = dataset.pipelines["pipe_1"]
        assert dataset.fresh_suffixed_id("pipe_1", "_a") == "pipe_1_a_"
