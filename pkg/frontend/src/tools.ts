// Tool interaction logic: map gestures and dialog answers become command
// envelopes. This module never touches dataset state directly; the only
// mutating traffic it can produce is POST /api/command through the client.

import type { ApiClient } from "./api";
import type { MapHit, ToolName, ToolState } from "./state";
import type { CommandResult, DatasetPayload, Feature, LonLat } from "./types";

export interface Prompter {
  askNumber(label: string, initial?: number): Promise<number | null>;
  askText(label: string, initial?: string): Promise<string | null>;
  askChoice(label: string, options: string[]): Promise<string | null>;
  confirm(label: string): Promise<boolean>;
  askAssignment(
    nodeId: string,
    members: string[],
    subnodeCount: number,
  ): Promise<Record<string, number> | null>;
  askAttributes(
    objectId: string,
    current: Record<string, unknown>,
  ): Promise<Record<string, unknown> | null>;
}

export interface WorkspaceEvents {
  onCommandApplied(result: CommandResult): void | Promise<void>;
  onError(message: string): void;
  onPendingChanged?(pending: MapHit[]): void;
}

const ELEMENT_KINDS = ["line", "node_attached", "point", "in_line"];

export function incidentPipelines(data: DatasetPayload, nodeId: string): string[] {
  return data.pipelines.features
    .filter(
      (f) => f.properties.start_node === nodeId || f.properties.end_node === nodeId,
    )
    .map((f) => f.properties.id)
    .sort();
}

export function attachedElements(data: DatasetPayload, nodeId: string): string[] {
  const out: string[] = [];
  for (const collection of Object.values(data.layers)) {
    for (const feature of collection.features) {
      if (feature.properties.node_ref === nodeId) {
        out.push(feature.properties.id);
      }
    }
  }
  return out.sort();
}

function findFeature(data: DatasetPayload, id: string): Feature | undefined {
  const pools = [data.nodes, data.pipelines, ...Object.values(data.layers)];
  for (const collection of pools) {
    const hit = collection.features.find((f) => f.properties.id === id);
    if (hit) return hit;
  }
  return undefined;
}

export class ToolController {
  constructor(
    private readonly client: ApiClient,
    readonly state: ToolState,
    private readonly prompter: Prompter,
    private readonly events: WorkspaceEvents,
    private readonly data: () => DatasetPayload,
  ) {}

  setTool(tool: ToolName): void {
    this.state.setTool(tool);
    this.events.onPendingChanged?.(this.state.pendingInputs);
  }

  /** Post one envelope; success triggers the re-fetch hook, errors surface verbatim. */
  private async post(op: string, params: Record<string, unknown>): Promise<void> {
    const result = await this.client.postCommand({ op, params, user: this.state.user });
    this.state.clear();
    this.events.onPendingChanged?.(this.state.pendingInputs);
    if (result.status === "ok") {
      await this.events.onCommandApplied(result);
    } else {
      this.events.onError(`${result.error?.kind}: ${result.error?.message}`);
    }
  }

  private buffer(hit: MapHit): void {
    this.state.push(hit);
    this.events.onPendingChanged?.(this.state.pendingInputs);
  }

  async handleMapClick(hit: MapHit): Promise<void> {
    switch (this.state.activeTool) {
      case "info_mode":
        return this.infoMode(hit);
      case "change_direction":
        if (hit.pipeline) {
          await this.post("change_direction", { pipeline_id: hit.pipeline });
        }
        return;
      case "divide_pipeline":
        // client-side guard: a click off any pipeline posts nothing
        if (hit.pipeline) {
          await this.post("divide_pipeline", { pipeline_id: hit.pipeline, click: hit.lnglat });
        }
        return;
      case "split_node":
        if (hit.node) {
          await this.splitNode(hit.node);
        }
        return;
      case "add_short_pipe":
        return this.twoNodeFlow(hit, (a, b) =>
          this.post("add_short_pipe", { node_a: a, node_b: b }),
        );
      case "move_node":
        return this.moveNode(hit);
      case "reconnect":
        return this.reconnect(hit);
      case "delete_element":
        return this.deleteElement(hit);
      case "add_pipeline":
      case "edit_route":
      case "switch_sublayer":
      case "group_pipelines":
      case "distribute_compressors":
      case "add_plan":
        this.buffer(hit);
        return;
      case "add_infrastructure":
        return this.addInfrastructure(hit);
      case "define_element_type":
        return this.defineElementType();
      case "manage_attribute":
        return this.manageAttribute();
      case "integrate":
        return; // driven by the file-import dialog, not map clicks
    }
  }

  /** Finish a multi-click gesture (double click / Enter). */
  async finishGesture(): Promise<void> {
    switch (this.state.activeTool) {
      case "add_pipeline":
        return this.finishAddPipeline();
      case "edit_route":
        return this.finishEditRoute();
      case "switch_sublayer":
        return this.finishSwitchSublayer();
      case "group_pipelines":
        return this.finishGroupPipelines();
      case "distribute_compressors":
        return this.finishDistributeCompressors();
      case "add_plan":
        return this.finishAddPlan();
      default:
        return;
    }
  }

  // --- single-gesture tools ---------------------------------------------

  private async infoMode(hit: MapHit): Promise<void> {
    const id = hit.node ?? hit.pipeline ?? hit.element;
    if (!id) return;
    const feature = findFeature(this.data(), id);
    if (!feature) return;
    const structural = new Set([
      "id", "start_node", "end_node", "length_km", "is_short_pipe",
      "sublayer", "group_id", "node_ref", "pipeline_ref", "position_fraction",
    ]);
    const editable: Record<string, unknown> = {};
    for (const [key, value] of Object.entries(feature.properties)) {
      if (!structural.has(key)) editable[key] = value;
    }
    const updates = await this.prompter.askAttributes(id, editable);
    if (updates && Object.keys(updates).length > 0) {
      await this.post("set_element_attributes", { id, updates });
    }
  }

  private async splitNode(nodeId: string): Promise<void> {
    const count = await this.prompter.askNumber("Number of subnodes", 2);
    if (count === null || count < 2) return;
    const members = [
      ...incidentPipelines(this.data(), nodeId),
      ...attachedElements(this.data(), nodeId),
    ];
    const assignment = await this.prompter.askAssignment(nodeId, members, count);
    if (!assignment) return;
    await this.post("split_node", {
      node_id: nodeId,
      subnode_count: count,
      assignment,
    });
  }

  private async twoNodeFlow(
    hit: MapHit,
    submit: (a: string, b: string) => Promise<void>,
  ): Promise<void> {
    if (!hit.node) return;
    if (this.state.pendingInputs.length === 0) {
      this.buffer(hit);
      return;
    }
    const first = this.state.pendingInputs[0].node!;
    if (first === hit.node) return;
    await submit(first, hit.node);
  }

  private async moveNode(hit: MapHit): Promise<void> {
    if (this.state.pendingInputs.length === 0) {
      if (hit.node) this.buffer(hit);
      return;
    }
    const nodeId = this.state.pendingInputs[0].node!;
    await this.post("move_node", { node_id: nodeId, position: hit.lnglat });
  }

  private async reconnect(hit: MapHit): Promise<void> {
    if (this.state.pendingInputs.length === 0) {
      if ((hit.pipeline && hit.pipelineEndpoint) || hit.element) this.buffer(hit);
      return;
    }
    if (!hit.node) return;
    const first = this.state.pendingInputs[0];
    if (first.element) {
      await this.post("reconnect", { element_id: first.element, new_node: hit.node });
    } else {
      await this.post("reconnect", {
        pipeline_id: first.pipeline,
        endpoint: first.pipelineEndpoint,
        new_node: hit.node,
      });
    }
  }

  private async deleteElement(hit: MapHit): Promise<void> {
    const id = hit.element ?? hit.pipeline ?? hit.node;
    if (!id) return;
    let cascade = false;
    if (hit.node && !hit.element && !hit.pipeline) {
      const incidents = incidentPipelines(this.data(), hit.node).length;
      const attached = attachedElements(this.data(), hit.node).length;
      if (incidents + attached > 0) {
        cascade = await this.prompter.confirm(
          `Node ${id} has ${incidents} pipeline(s) and ${attached} element(s); delete all?`,
        );
        if (!cascade) return;
      }
    }
    if (!(await this.prompter.confirm(`Delete ${id}?`))) return;
    await this.post("delete_element", { id, cascade });
  }

  private async addInfrastructure(hit: MapHit): Promise<void> {
    const data = this.data();
    const layers = data.configs
      .filter((c) => ELEMENT_KINDS.includes(c.kind))
      .map((c) => c.layer);
    if (layers.length === 0) {
      this.events.onError("no element layers defined yet");
      return;
    }
    const layer = await this.prompter.askChoice("Element layer", layers);
    if (!layer) return;
    const kind = data.configs.find((c) => c.layer === layer)?.kind;
    let placement: Record<string, unknown>;
    if (kind === "node_attached") {
      if (!hit.node) {
        this.events.onError("click a node for node-attached elements");
        return;
      }
      placement = { node: hit.node };
    } else if (kind === "in_line") {
      if (!hit.pipeline) {
        this.events.onError("click a pipeline for in-line elements");
        return;
      }
      const fraction = await this.prompter.askNumber("Position fraction (0..1)", 0.5);
      if (fraction === null) return;
      placement = { pipeline: hit.pipeline, fraction };
    } else if (kind === "point") {
      placement = { position: hit.lnglat };
    } else {
      this.events.onError("draw line elements with the route tools");
      return;
    }
    await this.post("add_infrastructure", { layer, placement, attributes: {} });
  }

  private async defineElementType(): Promise<void> {
    const name = await this.prompter.askText("New element type name");
    if (!name) return;
    const kind = await this.prompter.askChoice("Element kind", ELEMENT_KINDS);
    if (!kind) return;
    const keysRaw = await this.prompter.askText("Attribute keys (comma separated)", "");
    const schema = (keysRaw ?? "")
      .split(",")
      .map((k) => k.trim())
      .filter((k) => k.length > 0)
      .map((key) => ({ key, default: null }));
    const color = await this.prompter.askText("Legend color", "#888888");
    await this.post("define_element_type", {
      name,
      kind,
      schema,
      style: { legend_label: name, color: color ?? "#888888" },
    });
  }

  private async manageAttribute(): Promise<void> {
    const layers = Object.keys(this.data().schemas).sort();
    const layer = await this.prompter.askChoice("Layer", layers);
    if (!layer) return;
    const action = await this.prompter.askChoice("Action", [
      "add",
      "rename",
      "remove",
      "set_default",
    ]);
    if (!action) return;
    const key = await this.prompter.askText("Attribute key");
    if (!key) return;
    let extra: unknown = null;
    if (action !== "remove") {
      extra = await this.prompter.askText(
        action === "rename" ? "New key" : "Default value",
        "",
      );
    }
    await this.post("manage_attribute", {
      layer,
      action,
      key,
      new_key_or_default: extra,
    });
  }

  // --- multi-click gestures ----------------------------------------------

  private routeFromPending(): LonLat[] {
    return this.state.pendingInputs.map((h) => h.lnglat);
  }

  private async finishAddPipeline(): Promise<void> {
    const pending = this.state.pendingInputs;
    if (pending.length < 2) {
      this.events.onError("a pipeline needs at least two route points");
      return;
    }
    const sublayer = await this.prompter.askText("Sublayer", "natural_gas");
    if (!sublayer) return;
    await this.post("add_pipeline", {
      route: this.routeFromPending(),
      start: pending[0].node ?? "new",
      end: pending[pending.length - 1].node ?? "new",
      sublayer,
      attributes: {},
    });
  }

  private async finishEditRoute(): Promise<void> {
    const pending = this.state.pendingInputs;
    const target = pending.find((h) => h.pipeline);
    if (!target) {
      this.events.onError("select a pipeline first, then click the new route");
      return;
    }
    const feature = findFeature(this.data(), target.pipeline!);
    if (!feature || feature.geometry.type !== "LineString") return;
    const coords = feature.geometry.coordinates;
    const interior = pending.filter((h) => h !== target).map((h) => h.lnglat);
    await this.post("edit_route", {
      pipeline_id: target.pipeline,
      route: [coords[0], ...interior, coords[coords.length - 1]],
    });
  }

  private pendingPipelineIds(): string[] {
    const seen: string[] = [];
    for (const hit of this.state.pendingInputs) {
      if (hit.pipeline && !seen.includes(hit.pipeline)) seen.push(hit.pipeline);
    }
    return seen;
  }

  private async finishSwitchSublayer(): Promise<void> {
    const ids = this.pendingPipelineIds();
    if (ids.length === 0) return;
    const target = await this.prompter.askText("Target sublayer");
    if (!target) return;
    await this.post("switch_sublayer", {
      pipeline_ids: ids,
      target_sublayer: target,
      create_if_missing: true,
    });
  }

  private async finishGroupPipelines(): Promise<void> {
    const ids = this.pendingPipelineIds();
    if (ids.length === 0) return;
    const name = await this.prompter.askText("Group name");
    if (!name) return;
    await this.post("group_pipelines", { name, pipeline_ids: ids });
  }

  private async finishDistributeCompressors(): Promise<void> {
    const ids = this.pendingPipelineIds();
    if (ids.length === 0) return;
    const n = await this.prompter.askNumber("Number of compressors", 1);
    if (n === null || n < 1) return;
    const layers = this.data()
      .configs.filter((c) => c.kind === "node_attached")
      .map((c) => c.layer);
    const layer = await this.prompter.askChoice("Compressor layer", layers);
    if (!layer) return;
    await this.post("distribute_compressors", { target: ids, n, element_layer: layer });
  }

  private async finishAddPlan(): Promise<void> {
    const imagePath = await this.prompter.askText("Plan image path on the server");
    if (!imagePath) return;
    const pairs: { pixel: [number, number]; world: LonLat }[] = [];
    for (const hit of this.state.pendingInputs) {
      const raw = await this.prompter.askText(
        `Image pixel for landmark at ${hit.lnglat[0].toFixed(5)}, ${hit.lnglat[1].toFixed(5)} (px,py)`,
      );
      if (!raw) return;
      const [px, py] = raw.split(",").map((v) => Number(v.trim()));
      if (!Number.isFinite(px) || !Number.isFinite(py)) {
        this.events.onError(`not a pixel pair: ${raw}`);
        return;
      }
      pairs.push({ pixel: [px, py], world: hit.lnglat });
    }
    if (pairs.length < 3) {
      this.events.onError("georeferencing needs at least three landmark pairs");
      return;
    }
    const opacity = await this.prompter.askNumber("Overlay opacity (0..1)", 0.5);
    await this.post("add_plan_overlay", {
      image_path: imagePath,
      pairs,
      opacity: opacity ?? 0.5,
    });
  }

  /** Import an external dataset from parsed JSON (file-picker driven). */
  async integrateExternal(external: unknown, snapToleranceKm?: number): Promise<void> {
    const params: Record<string, unknown> = { external };
    if (snapToleranceKm !== undefined) params.snap_tolerance_km = snapToleranceKm;
    await this.post("integrate_dataset", params);
  }
}
