// The tool layer's contract: every mutation is exactly one well-formed
// command envelope; nothing else writes; statistics mirror /api/stats.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { ToolState } from "../src/state";
import {
  Prompter,
  ToolController,
  attachedElements,
  incidentPipelines,
} from "../src/tools";
import type { DatasetPayload, NetworkStatistics } from "../src/types";
import { FakeServer, sampleDataset, sampleStats } from "./fakeserver";

class CannedPrompter implements Prompter {
  numbers: number[] = [];
  texts: (string | null)[] = [];
  choices: string[] = [];
  confirmations: boolean[] = [];
  assignments: Record<string, number>[] = [];
  attributeAnswers: Record<string, unknown>[] = [];

  async askNumber(): Promise<number | null> {
    return this.numbers.length ? this.numbers.shift()! : null;
  }
  async askText(): Promise<string | null> {
    return this.texts.length ? this.texts.shift()! : null;
  }
  async askChoice(_label: string, options: string[]): Promise<string | null> {
    const wanted = this.choices.shift();
    return wanted !== undefined && options.includes(wanted) ? wanted : null;
  }
  async confirm(): Promise<boolean> {
    return this.confirmations.length ? this.confirmations.shift()! : false;
  }
  async askAssignment(): Promise<Record<string, number> | null> {
    return this.assignments.length ? this.assignments.shift()! : null;
  }
  async askAttributes(): Promise<Record<string, unknown> | null> {
    return this.attributeAnswers.length ? this.attributeAnswers.shift()! : null;
  }
}

interface Harness {
  server: FakeServer;
  controller: ToolController;
  prompter: CannedPrompter;
  errors: string[];
  statsSeen: NetworkStatistics[];
  data: DatasetPayload;
}

function makeHarness(): Harness {
  const server = new FakeServer();
  const client = new ApiClient("", server.fetch);
  const state = new ToolState();
  state.user = "maria";
  const prompter = new CannedPrompter();
  const errors: string[] = [];
  const statsSeen: NetworkStatistics[] = [];
  const data = sampleDataset();
  const controller = new ToolController(
    client,
    state,
    prompter,
    {
      async onCommandApplied() {
        // the workspace refreshes the statistics panel after every ok command
        statsSeen.push(await client.stats());
      },
      onError: (message) => errors.push(message),
    },
    () => data,
  );
  return { server, controller, prompter, errors, statsSeen, data };
}

describe("mutation purity", () => {
  it("three tool gestures post exactly three envelopes and nothing else mutates", async () => {
    const h = makeHarness();

    h.controller.setTool("change_direction");
    await h.controller.handleMapClick({ lnglat: [13.9, 46.65], pipeline: "pipe_1" });

    h.controller.setTool("divide_pipeline");
    await h.controller.handleMapClick({ lnglat: [13.9, 46.65], pipeline: "pipe_1" });

    h.controller.setTool("split_node");
    h.prompter.numbers = [2];
    h.prompter.assignments = [
      { pipe_1: 0, pipe_2: 0, pipe_3: 1, compressor_stations_1: 0 },
    ];
    await h.controller.handleMapClick({ lnglat: [14.0, 46.7], node: "node_2" });

    const envelopes = h.server.commandEnvelopes;
    expect(envelopes).toHaveLength(3);
    expect(h.server.mutatingRequests).toHaveLength(3); // no other writes at all
    expect(envelopes.map((e) => (e.body as { op: string }).op)).toEqual([
      "change_direction",
      "divide_pipeline",
      "split_node",
    ]);
    for (const envelope of envelopes) {
      expect((envelope.body as { user: string }).user).toBe("maria");
    }
    // statistics panel model mirrored /api/stats after each success
    expect(h.statsSeen).toHaveLength(3);
    for (const stats of h.statsSeen) {
      expect(stats).toEqual(sampleStats());
    }
  });

  it("a divide click off any pipeline posts nothing", async () => {
    const h = makeHarness();
    h.controller.setTool("divide_pipeline");
    await h.controller.handleMapClick({ lnglat: [13.0, 46.0] });
    expect(h.server.commandEnvelopes).toHaveLength(0);
  });

  it("server errors surface verbatim and trigger no refetch", async () => {
    const h = makeHarness();
    h.server.commandResponses.push({
      status: "error",
      error: { kind: "SplitAtEndpoint", message: "split point coincides with the end node" },
    });
    h.controller.setTool("divide_pipeline");
    await h.controller.handleMapClick({ lnglat: [13.8, 46.6], pipeline: "pipe_1" });
    expect(h.errors).toEqual(["SplitAtEndpoint: split point coincides with the end node"]);
    expect(h.statsSeen).toHaveLength(0);
  });
});

describe("per-tool envelopes", () => {
  it("change_direction maps a click directly", async () => {
    const h = makeHarness();
    h.controller.setTool("change_direction");
    await h.controller.handleMapClick({ lnglat: [0, 0], pipeline: "pipe_2" });
    expect(h.server.commandEnvelopes[0].body).toEqual({
      op: "change_direction",
      params: { pipeline_id: "pipe_2" },
      user: "maria",
    });
  });

  it("split_node assignment is total over incidents and attachments", async () => {
    const h = makeHarness();
    // degree-3 node with one attached compressor
    expect(incidentPipelines(h.data, "node_2")).toEqual(["pipe_1", "pipe_2", "pipe_3"]);
    expect(attachedElements(h.data, "node_2")).toEqual(["compressor_stations_1"]);
    h.controller.setTool("split_node");
    h.prompter.numbers = [2];
    h.prompter.assignments = [
      { pipe_1: 0, pipe_2: 1, pipe_3: 1, compressor_stations_1: 0 },
    ];
    await h.controller.handleMapClick({ lnglat: [14.0, 46.7], node: "node_2" });
    const body = h.server.commandEnvelopes[0].body as {
      params: { assignment: Record<string, number>; subnode_count: number };
    };
    expect(Object.keys(body.params.assignment).sort()).toEqual([
      "compressor_stations_1",
      "pipe_1",
      "pipe_2",
      "pipe_3",
    ]);
    expect(body.params.subnode_count).toBe(2);
  });

  it("add_pipeline collects route clicks and node snaps", async () => {
    const h = makeHarness();
    h.controller.setTool("add_pipeline");
    await h.controller.handleMapClick({ lnglat: [13.8, 46.6], node: "node_1" });
    await h.controller.handleMapClick({ lnglat: [13.9, 46.62] });
    await h.controller.handleMapClick({ lnglat: [14.05, 46.55] });
    h.prompter.texts = ["hydrogen"];
    await h.controller.finishGesture();
    expect(h.server.commandEnvelopes[0].body).toEqual({
      op: "add_pipeline",
      params: {
        route: [
          [13.8, 46.6],
          [13.9, 46.62],
          [14.05, 46.55],
        ],
        start: "node_1",
        end: "new",
        sublayer: "hydrogen",
        attributes: {},
      },
      user: "maria",
    });
  });

  it("switch_sublayer posts selected ids once each", async () => {
    const h = makeHarness();
    h.controller.setTool("switch_sublayer");
    await h.controller.handleMapClick({ lnglat: [0, 0], pipeline: "pipe_1" });
    await h.controller.handleMapClick({ lnglat: [0, 0], pipeline: "pipe_2" });
    await h.controller.handleMapClick({ lnglat: [0, 0], pipeline: "pipe_1" });
    h.prompter.texts = ["hydrogen"];
    await h.controller.finishGesture();
    const body = h.server.commandEnvelopes[0].body as {
      params: { pipeline_ids: string[]; create_if_missing: boolean };
    };
    expect(body.params.pipeline_ids).toEqual(["pipe_1", "pipe_2"]);
    expect(body.params.create_if_missing).toBe(true);
  });

  it("guarded node delete asks before cascading", async () => {
    const h = makeHarness();
    h.controller.setTool("delete_element");
    h.prompter.confirmations = [true, true];
    await h.controller.handleMapClick({ lnglat: [14.0, 46.7], node: "node_2" });
    expect(h.server.commandEnvelopes[0].body).toEqual({
      op: "delete_element",
      params: { id: "node_2", cascade: true },
      user: "maria",
    });
  });

  it("declining the cascade posts nothing", async () => {
    const h = makeHarness();
    h.controller.setTool("delete_element");
    h.prompter.confirmations = [false];
    await h.controller.handleMapClick({ lnglat: [14.0, 46.7], node: "node_2" });
    expect(h.server.commandEnvelopes).toHaveLength(0);
  });

  it("info mode posts only changed attribute keys", async () => {
    const h = makeHarness();
    h.controller.setTool("info_mode");
    h.prompter.attributeAnswers = [{ source: "survey" }];
    await h.controller.handleMapClick({ lnglat: [0, 0], pipeline: "pipe_1" });
    expect(h.server.commandEnvelopes[0].body).toEqual({
      op: "set_element_attributes",
      params: { id: "pipe_1", updates: { source: "survey" } },
      user: "maria",
    });
  });

  it("integrate posts the parsed external bundle", async () => {
    const h = makeHarness();
    const external = { nodes: { type: "FeatureCollection", features: [] } };
    await h.controller.integrateExternal(external, 0.5);
    expect(h.server.commandEnvelopes[0].body).toEqual({
      op: "integrate_dataset",
      params: { external, snap_tolerance_km: 0.5 },
      user: "maria",
    });
  });

  it("add_plan needs at least three landmark pairs", async () => {
    const h = makeHarness();
    h.controller.setTool("add_plan");
    await h.controller.handleMapClick({ lnglat: [13.5, 46.8] });
    await h.controller.handleMapClick({ lnglat: [13.9, 46.9] });
    h.prompter.texts = ["/data/plan.png", "0,0", "400,0"];
    await h.controller.finishGesture();
    expect(h.server.commandEnvelopes).toHaveLength(0);
    expect(h.errors.some((e) => e.includes("three landmark pairs"))).toBe(true);
  });
});

describe("pending input lifecycle", () => {
  it("tool switch clears buffered clicks", async () => {
    const h = makeHarness();
    h.controller.setTool("add_pipeline");
    await h.controller.handleMapClick({ lnglat: [13.8, 46.6] });
    expect(h.controller.state.pendingInputs).toHaveLength(1);
    h.controller.setTool("divide_pipeline");
    expect(h.controller.state.pendingInputs).toHaveLength(0);
  });

  it("posting a command clears the buffer", async () => {
    const h = makeHarness();
    h.controller.setTool("switch_sublayer");
    await h.controller.handleMapClick({ lnglat: [0, 0], pipeline: "pipe_1" });
    h.prompter.texts = ["hydrogen"];
    await h.controller.finishGesture();
    expect(h.controller.state.pendingInputs).toHaveLength(0);
  });
});
