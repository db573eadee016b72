// Workspace bootstrap: wire the map, panels, tool palette and controller.

import { ApiClient } from "./api";
import { CanvasMap } from "./map";
import { CitationPanel, ContributorPanel, LegendPanel, StatisticsPanel } from "./panels";
import { TOOL_NAMES, ToolName, ToolState } from "./state";
import { Prompter, ToolController } from "./tools";
import type { CommandResult, DatasetPayload } from "./types";

const TOOL_LABELS: Record<ToolName, string> = {
  info_mode: "Info Mode",
  add_pipeline: "Add Pipeline",
  divide_pipeline: "Divide Pipeline",
  split_node: "Split Node",
  change_direction: "Change Direction",
  add_short_pipe: "Short-Pipe",
  reconnect: "Reconnect Infrastructure",
  move_node: "Move Node",
  edit_route: "Edit Geometry",
  delete_element: "Delete",
  distribute_compressors: "Distribute Compressors",
  switch_sublayer: "Switch Sublayers",
  group_pipelines: "Group Pipelines",
  add_infrastructure: "Add Infrastructure",
  define_element_type: "Add New Element",
  manage_attribute: "Manage Attributes",
  add_plan: "Add Infrastructure Plans",
  integrate: "Integrate Dataset",
};

class DialogPrompter implements Prompter {
  async askNumber(label: string, initial = 0): Promise<number | null> {
    const raw = window.prompt(label, String(initial));
    if (raw === null) return null;
    const value = Number(raw);
    return Number.isFinite(value) ? value : null;
  }

  async askText(label: string, initial = ""): Promise<string | null> {
    return window.prompt(label, initial);
  }

  async askChoice(label: string, options: string[]): Promise<string | null> {
    const raw = window.prompt(`${label}\n(${options.join(" | ")})`, options[0] ?? "");
    if (raw === null) return null;
    return options.includes(raw) ? raw : null;
  }

  async confirm(label: string): Promise<boolean> {
    return window.confirm(label);
  }

  async askAssignment(
    nodeId: string,
    members: string[],
    subnodeCount: number,
  ): Promise<Record<string, number> | null> {
    const assignment: Record<string, number> = {};
    for (const member of members) {
      const raw = window.prompt(
        `Splitting ${nodeId}: subnode index for ${member} (0..${subnodeCount - 1})`,
        "0",
      );
      if (raw === null) return null;
      const index = Number(raw);
      if (!Number.isInteger(index) || index < 0 || index >= subnodeCount) return null;
      assignment[member] = index;
    }
    return assignment;
  }

  async askAttributes(
    objectId: string,
    current: Record<string, unknown>,
  ): Promise<Record<string, unknown> | null> {
    const raw = window.prompt(
      `Attributes of ${objectId} (JSON object of keys to change)`,
      JSON.stringify(current),
    );
    if (raw === null) return null;
    try {
      const parsed = JSON.parse(raw) as Record<string, unknown>;
      const updates: Record<string, unknown> = {};
      for (const [key, value] of Object.entries(parsed)) {
        if (JSON.stringify(current[key]) !== JSON.stringify(value)) {
          updates[key] = value;
        }
      }
      return updates;
    } catch {
      return null;
    }
  }
}

function banner(message: string, kind: "error" | "info" = "error"): void {
  const bar = document.getElementById("banner")!;
  bar.textContent = message;
  bar.className = kind;
  bar.style.display = "block";
  window.setTimeout(() => (bar.style.display = "none"), 6000);
}

async function start(): Promise<void> {
  const client = new ApiClient("");
  const state = new ToolState();
  state.user = window.prompt("Contributor name for this session") || "anonymous";

  let data: DatasetPayload;
  try {
    data = await client.dataset();
  } catch (error) {
    banner(`cannot reach the gastopo service: ${error}`);
    return;
  }

  const canvas = document.getElementById("map") as HTMLCanvasElement;
  const mapHolder = document.getElementById("map-holder")!;
  canvas.width = mapHolder.clientWidth;
  canvas.height = mapHolder.clientHeight;

  const statistics = new StatisticsPanel(document.getElementById("statistics")!, client);
  const citation = new CitationPanel(document.getElementById("citation")!);
  const contributor = new ContributorPanel(
    document.getElementById("contributor")!,
    client,
    () => void refetch(),
  );
  const legend = new LegendPanel(document.getElementById("legend")!, (layer, visible) =>
    map.setLayerVisible(layer, visible),
  );

  const map = new CanvasMap(
    canvas,
    {
      onClick: (hit) => void controller.handleMapClick(hit),
      onDoubleClick: () => void controller.finishGesture(),
    },
    (file) => client.planUrl(file),
  );

  async function refetch(): Promise<void> {
    data = await client.dataset();
    map.setData(data);
    legend.render(data);
    citation.render(data.license);
    await statistics.refresh();
  }

  const controller = new ToolController(
    client,
    state,
    new DialogPrompter(),
    {
      async onCommandApplied(result: CommandResult) {
        if (result.seq !== undefined) contributor.noteLocalSeq(result.seq);
        await refetch();
      },
      onError: (message) => banner(message),
      onPendingChanged: (pending) => map.setPendingMarkers(pending.map((p) => p.lnglat)),
    },
    () => data,
  );

  const palette = document.getElementById("tools")!;
  for (const tool of TOOL_NAMES) {
    const button = document.createElement("button");
    button.textContent = TOOL_LABELS[tool];
    button.dataset.tool = tool;
    if (tool === state.activeTool) button.classList.add("active");
    button.addEventListener("click", () => {
      controller.setTool(tool);
      palette.querySelectorAll("button").forEach((b) => b.classList.remove("active"));
      button.classList.add("active");
      if (tool === "integrate") {
        document.getElementById("integrate-file")!.click();
      }
    });
    palette.append(button);
  }

  const fileInput = document.getElementById("integrate-file") as HTMLInputElement;
  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    void file.text().then((text) => {
      try {
        void controller.integrateExternal(JSON.parse(text));
      } catch (error) {
        banner(`not a JSON feature-collection bundle: ${error}`);
      }
    });
    fileInput.value = "";
  });

  document.getElementById("finish")!.addEventListener("click", () => {
    void controller.finishGesture();
  });
  document.getElementById("export")!.addEventListener("click", () => {
    client
      .exportProject()
      .then((r) => banner(`exported ${r.written.length} files`, "info"))
      .catch((error) => banner(`export failed: ${error}`));
  });

  contributor.setUser(state.user);
  map.setData(data);
  legend.render(data);
  citation.render(data.license);
  await statistics.refresh();
  contributor.start(data.journal_seq);
}

window.addEventListener("DOMContentLoaded", () => void start());
