// Tool selection and per-tool input buffering. Exactly one tool is active
// at a time; switching always drops pending inputs.

export const TOOL_NAMES = [
  "info_mode",
  "add_pipeline",
  "divide_pipeline",
  "split_node",
  "change_direction",
  "add_short_pipe",
  "reconnect",
  "move_node",
  "edit_route",
  "delete_element",
  "distribute_compressors",
  "switch_sublayer",
  "group_pipelines",
  "add_infrastructure",
  "define_element_type",
  "manage_attribute",
  "add_plan",
  "integrate",
] as const;

export type ToolName = (typeof TOOL_NAMES)[number];

export interface MapHit {
  lnglat: [number, number];
  node?: string;
  pipeline?: string;
  pipelineEndpoint?: "start" | "end";
  element?: string;
}

export class ToolState {
  activeTool: ToolName = "info_mode";
  pendingInputs: MapHit[] = [];
  user = "";

  setTool(tool: ToolName): void {
    if (!TOOL_NAMES.includes(tool)) {
      throw new Error(`unknown tool: ${tool}`);
    }
    this.activeTool = tool;
    this.pendingInputs = [];
  }

  push(hit: MapHit): void {
    this.pendingInputs.push(hit);
  }

  clear(): void {
    this.pendingInputs = [];
  }
}
