// Wire formats of the gastopo HTTP API.

export type LonLat = [number, number];

export interface PointGeometry {
  type: "Point";
  coordinates: LonLat;
}

export interface LineGeometry {
  type: "LineString";
  coordinates: LonLat[];
}

export interface Feature {
  type: "Feature";
  geometry: PointGeometry | LineGeometry;
  properties: Record<string, unknown> & { id: string };
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: Feature[];
}

export interface LayerConfig {
  layer: string;
  kind: string; // "node" | "pipeline" | element kind
  legend_label: string;
  color: string;
  marker: string;
  visible_default: boolean;
  sublayer_of: string | null;
}

export interface AffineTransform {
  a: number;
  b: number;
  c: number;
  d: number;
  e: number;
  f: number;
  rms_residual_deg: number;
}

export interface PlanOverlay {
  id: string;
  image_file: string;
  opacity: number;
  source_note: string;
  transform: AffineTransform;
}

export interface GroupRecord {
  id: string;
  name: string;
  member_ids: string[];
  total_length_km: number;
}

export interface DatasetPayload {
  nodes: FeatureCollection;
  pipelines: FeatureCollection;
  layers: Record<string, FeatureCollection>;
  configs: LayerConfig[];
  schemas: Record<string, { key: string; default: unknown }[]>;
  plans: PlanOverlay[];
  groups: GroupRecord[];
  license: string;
  journal_seq: number;
}

export interface SublayerStats {
  count: number;
  total_length_km: number;
}

export interface NetworkStatistics {
  data_source_count: number;
  data_sources: string[];
  element_counts: Record<string, number>;
  pipelines_by_sublayer: Record<string, SublayerStats>;
  total_length_km: number;
}

export interface ComponentReport {
  node_ids: string[];
  pipeline_ids: string[];
  total_length_km: number;
  dominant_sublayer: string | null;
}

export interface TopologyReport {
  component_count: number;
  components: ComponentReport[];
  isolated_nodes: string[];
  dangling_references: { object_id: string; field: string; missing_id: string }[];
}

export interface JournalEntry {
  seq: number;
  timestamp: string;
  user: string;
  op: string;
  params: Record<string, unknown>;
  affected_ids: string[];
}

export interface CommandEnvelope {
  op: string;
  params: Record<string, unknown>;
  user: string;
}

export interface CommandError {
  kind: string;
  message: string;
}

export interface CommandResult {
  status: "ok" | "error";
  seq?: number;
  affected_ids?: string[];
  payload?: unknown;
  error?: CommandError;
}

export interface ExportResult {
  written: string[];
}
