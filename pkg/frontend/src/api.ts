// Typed client for the gastopo service. Every dataset mutation in the UI
// funnels through postCommand; nothing else issues writing requests.

import type {
  CommandEnvelope,
  CommandResult,
  DatasetPayload,
  ExportResult,
  FeatureCollection,
  JournalEntry,
  NetworkStatistics,
  TopologyReport,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = "", fetchImpl: FetchLike = (...args) => fetch(...args)) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`);
    if (!response.ok) {
      throw new Error(`GET ${path} failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  dataset(): Promise<DatasetPayload> {
    return this.getJson("/api/dataset");
  }

  layer(name: string): Promise<FeatureCollection> {
    return this.getJson(`/api/layers/${encodeURIComponent(name)}`);
  }

  stats(): Promise<NetworkStatistics> {
    return this.getJson("/api/stats");
  }

  topology(): Promise<TopologyReport> {
    return this.getJson("/api/topology");
  }

  journalSince(seq: number): Promise<JournalEntry[]> {
    return this.getJson(`/api/journal?since=${seq}`);
  }

  planUrl(file: string): string {
    return `${this.base}/plans/${encodeURIComponent(file)}`;
  }

  async postCommand(envelope: CommandEnvelope): Promise<CommandResult> {
    const response = await this.fetchImpl(`${this.base}/api/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(envelope),
    });
    return (await response.json()) as CommandResult;
  }

  async exportProject(): Promise<ExportResult> {
    const response = await this.fetchImpl(`${this.base}/api/export`, { method: "POST" });
    if (!response.ok) {
      throw new Error(`export failed: ${response.status}`);
    }
    return (await response.json()) as ExportResult;
  }
}
