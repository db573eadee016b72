// Side panels: legend with visibility toggles and live statistics, the
// citation/licensing section, contributor display and journal ticker.

import type { ApiClient } from "./api";
import type { DatasetPayload, JournalEntry, NetworkStatistics } from "./types";

export class StatisticsPanel {
  current: NetworkStatistics | null = null;
  stale = false;

  constructor(private readonly container: HTMLElement, private readonly client: ApiClient) {}

  /** Mirror GET /api/stats; called once at startup and after every ok command. */
  async refresh(): Promise<void> {
    try {
      this.current = await this.client.stats();
      this.stale = false;
    } catch {
      this.stale = true;
    }
    this.renderInto(this.container);
  }

  renderInto(container: HTMLElement): void {
    if (!this.current) {
      container.innerHTML = `<p class="muted">statistics unavailable</p>`;
      return;
    }
    const s = this.current;
    const sublayers = Object.entries(s.pipelines_by_sublayer)
      .map(
        ([name, entry]) =>
          `<tr><td>${name}</td><td>${entry.count}</td><td>${entry.total_length_km.toFixed(1)} km</td></tr>`,
      )
      .join("");
    const counts = Object.entries(s.element_counts)
      .map(([layer, count]) => `<tr><td>${layer}</td><td colspan="2">${count}</td></tr>`)
      .join("");
    container.innerHTML = `
      ${this.stale ? '<span class="badge stale">stale</span>' : ""}
      <p><strong>${s.total_length_km.toFixed(1)} km</strong> total pipeline length</p>
      <table><tr><th>sublayer</th><th>#</th><th>length</th></tr>${sublayers}</table>
      <table><tr><th>layer</th><th colspan="2">elements</th></tr>${counts}</table>
      <p>${s.data_source_count} documented data source(s): ${s.data_sources.join(", ")}</p>`;
  }
}

export class LegendPanel {
  private visibility = new Map<string, boolean>();

  constructor(
    private readonly container: HTMLElement,
    private readonly onToggle: (layer: string, visible: boolean) => void,
  ) {}

  render(data: DatasetPayload): void {
    this.container.innerHTML = "";
    for (const cfg of data.configs) {
      if (!this.visibility.has(cfg.layer)) {
        this.visibility.set(cfg.layer, cfg.visible_default);
      }
      const row = document.createElement("label");
      row.className = "legend-row";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = this.visibility.get(cfg.layer)!;
      box.addEventListener("change", () => {
        this.visibility.set(cfg.layer, box.checked);
        this.onToggle(cfg.layer, box.checked);
      });
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.background = cfg.color;
      const label = document.createElement("span");
      const count = this.countFor(data, cfg.layer);
      label.textContent = `${cfg.legend_label} (${count})`;
      row.append(box, swatch, label);
      this.container.append(row);
    }
    for (const overlay of data.plans) {
      if (!this.visibility.has(overlay.id)) this.visibility.set(overlay.id, true);
      const row = document.createElement("label");
      row.className = "legend-row";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = this.visibility.get(overlay.id)!;
      box.addEventListener("change", () => {
        this.visibility.set(overlay.id, box.checked);
        this.onToggle(overlay.id, box.checked);
      });
      const label = document.createElement("span");
      label.textContent = `plan: ${overlay.image_file}`;
      row.append(box, label);
      this.container.append(row);
    }
  }

  private countFor(data: DatasetPayload, layer: string): number {
    if (layer === "nodes") return data.nodes.features.length;
    if (layer === "pipelines") return data.pipelines.features.length;
    if (layer in data.layers) return data.layers[layer].features.length;
    return data.pipelines.features.filter((f) => f.properties.sublayer === layer).length;
  }
}

export class CitationPanel {
  constructor(private readonly container: HTMLElement) {}

  render(licenseText: string): void {
    const pre = document.createElement("pre");
    pre.textContent = licenseText || "(no licensing information recorded)";
    this.container.innerHTML = "<h3>Data, citation &amp; licensing</h3>";
    this.container.append(pre);
  }
}

export class ContributorPanel {
  private lastSeen = 0;

  constructor(
    private readonly container: HTMLElement,
    private readonly client: ApiClient,
    private readonly onForeignEdits: () => void,
  ) {}

  setUser(user: string): void {
    const holder = this.container.querySelector(".active-user")!;
    holder.textContent = user;
  }

  start(initialSeq: number, intervalMs = 4000): void {
    this.lastSeen = initialSeq;
    window.setInterval(() => void this.poll(), intervalMs);
  }

  noteLocalSeq(seq: number): void {
    this.lastSeen = Math.max(this.lastSeen, seq);
  }

  private async poll(): Promise<void> {
    let entries: JournalEntry[];
    try {
      entries = await this.client.journalSince(this.lastSeen);
    } catch {
      return;
    }
    if (entries.length === 0) return;
    this.lastSeen = entries[entries.length - 1].seq;
    this.renderEntries(entries);
    this.onForeignEdits();
  }

  renderEntries(entries: JournalEntry[]): void {
    const log = this.container.querySelector(".journal-log")!;
    for (const entry of entries.slice(-8)) {
      const line = document.createElement("div");
      line.textContent = `#${entry.seq} ${entry.user}: ${entry.op}`;
      log.prepend(line);
    }
    while (log.childElementCount > 8) log.lastElementChild!.remove();
  }
}
