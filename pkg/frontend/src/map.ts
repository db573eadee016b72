// Canvas slippy map: OSM raster base, vector layers styled per LayerConfig,
// semi-transparent plan overlays, and hit testing for the tools.

import {
  TILE_SIZE,
  View,
  boundsOf,
  segmentDistanceSq,
  toLonLat,
  toScreen,
} from "./geometry";
import type { MapHit } from "./state";
import type { DatasetPayload, Feature, LonLat, PlanOverlay } from "./types";

const HIT_RADIUS_PX = 8;
const TILE_URL = (z: number, x: number, y: number) =>
  `https://tile.openstreetmap.org/${z}/${x}/${y}.png`;

export interface MapCallbacks {
  onClick(hit: MapHit): void;
  onDoubleClick(): void;
}

export class CanvasMap {
  private view: View;
  private data: DatasetPayload | null = null;
  private hidden = new Set<string>();
  private tiles = new Map<string, HTMLImageElement>();
  private overlayImages = new Map<string, HTMLImageElement>();
  private pendingMarkers: LonLat[] = [];
  private readonly ctx: CanvasRenderingContext2D;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly callbacks: MapCallbacks,
    private readonly planUrl: (file: string) => string,
  ) {
    this.view = {
      centerLon: 14.0,
      centerLat: 46.7,
      zoom: 9,
      width: canvas.width,
      height: canvas.height,
    };
    this.ctx = canvas.getContext("2d")!;
    this.bindEvents();
  }

  setData(data: DatasetPayload): void {
    const firstLoad = this.data === null;
    this.data = data;
    if (firstLoad && data.nodes.features.length > 0) {
      this.fitToData();
    }
    for (const overlay of data.plans) {
      if (!this.overlayImages.has(overlay.image_file)) {
        const image = new Image();
        image.onload = () => this.render();
        image.src = this.planUrl(overlay.image_file);
        this.overlayImages.set(overlay.image_file, image);
      }
    }
    this.render();
  }

  setLayerVisible(layer: string, visible: boolean): void {
    if (visible) this.hidden.delete(layer);
    else this.hidden.add(layer);
    this.render();
  }

  setPendingMarkers(markers: LonLat[]): void {
    this.pendingMarkers = markers;
    this.render();
  }

  private fitToData(): void {
    const coords: LonLat[] = [];
    for (const f of this.data!.nodes.features) {
      if (f.geometry.type === "Point") coords.push(f.geometry.coordinates);
    }
    if (coords.length === 0) return;
    const box = boundsOf(coords);
    this.view.centerLon = (box.minLon + box.maxLon) / 2;
    this.view.centerLat = (box.minLat + box.maxLat) / 2;
    for (let zoom = 15; zoom >= 3; zoom -= 0.25) {
      const candidate = { ...this.view, zoom };
      const [x0, y0] = toScreen(candidate, [box.minLon, box.maxLat]);
      const [x1, y1] = toScreen(candidate, [box.maxLon, box.minLat]);
      if (x1 - x0 < this.view.width * 0.8 && y1 - y0 < this.view.height * 0.8) {
        this.view.zoom = zoom;
        return;
      }
    }
  }

  private bindEvents(): void {
    let dragging = false;
    let moved = false;
    let last: [number, number] = [0, 0];

    this.canvas.addEventListener("mousedown", (e) => {
      dragging = true;
      moved = false;
      last = [e.offsetX, e.offsetY];
    });
    this.canvas.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      const dx = e.offsetX - last[0];
      const dy = e.offsetY - last[1];
      if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
      const before = toLonLat(this.view, this.view.width / 2 - dx, this.view.height / 2 - dy);
      this.view.centerLon = before[0];
      this.view.centerLat = before[1];
      last = [e.offsetX, e.offsetY];
      this.render();
    });
    window.addEventListener("mouseup", () => {
      dragging = false;
    });
    this.canvas.addEventListener("click", (e) => {
      if (moved) return;
      this.callbacks.onClick(this.hitTest(e.offsetX, e.offsetY));
    });
    this.canvas.addEventListener("dblclick", (e) => {
      e.preventDefault();
      this.callbacks.onDoubleClick();
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      const factor = e.deltaY < 0 ? 0.5 : -0.5;
      const anchor = toLonLat(this.view, e.offsetX, e.offsetY);
      this.view.zoom = Math.max(3, Math.min(17, this.view.zoom + factor));
      // keep the cursor position stable while zooming
      const after = toScreen(this.view, anchor);
      const [cx, cy] = toLonLat(
        this.view,
        this.view.width / 2 + (after[0] - e.offsetX),
        this.view.height / 2 + (after[1] - e.offsetY),
      );
      this.view.centerLon = cx;
      this.view.centerLat = cy;
      this.render();
    });
  }

  hitTest(px: number, py: number): MapHit {
    const hit: MapHit = { lnglat: toLonLat(this.view, px, py) };
    if (!this.data) return hit;
    const radiusSq = HIT_RADIUS_PX * HIT_RADIUS_PX;

    let bestNode: { id: string; d: number } | null = null;
    if (!this.hidden.has("nodes")) {
      for (const f of this.data.nodes.features) {
        if (f.geometry.type !== "Point") continue;
        const [x, y] = toScreen(this.view, f.geometry.coordinates);
        const d = (x - px) ** 2 + (y - py) ** 2;
        if (d <= radiusSq && (!bestNode || d < bestNode.d)) {
          bestNode = { id: f.properties.id, d };
        }
      }
    }
    if (bestNode) hit.node = bestNode.id;

    let bestPipe: { f: Feature; d: number } | null = null;
    for (const f of this.data.pipelines.features) {
      if (f.geometry.type !== "LineString") continue;
      if (this.hidden.has(String(f.properties.sublayer))) continue;
      const coords = f.geometry.coordinates.map((c) => toScreen(this.view, c));
      for (let i = 0; i < coords.length - 1; i++) {
        const d = segmentDistanceSq([px, py], coords[i], coords[i + 1]);
        if (d <= radiusSq && (!bestPipe || d < bestPipe.d)) {
          bestPipe = { f, d };
        }
      }
    }
    if (bestPipe) {
      hit.pipeline = bestPipe.f.properties.id;
      const line = bestPipe.f.geometry as { coordinates: LonLat[] };
      const start = toScreen(this.view, line.coordinates[0]);
      const end = toScreen(this.view, line.coordinates[line.coordinates.length - 1]);
      const dStart = (start[0] - px) ** 2 + (start[1] - py) ** 2;
      const dEnd = (end[0] - px) ** 2 + (end[1] - py) ** 2;
      if (Math.min(dStart, dEnd) <= radiusSq) {
        hit.pipelineEndpoint = dStart <= dEnd ? "start" : "end";
      }
    }

    let bestElement: { id: string; d: number } | null = null;
    for (const [layer, collection] of Object.entries(this.data.layers)) {
      if (this.hidden.has(layer)) continue;
      for (const f of collection.features) {
        if (f.geometry.type !== "Point") continue;
        const [x, y] = toScreen(this.view, f.geometry.coordinates);
        const d = (x - px) ** 2 + (y - py) ** 2;
        if (d <= radiusSq && (!bestElement || d < bestElement.d)) {
          bestElement = { id: f.properties.id, d };
        }
      }
    }
    if (bestElement) hit.element = bestElement.id;
    return hit;
  }

  // --- rendering ----------------------------------------------------------

  render(): void {
    const { ctx, view } = this;
    ctx.fillStyle = "#dde7ee";
    ctx.fillRect(0, 0, view.width, view.height);
    this.drawTiles();
    if (!this.data) return;
    this.drawOverlays();
    this.drawPipelines();
    this.drawElements();
    this.drawNodes();
    this.drawPending();
  }

  private drawTiles(): void {
    const z = Math.round(this.view.zoom);
    const scale = Math.pow(2, this.view.zoom - z);
    const worldAt = (lnglat: LonLat) => toScreen(this.view, lnglat);
    const topLeft = toLonLat(this.view, 0, 0);
    const bottomRight = toLonLat(this.view, this.view.width, this.view.height);
    const n = Math.pow(2, z);
    const x0 = Math.floor(((topLeft[0] + 180) / 360) * n);
    const x1 = Math.floor(((bottomRight[0] + 180) / 360) * n);
    const latRad = (lat: number) => (lat * Math.PI) / 180;
    const tileY = (lat: number) =>
      Math.floor(
        ((1 - Math.log(Math.tan(latRad(lat)) + 1 / Math.cos(latRad(lat))) / Math.PI) / 2) * n,
      );
    const y0 = tileY(topLeft[1]);
    const y1 = tileY(bottomRight[1]);
    for (let x = Math.max(0, x0); x <= Math.min(n - 1, x1); x++) {
      for (let y = Math.max(0, y0); y <= Math.min(n - 1, y1); y++) {
        const key = `${z}/${x}/${y}`;
        let tile = this.tiles.get(key);
        if (!tile) {
          tile = new Image();
          tile.crossOrigin = "anonymous";
          tile.onload = () => this.render();
          tile.src = TILE_URL(z, x, y);
          this.tiles.set(key, tile);
        }
        if (tile.complete && tile.naturalWidth > 0) {
          const lon = (x / n) * 360 - 180;
          const mercN = Math.PI - (2 * Math.PI * y) / n;
          const lat = (180 / Math.PI) * Math.atan(0.5 * (Math.exp(mercN) - Math.exp(-mercN)));
          const [sx, sy] = worldAt([lon, lat]);
          this.ctx.drawImage(tile, sx, sy, TILE_SIZE * scale, TILE_SIZE * scale);
        }
      }
    }
  }

  private drawOverlays(): void {
    for (const overlay of this.data!.plans) {
      if (this.hidden.has(overlay.id)) continue;
      const image = this.overlayImages.get(overlay.image_file);
      if (!image || !image.complete || image.naturalWidth === 0) continue;
      this.drawGeoreferencedImage(image, overlay);
    }
  }

  private drawGeoreferencedImage(image: HTMLImageElement, overlay: PlanOverlay): void {
    // compose pixel->world affine with world->screen at three corners; over a
    // plan's extent the mercator bend is negligible, so an affine fit suffices
    const t = overlay.transform;
    const toWorld = (px: number, py: number): LonLat => [
      t.a * px + t.b * py + t.c,
      t.d * px + t.e * py + t.f,
    ];
    const p0 = toScreen(this.view, toWorld(0, 0));
    const p1 = toScreen(this.view, toWorld(image.naturalWidth, 0));
    const p2 = toScreen(this.view, toWorld(0, image.naturalHeight));
    const a = (p1[0] - p0[0]) / image.naturalWidth;
    const b = (p1[1] - p0[1]) / image.naturalWidth;
    const c = (p2[0] - p0[0]) / image.naturalHeight;
    const d = (p2[1] - p0[1]) / image.naturalHeight;
    this.ctx.save();
    this.ctx.globalAlpha = overlay.opacity;
    this.ctx.setTransform(a, b, c, d, p0[0], p0[1]);
    this.ctx.drawImage(image, 0, 0);
    this.ctx.restore();
  }

  private colorOf(layer: string, fallback = "#888888"): string {
    const cfg = this.data!.configs.find((c) => c.layer === layer);
    return cfg ? cfg.color : fallback;
  }

  private drawPipelines(): void {
    for (const f of this.data!.pipelines.features) {
      if (f.geometry.type !== "LineString") continue;
      const sublayer = String(f.properties.sublayer);
      if (this.hidden.has(sublayer)) continue;
      const coords = f.geometry.coordinates.map((c) => toScreen(this.view, c));
      this.ctx.beginPath();
      this.ctx.moveTo(coords[0][0], coords[0][1]);
      for (const [x, y] of coords.slice(1)) this.ctx.lineTo(x, y);
      this.ctx.strokeStyle = this.colorOf(sublayer, this.colorOf("pipelines"));
      this.ctx.lineWidth = f.properties.is_short_pipe ? 1.5 : 2.5;
      this.ctx.setLineDash(f.properties.is_short_pipe ? [4, 4] : []);
      this.ctx.stroke();
      this.ctx.setLineDash([]);
    }
  }

  private drawNodes(): void {
    if (this.hidden.has("nodes")) return;
    this.ctx.fillStyle = this.colorOf("nodes", "#1f4e79");
    for (const f of this.data!.nodes.features) {
      if (f.geometry.type !== "Point") continue;
      const [x, y] = toScreen(this.view, f.geometry.coordinates);
      this.ctx.beginPath();
      this.ctx.arc(x, y, 4, 0, 2 * Math.PI);
      this.ctx.fill();
    }
  }

  private drawElements(): void {
    for (const [layer, collection] of Object.entries(this.data!.layers)) {
      if (this.hidden.has(layer)) continue;
      const color = this.colorOf(layer);
      for (const f of collection.features) {
        if (f.geometry.type === "Point") {
          const [x, y] = toScreen(this.view, f.geometry.coordinates);
          this.ctx.fillStyle = color;
          this.ctx.fillRect(x - 4, y - 4, 8, 8);
        } else {
          const coords = f.geometry.coordinates.map((c) => toScreen(this.view, c));
          this.ctx.beginPath();
          this.ctx.moveTo(coords[0][0], coords[0][1]);
          for (const [x, y] of coords.slice(1)) this.ctx.lineTo(x, y);
          this.ctx.strokeStyle = color;
          this.ctx.lineWidth = 2;
          this.ctx.stroke();
        }
      }
    }
  }

  private drawPending(): void {
    if (this.pendingMarkers.length === 0) return;
    this.ctx.strokeStyle = "#ff8c00";
    this.ctx.fillStyle = "#ff8c00";
    const pts = this.pendingMarkers.map((m) => toScreen(this.view, m));
    this.ctx.beginPath();
    this.ctx.moveTo(pts[0][0], pts[0][1]);
    for (const [x, y] of pts.slice(1)) this.ctx.lineTo(x, y);
    this.ctx.setLineDash([6, 4]);
    this.ctx.stroke();
    this.ctx.setLineDash([]);
    for (const [x, y] of pts) {
      this.ctx.beginPath();
      this.ctx.arc(x, y, 3, 0, 2 * Math.PI);
      this.ctx.fill();
    }
  }
}
