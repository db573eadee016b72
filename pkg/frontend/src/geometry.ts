// Web-mercator math and screen-space hit testing for the canvas map.

import type { LonLat } from "./types";

export const TILE_SIZE = 256;

export interface View {
  centerLon: number;
  centerLat: number;
  zoom: number; // fractional zoom allowed
  width: number;
  height: number;
}

export function lonToWorldX(lon: number, zoom: number): number {
  return ((lon + 180) / 360) * TILE_SIZE * Math.pow(2, zoom);
}

export function latToWorldY(lat: number, zoom: number): number {
  const clamped = Math.max(-85.05112878, Math.min(85.05112878, lat));
  const rad = (clamped * Math.PI) / 180;
  const merc = Math.log(Math.tan(rad) + 1 / Math.cos(rad));
  return ((1 - merc / Math.PI) / 2) * TILE_SIZE * Math.pow(2, zoom);
}

export function worldXToLon(x: number, zoom: number): number {
  return (x / (TILE_SIZE * Math.pow(2, zoom))) * 360 - 180;
}

export function worldYToLat(y: number, zoom: number): number {
  const n = Math.PI - (2 * Math.PI * y) / (TILE_SIZE * Math.pow(2, zoom));
  return (180 / Math.PI) * Math.atan(0.5 * (Math.exp(n) - Math.exp(-n)));
}

export function toScreen(view: View, lnglat: LonLat): [number, number] {
  const cx = lonToWorldX(view.centerLon, view.zoom);
  const cy = latToWorldY(view.centerLat, view.zoom);
  return [
    lonToWorldX(lnglat[0], view.zoom) - cx + view.width / 2,
    latToWorldY(lnglat[1], view.zoom) - cy + view.height / 2,
  ];
}

export function toLonLat(view: View, px: number, py: number): LonLat {
  const cx = lonToWorldX(view.centerLon, view.zoom);
  const cy = latToWorldY(view.centerLat, view.zoom);
  return [
    worldXToLon(cx + px - view.width / 2, view.zoom),
    worldYToLat(cy + py - view.height / 2, view.zoom),
  ];
}

/** Squared distance from point p to segment ab, all in screen pixels. */
export function segmentDistanceSq(
  p: [number, number],
  a: [number, number],
  b: [number, number],
): number {
  const dx = b[0] - a[0];
  const dy = b[1] - a[1];
  const denom = dx * dx + dy * dy;
  let t = 0;
  if (denom > 0) {
    t = Math.max(0, Math.min(1, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / denom));
  }
  const qx = a[0] + t * dx;
  const qy = a[1] + t * dy;
  return (p[0] - qx) ** 2 + (p[1] - qy) ** 2;
}

export function boundsOf(coordinates: LonLat[]): {
  minLon: number;
  minLat: number;
  maxLon: number;
  maxLat: number;
} {
  let minLon = Infinity;
  let minLat = Infinity;
  let maxLon = -Infinity;
  let maxLat = -Infinity;
  for (const [lon, lat] of coordinates) {
    minLon = Math.min(minLon, lon);
    minLat = Math.min(minLat, lat);
    maxLon = Math.max(maxLon, lon);
    maxLat = Math.max(maxLat, lat);
  }
  return { minLon, minLat, maxLon, maxLat };
}
