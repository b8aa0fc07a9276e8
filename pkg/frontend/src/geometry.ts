/**
 * Client-side geometry helpers: RLE masks, box math, homography mapping.
 *
 * Masks arrive as column-major counts RLE (first run counts zeros). The
 * homography helpers mirror the server's convention: geometry is stored in
 * RGB coordinates and projected into the thermal view for display, and
 * thermal-view gestures are mapped back before they reach the API.
 */

import type { GeometryJson, RleMask } from "./api.js";

export type Point = { x: number; y: number };
export type Matrix3 = number[][];

export function decodeRle(rle: RleMask): Uint8Array {
  const [height, width] = rle.size;
  const out = new Uint8Array(height * width);
  let pos = 0;
  let value = 0;
  for (const run of rle.counts) {
    if (value) {
      for (let i = 0; i < run; i++) {
        const flat = pos + i;
        const x = Math.floor(flat / height);
        const y = flat % height;
        out[y * width + x] = 1;
      }
    }
    pos += run;
    value ^= 1;
  }
  if (pos !== height * width) {
    throw new Error(`RLE counts sum to ${pos}, expected ${height * width}`);
  }
  return out;
}

export function maskPixelCount(rle: RleMask): number {
  let total = 0;
  let value = 0;
  for (const run of rle.counts) {
    if (value) total += run;
    value ^= 1;
  }
  return total;
}

export function applyHomography(m: Matrix3, p: Point): Point {
  const row0 = m[0]!;
  const row1 = m[1]!;
  const row2 = m[2]!;
  const w = row2[0]! * p.x + row2[1]! * p.y + row2[2]!;
  if (Math.abs(w) < 1e-12) {
    throw new Error(`point (${p.x}, ${p.y}) maps to infinity`);
  }
  return {
    x: (row0[0]! * p.x + row0[1]! * p.y + row0[2]!) / w,
    y: (row1[0]! * p.x + row1[1]! * p.y + row1[2]!) / w,
  };
}

export function identityMatrix(): Matrix3 {
  return [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
  ];
}

/** Axis-aligned hull of the four mapped corners, rounded outward. */
export function mapBox(
  m: Matrix3,
  box: { ul_x: number; ul_y: number; lr_x: number; lr_y: number },
): { ul_x: number; ul_y: number; lr_x: number; lr_y: number } {
  const corners = [
    { x: box.ul_x, y: box.ul_y },
    { x: box.lr_x, y: box.ul_y },
    { x: box.lr_x, y: box.lr_y },
    { x: box.ul_x, y: box.lr_y },
  ].map((c) => applyHomography(m, c));
  const xs = corners.map((c) => c.x);
  const ys = corners.map((c) => c.y);
  const ulX = Math.floor(Math.min(...xs));
  const ulY = Math.floor(Math.min(...ys));
  return {
    ul_x: ulX,
    ul_y: ulY,
    lr_x: Math.max(Math.ceil(Math.max(...xs)), ulX + 1),
    lr_y: Math.max(Math.ceil(Math.max(...ys)), ulY + 1),
  };
}

export function mapGeometry(m: Matrix3, geometry: GeometryJson): GeometryJson {
  if (geometry.type === "box") {
    return { type: "box", ...mapBox(m, geometry) };
  }
  if (geometry.type === "polygon") {
    return {
      type: "polygon",
      points: geometry.points.map(([x, y]) => {
        const p = applyHomography(m, { x, y });
        return [p.x, p.y] as [number, number];
      }),
    };
  }
  return geometry; // masks are blitted with a canvas transform instead
}

export function normalizedBox(a: Point, b: Point): { ul_x: number; ul_y: number; lr_x: number; lr_y: number } | null {
  const ulX = Math.round(Math.min(a.x, b.x));
  const ulY = Math.round(Math.min(a.y, b.y));
  const lrX = Math.round(Math.max(a.x, b.x));
  const lrY = Math.round(Math.max(a.y, b.y));
  if (ulX >= lrX || ulY >= lrY) return null;
  return { ul_x: ulX, ul_y: ulY, lr_x: lrX, lr_y: lrY };
}

export function boxOfGeometry(geometry: GeometryJson): { ul_x: number; ul_y: number; lr_x: number; lr_y: number } | null {
  if (geometry.type === "box") return geometry;
  if (geometry.type === "polygon") {
    const xs = geometry.points.map(([x]) => x);
    const ys = geometry.points.map(([, y]) => y);
    return {
      ul_x: Math.floor(Math.min(...xs)),
      ul_y: Math.floor(Math.min(...ys)),
      lr_x: Math.ceil(Math.max(...xs)),
      lr_y: Math.ceil(Math.max(...ys)),
    };
  }
  const [height, width] = geometry.rle.size;
  const bits = decodeRle(geometry.rle);
  let minX = width;
  let minY = height;
  let maxX = -1;
  let maxY = -1;
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      if (bits[y * width + x]) {
        if (x < minX) minX = x;
        if (y < minY) minY = y;
        if (x > maxX) maxX = x;
        if (y > maxY) maxY = y;
      }
    }
  }
  if (maxX < 0) return null;
  return { ul_x: minX, ul_y: minY, lr_x: maxX + 1, lr_y: maxY + 1 };
}
