/**
 * Overlay compositing.
 *
 * `overlayOps` is a pure function from the current frame state (always
 * the last server response) to a draw list; `paintOps` is the only code
 * that touches a canvas context. Tests assert on the draw list, the
 * browser runs both.
 */

import type { FrameJson, GeometryJson, RleMask } from "./api.js";
import { decodeRle } from "./geometry.js";
import type { OverlayOptions } from "./state.js";

export type DrawOp =
  | { kind: "box"; objectId: number; box: [number, number, number, number]; color: string; selected: boolean }
  | { kind: "polygon"; objectId: number; points: [number, number][]; color: string; selected: boolean }
  | { kind: "mask"; objectId: number; rle: RleMask; color: string; selected: boolean }
  | { kind: "band"; objectId: number | null; rle: RleMask; color: string }
  | { kind: "label"; objectId: number; text: string; at: [number, number] };

const PALETTE = [
  "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
  "#46f0f0", "#f032e6", "#bcf60c", "#008080", "#9a6324",
];

export function colorForId(objectId: number): string {
  return PALETTE[Math.abs(objectId) % PALETTE.length]!;
}

export function overlayOps(
  frame: FrameJson | undefined,
  selection: number | null,
  options: OverlayOptions,
): DrawOp[] {
  if (!frame) return [];
  const ops: DrawOp[] = [];
  for (const object of frame.objects) {
    const color = colorForId(object.id);
    const selected = object.id === selection;
    ops.push(...geometryOps(object.id, object.geometry, color, selected));
    const anchor = labelAnchor(object.geometry);
    if (anchor) {
      ops.push({ kind: "label", objectId: object.id, text: `${object.id} ${object.tag}`, at: anchor });
    }
  }
  if (frame.shared_dontcare_rle) {
    ops.push({ kind: "band", objectId: null, rle: frame.shared_dontcare_rle, color: options.roiColor });
  }
  return ops;
}

function geometryOps(objectId: number, geometry: GeometryJson, color: string, selected: boolean): DrawOp[] {
  if (geometry.type === "box") {
    return [
      {
        kind: "box",
        objectId,
        box: [geometry.ul_x, geometry.ul_y, geometry.lr_x, geometry.lr_y],
        color,
        selected,
      },
    ];
  }
  if (geometry.type === "polygon") {
    return [{ kind: "polygon", objectId, points: geometry.points, color, selected }];
  }
  const ops: DrawOp[] = [{ kind: "mask", objectId, rle: geometry.rle, color, selected }];
  if (geometry.dontcare_rle) {
    ops.push({ kind: "band", objectId, rle: geometry.dontcare_rle, color });
  }
  return ops;
}

function labelAnchor(geometry: GeometryJson): [number, number] | null {
  if (geometry.type === "box") return [geometry.ul_x, geometry.ul_y];
  if (geometry.type === "polygon") {
    const first = geometry.points[0];
    return first ? [first[0], first[1]] : null;
  }
  return null;
}

function hexToRgb(color: string): [number, number, number] {
  const hex = color.replace("#", "");
  return [
    parseInt(hex.slice(0, 2), 16),
    parseInt(hex.slice(2, 4), 16),
    parseInt(hex.slice(4, 6), 16),
  ];
}

function maskToImageData(rle: RleMask, color: string, alpha: number, banded: boolean): ImageData {
  const [height, width] = rle.size;
  const bits = decodeRle(rle);
  const [r, g, b] = hexToRgb(color);
  const data = new Uint8ClampedArray(width * height * 4);
  const a = Math.round(alpha * 255);
  for (let i = 0; i < bits.length; i++) {
    if (!bits[i]) continue;
    if (banded && ((i % width) + Math.floor(i / width)) % 2 === 0) continue; // checker texture
    data[i * 4] = r;
    data[i * 4 + 1] = g;
    data[i * 4 + 2] = b;
    data[i * 4 + 3] = a;
  }
  return new ImageData(data, width, height);
}

export function paintOps(
  ctx: CanvasRenderingContext2D,
  ops: DrawOp[],
  options: OverlayOptions,
  scale: number,
): void {
  ctx.save();
  for (const op of ops) {
    if (op.kind === "box") {
      ctx.strokeStyle = op.color;
      ctx.lineWidth = op.selected ? 3 : 1.5;
      const [x1, y1, x2, y2] = op.box;
      ctx.strokeRect(x1 * scale, y1 * scale, (x2 - x1) * scale, (y2 - y1) * scale);
    } else if (op.kind === "polygon") {
      ctx.strokeStyle = op.color;
      ctx.lineWidth = op.selected ? 3 : 1.5;
      ctx.beginPath();
      op.points.forEach(([x, y], i) => (i ? ctx.lineTo(x * scale, y * scale) : ctx.moveTo(x * scale, y * scale)));
      ctx.closePath();
      ctx.stroke();
      ctx.globalAlpha = options.opacity * 0.4;
      ctx.fillStyle = op.color;
      ctx.fill();
      ctx.globalAlpha = 1;
    } else if (op.kind === "mask" || op.kind === "band") {
      const image = maskToImageData(
        op.rle,
        op.color,
        op.kind === "band" ? options.opacity * 0.7 : options.opacity,
        op.kind === "band",
      );
      const off = new OffscreenCanvas(image.width, image.height);
      const offCtx = off.getContext("2d")!;
      offCtx.putImageData(image, 0, 0);
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(off, 0, 0, image.width * scale, image.height * scale);
    } else {
      ctx.font = "12px sans-serif";
      ctx.fillStyle = "#fff";
      ctx.strokeStyle = "#000";
      ctx.lineWidth = 3;
      const [x, y] = op.at;
      ctx.strokeText(op.text, x * scale + 2, y * scale - 4);
      ctx.fillText(op.text, x * scale + 2, y * scale - 4);
    }
  }
  ctx.restore();
}
