/**
 * Server-authoritative session state.
 *
 * The store never edits annotations locally: the only way frame content
 * changes is `applyFrame`, fed with a frame state returned by the service.
 * `lastServerFrame` keeps the exact response object so tests (and debug
 * tooling) can assert that what is rendered equals what the server last
 * said.
 */

import type { FrameJson, ObjectJson, ProjectInfo } from "./api.js";

export type Listener = () => void;

export interface OverlayOptions {
  opacity: number; // 0..1 overlay alpha
  showRoiMask: boolean;
  roiColor: string; // don't-care region tint, user configurable
  showThermal: boolean;
}

export class SessionState {
  project: ProjectInfo | null = null;
  currentFrame = 0;
  selection: number | null = null;
  brushRadius = 4;
  grabcutToken: string | null = null;
  activeTool = "tool.select";
  overlay: OverlayOptions = {
    opacity: 0.5,
    showRoiMask: true,
    roiColor: "#ffd400",
    showThermal: false,
  };

  private frames = new Map<number, FrameJson>();
  private lastResponses = new Map<number, FrameJson>();
  private listeners = new Set<Listener>();

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  setProject(info: ProjectInfo): void {
    this.project = info;
    this.frames.clear();
    this.lastResponses.clear();
    this.currentFrame = 0;
    this.selection = null;
    this.grabcutToken = null;
    this.emit();
  }

  /** The single entry point for annotation data. */
  applyFrame(frame: FrameJson): void {
    this.frames.set(frame.frame_index, frame);
    this.lastResponses.set(frame.frame_index, frame);
    this.emit();
  }

  frame(idx: number): FrameJson | undefined {
    return this.frames.get(idx);
  }

  lastServerFrame(idx: number): FrameJson | undefined {
    return this.lastResponses.get(idx);
  }

  /** Invariant check: rendered annotations are the last server response. */
  displayMatchesServer(idx: number): boolean {
    return this.frames.get(idx) === this.lastResponses.get(idx);
  }

  selectedObject(): ObjectJson | null {
    if (this.selection === null) return null;
    const frame = this.frames.get(this.currentFrame);
    return frame?.objects.find((o) => o.id === this.selection) ?? null;
  }

  select(objectId: number | null): void {
    this.selection = objectId;
    this.emit();
  }

  setFrameIndex(idx: number): void {
    if (!this.project) return;
    this.currentFrame = Math.max(0, Math.min(this.project.num_frames - 1, idx));
    this.emit();
  }

  setTool(commandId: string): void {
    this.activeTool = commandId;
    this.grabcutRectPreview = null;
    this.emit();
  }

  setBrushRadius(radius: number): void {
    this.brushRadius = Math.max(1, Math.min(64, radius));
    this.emit();
  }

  setOverlay(patch: Partial<OverlayOptions>): void {
    this.overlay = { ...this.overlay, ...patch };
    this.emit();
  }

  // transient gesture feedback (never annotation data)
  grabcutRectPreview: { ul_x: number; ul_y: number; lr_x: number; lr_y: number } | null = null;
  grabcutMaskPreview: { size: [number, number]; counts: number[] } | null = null;
  pendingPolygon: [number, number][] = [];
}
