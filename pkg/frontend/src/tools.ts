/**
 * Pointer-gesture controllers.
 *
 * Each gesture maps to exactly one API call, issued on pointer-up: box
 * drags create one annotation, brush strokes batch their points into one
 * mask operation or GrabCut refinement, polygon editing sends the final
 * vertex list. Gestures in the thermal view are mapped into RGB
 * coordinates before they reach the API, so stored geometry is always in
 * the master modality.
 */

import type { ApiClient, BrushJson, FrameJson, GeometryJson } from "./api.js";
import { applyHomography, identityMatrix, normalizedBox, type Matrix3, type Point } from "./geometry.js";
import type { SessionState } from "./state.js";

export interface ToolEnvironment {
  api: ApiClient;
  state: SessionState;
  pid: string;
  /** thermal -> RGB map; identity while editing the RGB pane */
  thermalToRgb: Matrix3;
  defaultTag: () => string;
  onError: (error: unknown) => void;
}

export type PaneName = "rgb" | "thermal";

export interface PointerSample {
  x: number;
  y: number;
  pane: PaneName;
}

export interface GestureTool {
  down(p: PointerSample): void;
  move(p: PointerSample): void;
  up(p: PointerSample): Promise<void>;
  cancel(): void;
}

function toRgb(env: ToolEnvironment, p: PointerSample): Point {
  if (p.pane === "thermal") {
    return applyHomography(env.thermalToRgb, { x: p.x, y: p.y });
  }
  return { x: p.x, y: p.y };
}

async function applyMutation(env: ToolEnvironment, call: () => Promise<{ frame: FrameJson }>): Promise<void> {
  try {
    const response = await call();
    env.state.applyFrame(response.frame);
  } catch (error) {
    env.onError(error);
  }
}

/** Drag out a rectangle; one create call on release. */
export class BoxTool implements GestureTool {
  private start: Point | null = null;

  constructor(private env: ToolEnvironment) {}

  down(p: PointerSample): void {
    this.start = toRgb(this.env, p);
  }

  move(_p: PointerSample): void {}

  async up(p: PointerSample): Promise<void> {
    if (!this.start) return;
    const box = normalizedBox(this.start, toRgb(this.env, p));
    this.start = null;
    if (!box) return; // zero-area drag is not a gesture
    const { env } = this;
    await applyMutation(env, async () => {
      const response = await env.api.createAnnotation(env.pid, env.state.currentFrame, {
        tag: env.defaultTag(),
        geometry: { type: "box", ...box },
      });
      env.state.select(response.object.id);
      return response;
    });
  }

  cancel(): void {
    this.start = null;
  }
}

/** Click to add vertices; finish() sends one create call. */
export class PolygonTool implements GestureTool {
  constructor(private env: ToolEnvironment) {}

  down(p: PointerSample): void {
    const rgb = toRgb(this.env, p);
    this.env.state.pendingPolygon.push([rgb.x, rgb.y]);
  }

  move(_p: PointerSample): void {}

  async up(_p: PointerSample): Promise<void> {}

  async finish(): Promise<void> {
    const points = this.env.state.pendingPolygon;
    if (points.length < 3) return;
    const geometry: GeometryJson = { type: "polygon", points: points.slice() };
    this.env.state.pendingPolygon = [];
    const { env } = this;
    await applyMutation(env, async () => {
      const response = await env.api.createAnnotation(env.pid, env.state.currentFrame, {
        tag: env.defaultTag(),
        geometry,
      });
      env.state.select(response.object.id);
      return response;
    });
  }

  cancel(): void {
    this.env.state.pendingPolygon = [];
  }
}

/** Manual mask painting; the whole stroke goes out as one mask op. */
export class ManualBrushTool implements GestureTool {
  private stroke: [number, number][] = [];

  constructor(
    private env: ToolEnvironment,
    private kind: "add" | "remove",
  ) {}

  down(p: PointerSample): void {
    this.stroke = [];
    this.push(p);
  }

  move(p: PointerSample): void {
    if (this.stroke.length) this.push(p);
  }

  private push(p: PointerSample): void {
    const rgb = toRgb(this.env, p);
    this.stroke.push([Math.round(rgb.x), Math.round(rgb.y)]);
  }

  async up(_p: PointerSample): Promise<void> {
    const { env } = this;
    const selection = env.state.selection;
    if (!this.stroke.length || selection === null) {
      this.stroke = [];
      return;
    }
    const brush: BrushJson = {
      kind: this.kind,
      radius: env.state.brushRadius,
      stroke: this.stroke,
    };
    this.stroke = [];
    await applyMutation(env, () =>
      env.api.maskOp(env.pid, env.state.currentFrame, selection, {
        op: "apply_brush",
        brush,
      }),
    );
  }

  cancel(): void {
    this.stroke = [];
  }
}

/**
 * GrabCut: a rectangle drag seeds a server-side session, constraint
 * strokes refine it (one call per stroke), commit turns the mask into an
 * annotation and ends the session.
 */
export class GrabCutController {
  private rectStart: Point | null = null;
  private stroke: [number, number][] = [];

  constructor(private env: ToolEnvironment) {}

  rectTool(): GestureTool {
    const self = this;
    return {
      down(p) {
        self.rectStart = toRgb(self.env, p);
      },
      move(p) {
        if (!self.rectStart) return;
        const box = normalizedBox(self.rectStart, toRgb(self.env, p));
        self.env.state.grabcutRectPreview = box;
      },
      async up(p) {
        if (!self.rectStart) return;
        const box = normalizedBox(self.rectStart, toRgb(self.env, p));
        self.rectStart = null;
        self.env.state.grabcutRectPreview = box;
        if (!box) return;
        try {
          const response = await self.env.api.grabcutInit(
            self.env.pid,
            self.env.state.currentFrame,
            [box.ul_x, box.ul_y, box.lr_x, box.lr_y],
          );
          self.env.state.grabcutToken = response.session;
          self.env.state.grabcutMaskPreview = response.mask_rle;
        } catch (error) {
          self.env.onError(error);
        }
      },
      cancel() {
        self.rectStart = null;
        self.env.state.grabcutRectPreview = null;
      },
    };
  }

  brushTool(kind: "true_positive" | "true_negative"): GestureTool {
    const self = this;
    return {
      down(p) {
        self.stroke = [];
        self.pushStroke(p);
      },
      move(p) {
        if (self.stroke.length) self.pushStroke(p);
      },
      async up(_p) {
        const token = self.env.state.grabcutToken;
        if (!self.stroke.length || !token) {
          self.stroke = [];
          return;
        }
        const brush: BrushJson = {
          kind,
          radius: self.env.state.brushRadius,
          stroke: self.stroke,
        };
        self.stroke = [];
        try {
          const response = await self.env.api.grabcutRefine(self.env.pid, token, [brush]);
          self.env.state.grabcutMaskPreview = response.mask_rle;
        } catch (error) {
          self.env.onError(error);
        }
      },
      cancel() {
        self.stroke = [];
      },
    };
  }

  private pushStroke(p: PointerSample): void {
    const rgb = toRgb(this.env, p);
    this.stroke.push([Math.round(rgb.x), Math.round(rgb.y)]);
  }

  async commit(tag: string, dontcareWidth: number): Promise<void> {
    const token = this.env.state.grabcutToken;
    if (!token) return;
    const { env } = this;
    await applyMutation(env, async () => {
      const response = await env.api.grabcutCommit(env.pid, token, {
        tag,
        dontcare_width: dontcareWidth,
      });
      env.state.grabcutToken = null;
      env.state.grabcutMaskPreview = null;
      env.state.grabcutRectPreview = null;
      env.state.select(response.object.id);
      return response;
    });
  }
}

/** Selection: hit-test boxes of the current frame's objects. */
export class SelectTool implements GestureTool {
  constructor(
    private env: ToolEnvironment,
    private hitTest: (p: Point) => number | null,
  ) {}

  down(p: PointerSample): void {
    this.env.state.select(this.hitTest(toRgb(this.env, p)));
  }

  move(_p: PointerSample): void {}

  async up(_p: PointerSample): Promise<void> {}

  cancel(): void {}
}

export function makeToolEnvironment(
  api: ApiClient,
  state: SessionState,
  pid: string,
  onError: (error: unknown) => void,
): ToolEnvironment {
  return {
    api,
    state,
    pid,
    thermalToRgb: identityMatrix(),
    defaultTag: () => state.project?.suggested_tags[0] ?? "object",
    onError,
  };
}
