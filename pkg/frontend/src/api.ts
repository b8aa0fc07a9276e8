/**
 * Typed client for the annotation service.
 *
 * Every mutating endpoint answers with the authoritative post-state of the
 * affected frame; callers must feed that into the session state instead of
 * mutating anything locally. The fetch implementation is injectable so
 * tests can intercept and count requests.
 */

export type RleMask = { size: [number, number]; counts: number[] };

export type GeometryJson =
  | { type: "box"; ul_x: number; ul_y: number; lr_x: number; lr_y: number }
  | { type: "polygon"; points: [number, number][] }
  | { type: "mask"; rle: RleMask; dontcare_rle?: RleMask };

export type ObjectStatus = "active" | "lastframe";

export interface ObjectJson {
  id: number;
  tag: string;
  status: ObjectStatus;
  meta: Record<string, boolean>;
  geometry: GeometryJson;
}

export interface FrameJson {
  frame_index: number;
  image_file: string;
  objects: ObjectJson[];
  shared_dontcare_rle?: RleMask;
}

export interface ProjectInfo {
  project_id: string;
  root: string;
  geometry_kind: "box" | "pixel";
  num_frames: number;
  frame_files: string[];
  meta_schema: string[];
  suggested_tags: string[];
  limit_tags: boolean;
  image_size: [number, number] | null;
  has_thermal: boolean;
  has_roi_mask: boolean;
  problems: string[];
  dontcare_border_width: number;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public envelope: ErrorEnvelope,
  ) {
    super(`${envelope.code}: ${envelope.message}`);
  }
}

export interface BrushJson {
  kind: "true_positive" | "true_negative" | "add" | "remove";
  radius: number;
  stroke: [number, number][];
}

export interface DeleteForwardReport {
  report: { frame_index: number; object_id: number }[];
  applied: boolean;
  frame?: FrameJson;
}

export interface MergeForwardReport {
  report: { frame_index: number; action: string }[];
  applied: boolean;
  frame?: FrameJson;
}

export interface GrabCutInitResponse {
  session: string;
  frame_index: number;
  mask_rle: RleMask;
  collapsed: boolean;
}

export interface GrabCutRefineResponse {
  mask_rle: RleMask;
  collapsed: boolean;
  brush_conflicts: number;
}

export interface MutationResponse {
  object: ObjectJson;
  frame: FrameJson;
}

export type HistorySlot = {
  frame_index: number;
  box: GeometryJson;
} | null;

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let envelope: ErrorEnvelope;
      try {
        envelope = (await response.json()) as ErrorEnvelope;
      } catch {
        envelope = { code: `HTTP${response.status}`, message: response.statusText, details: {} };
      }
      throw new ApiError(response.status, envelope);
    }
    return (await response.json()) as T;
  }

  openProject(root: string, settings?: Record<string, unknown>): Promise<ProjectInfo> {
    return this.request("POST", "/projects/open", { root, settings });
  }

  closeProject(pid: string, save: boolean): Promise<{ closed: boolean; saved: boolean }> {
    return this.request("POST", `/projects/${pid}/close`, { save });
  }

  saveProject(pid: string): Promise<{ written: string[] }> {
    return this.request("POST", `/projects/${pid}/save`, {});
  }

  getFrame(pid: string, idx: number): Promise<FrameJson> {
    return this.request("GET", `/projects/${pid}/frames/${idx}`);
  }

  imageUrl(pid: string, idx: number, modality: "rgb" | "thermal", preview = false): string {
    const suffix = preview ? "&preview=true" : "";
    return `${this.baseUrl}/projects/${pid}/frames/${idx}/image?modality=${modality}${suffix}`;
  }

  createAnnotation(
    pid: string,
    idx: number,
    body: {
      tag: string;
      geometry: GeometryJson;
      meta?: Record<string, boolean>;
      status?: ObjectStatus;
      id?: number;
    },
  ): Promise<MutationResponse> {
    return this.request("POST", `/projects/${pid}/frames/${idx}/annotations`, body);
  }

  updateAnnotation(
    pid: string,
    idx: number,
    objectId: number,
    body: Partial<{
      tag: string;
      geometry: GeometryJson;
      meta: Record<string, boolean>;
      status: ObjectStatus;
    }>,
  ): Promise<MutationResponse> {
    return this.request("PUT", `/projects/${pid}/frames/${idx}/annotations/${objectId}`, body);
  }

  deleteAnnotation(pid: string, idx: number, objectId: number): Promise<{ frame: FrameJson }> {
    return this.request("DELETE", `/projects/${pid}/frames/${idx}/annotations/${objectId}`);
  }

  maskOp(
    pid: string,
    idx: number,
    objectId: number,
    body: { op: string; brush?: BrushJson; min_area?: number; width?: number },
  ): Promise<MutationResponse> {
    return this.request("POST", `/projects/${pid}/frames/${idx}/annotations/${objectId}/mask-op`, body);
  }

  grabcutInit(pid: string, frameIndex: number, rect: [number, number, number, number], iterations = 5): Promise<GrabCutInitResponse> {
    return this.request("POST", `/projects/${pid}/grabcut/init`, {
      frame_index: frameIndex,
      rect,
      iterations,
    });
  }

  grabcutRefine(pid: string, token: string, brushes: BrushJson[], iterations = 5): Promise<GrabCutRefineResponse> {
    return this.request("POST", `/projects/${pid}/grabcut/${token}/refine`, { brushes, iterations });
  }

  grabcutCommit(
    pid: string,
    token: string,
    body: { tag: string; object_id?: number; dontcare_width?: number; meta?: Record<string, boolean> },
  ): Promise<MutationResponse> {
    return this.request("POST", `/projects/${pid}/grabcut/${token}/commit`, body);
  }

  retain(pid: string, fromIndex: number, toIndex: number): Promise<{ frame: FrameJson }> {
    return this.request("POST", `/projects/${pid}/retain`, {
      from_index: fromIndex,
      to_index: toIndex,
    });
  }

  interpolate(pid: string, objectId: number, startIndex: number, endIndex: number): Promise<{ frames: FrameJson[] }> {
    return this.request("POST", `/projects/${pid}/interpolate`, {
      object_id: objectId,
      start_index: startIndex,
      end_index: endIndex,
    });
  }

  /** Two-phase: without confirm the server only reports what would go. */
  deleteForward(pid: string, ids: number[], fromIndex: number, confirm: boolean): Promise<DeleteForwardReport> {
    return this.request("POST", `/projects/${pid}/delete-forward`, {
      ids,
      from_index: fromIndex,
      confirm,
    });
  }

  mergeForward(pid: string, keepId: number, absorbId: number, fromIndex: number, confirm: boolean): Promise<MergeForwardReport> {
    return this.request("POST", `/projects/${pid}/merge-forward`, {
      keep_id: keepId,
      absorb_id: absorbId,
      from_index: fromIndex,
      confirm,
    });
  }

  history(pid: string, objectId: number, center: number, radius = 5): Promise<{ slots: HistorySlot[] }> {
    return this.request(
      "GET",
      `/projects/${pid}/history?object_id=${objectId}&center=${center}&radius=${radius}`,
    );
  }

  homographies(pid: string): Promise<{ rgb_to_thermal: number[][]; thermal_to_rgb: number[][] }> {
    return this.request("GET", `/projects/${pid}/homographies`);
  }

  getSettings(pid: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/projects/${pid}/settings`);
  }

  updateSettings(pid: string, body: Record<string, unknown>): Promise<Record<string, unknown>> {
    return this.request("PUT", `/projects/${pid}/settings`, body);
  }

  exportYolo(pid: string, categories: string, outDir: string): Promise<{ files: string[]; skipped: unknown[] }> {
    return this.request("POST", `/projects/${pid}/export/yolo`, {
      categories,
      out_dir: outDir,
    });
  }

  exportCoco(pid: string, mode: "polygon" | "rle", outPath: string): Promise<{ path: string; annotations: number }> {
    return this.request("POST", `/projects/${pid}/export/coco`, {
      mode,
      out_path: outPath,
    });
  }
}
