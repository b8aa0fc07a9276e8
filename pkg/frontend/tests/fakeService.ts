/**
 * In-memory stand-in for the annotation service used by scripted UI tests.
 *
 * Implements the same contracts the real server does: mutations answer
 * with the authoritative frame state, destructive sweeps are two-phase,
 * GrabCut sessions are token-keyed. Every request is recorded so tests
 * can assert exactly one call per gesture.
 */

import type { FrameJson, ObjectJson, ProjectInfo, RleMask } from "../src/api.js";

export interface RecordedCall {
  method: string;
  path: string;
  body: Record<string, unknown> | null;
}

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function error(status: number, code: string, message: string): Response {
  return json({ code, message, details: {} }, status);
}

function fullMask(width: number, height: number, box: [number, number, number, number]): RleMask {
  // column-major counts for a filled rectangle
  const bits: number[] = new Array(width * height).fill(0);
  for (let x = box[0]; x < box[2]; x++) {
    for (let y = box[1]; y < box[3]; y++) {
      bits[x * height + y] = 1;
    }
  }
  const counts: number[] = [];
  let current = 0;
  let run = 0;
  for (const bit of bits) {
    if (bit === current) {
      run += 1;
    } else {
      counts.push(run);
      current = bit;
      run = 1;
    }
  }
  counts.push(run);
  if (bits[0] === 1) counts.unshift(0);
  return { size: [height, width], counts };
}

export class FakeService {
  calls: RecordedCall[] = [];
  frames = new Map<number, ObjectJson[]>();
  grabcutSessions = new Map<string, { frame: number; mask: RleMask }>();
  width = 64;
  height = 64;
  numFrames = 8;
  /** when set, GET /homographies answers instead of 404 */
  homographies: { rgb_to_thermal: number[][]; thermal_to_rgb: number[][] } | null = null;
  private nextToken = 1;

  readonly info: ProjectInfo = {
    project_id: "fake-pid",
    root: "/tmp/fake",
    geometry_kind: "box",
    num_frames: this.numFrames,
    frame_files: Array.from({ length: 8 }, (_, i) => `frame_${i}.png`),
    meta_schema: ["Occluded"],
    suggested_tags: ["car", "person"],
    limit_tags: false,
    image_size: [64, 64],
    has_thermal: false,
    has_roi_mask: false,
    problems: [],
    dontcare_border_width: 0,
  };

  callsSince(mark: number): RecordedCall[] {
    return this.calls.slice(mark);
  }

  frameJson(idx: number): FrameJson {
    return JSON.parse(
      JSON.stringify({
        frame_index: idx,
        image_file: `frame_${idx}.png`,
        objects: [...(this.frames.get(idx) ?? [])].sort((a, b) => a.id - b.id),
      }),
    ) as FrameJson;
  }

  private nextFreeId(): number {
    const used = new Set<number>();
    for (const objects of this.frames.values()) {
      for (const o of objects) used.add(o.id);
    }
    let id = 0;
    while (used.has(id)) id += 1;
    return id;
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? (JSON.parse(init.body as string) as Record<string, unknown>) : null;
    this.calls.push({ method, path, body });
    return this.route(method, path.split("?")[0]!, path, body);
  };

  private route(
    method: string,
    path: string,
    fullPath: string,
    body: Record<string, unknown> | null,
  ): Response {
    if (method === "POST" && path === "/projects/open") return json(this.info);
    const pid = this.info.project_id;

    let m = path.match(new RegExp(`^/projects/${pid}/frames/(\\d+)$`));
    if (m && method === "GET") return json(this.frameJson(Number(m[1])));

    m = path.match(new RegExp(`^/projects/${pid}/frames/(\\d+)/annotations$`));
    if (m && method === "POST") {
      const idx = Number(m[1]);
      const id = (body!.id as number | undefined) ?? this.nextFreeId();
      const object: ObjectJson = {
        id,
        tag: body!.tag as string,
        status: (body!.status as "active" | "lastframe" | undefined) ?? "active",
        meta: { Occluded: false, ...((body!.meta as Record<string, boolean>) ?? {}) },
        geometry: body!.geometry as ObjectJson["geometry"],
      };
      this.frames.set(idx, [...(this.frames.get(idx) ?? []), object]);
      return json({ object, frame: this.frameJson(idx) });
    }

    m = path.match(new RegExp(`^/projects/${pid}/frames/(\\d+)/annotations/(\\d+)$`));
    if (m && method === "PUT") {
      const idx = Number(m[1]);
      const id = Number(m[2]);
      const objects = this.frames.get(idx) ?? [];
      const target = objects.find((o) => o.id === id);
      if (!target) return error(404, "NotFound", `no object ${id}`);
      Object.assign(target, body);
      return json({ object: target, frame: this.frameJson(idx) });
    }
    if (m && method === "DELETE") {
      const idx = Number(m[1]);
      const id = Number(m[2]);
      this.frames.set(idx, (this.frames.get(idx) ?? []).filter((o) => o.id !== id));
      return json({ frame: this.frameJson(idx) });
    }

    if (method === "POST" && path === `/projects/${pid}/grabcut/init`) {
      const rect = body!.rect as [number, number, number, number];
      if (rect[0] >= rect[2] || rect[1] >= rect[3]) {
        return error(422, "DegenerateRect", "rectangle has no area");
      }
      const token = `gc-${this.nextToken++}`;
      const mask = fullMask(this.width, this.height, rect);
      this.grabcutSessions.set(token, { frame: body!.frame_index as number, mask });
      return json({
        session: token,
        frame_index: body!.frame_index,
        mask_rle: mask,
        collapsed: false,
      });
    }

    m = path.match(new RegExp(`^/projects/${pid}/grabcut/([\\w-]+)/refine$`));
    if (m && method === "POST") {
      const session = this.grabcutSessions.get(m[1]!);
      if (!session) return error(404, "NotFound", "no such session");
      return json({ mask_rle: session.mask, collapsed: false, brush_conflicts: 0 });
    }

    m = path.match(new RegExp(`^/projects/${pid}/grabcut/([\\w-]+)/commit$`));
    if (m && method === "POST") {
      const session = this.grabcutSessions.get(m[1]!);
      if (!session) return error(404, "NotFound", "no such session");
      this.grabcutSessions.delete(m[1]!);
      const id = this.nextFreeId();
      const object: ObjectJson = {
        id,
        tag: (body!.tag as string) ?? "object",
        status: "active",
        meta: { Occluded: false },
        geometry: { type: "mask", rle: session.mask },
      };
      this.frames.set(session.frame, [...(this.frames.get(session.frame) ?? []), object]);
      return json({ object, frame: this.frameJson(session.frame) });
    }

    if (method === "POST" && path === `/projects/${pid}/delete-forward`) {
      const ids = body!.ids as number[];
      const fromIndex = body!.from_index as number;
      const report: { frame_index: number; object_id: number }[] = [];
      for (let idx = fromIndex; idx < this.numFrames; idx++) {
        for (const object of this.frames.get(idx) ?? []) {
          if (ids.includes(object.id)) report.push({ frame_index: idx, object_id: object.id });
        }
      }
      if (!body!.confirm) return json({ report, applied: false });
      for (let idx = fromIndex; idx < this.numFrames; idx++) {
        this.frames.set(idx, (this.frames.get(idx) ?? []).filter((o) => !ids.includes(o.id)));
      }
      return json({ report, applied: true, frame: this.frameJson(fromIndex) });
    }

    if (method === "POST" && path === `/projects/${pid}/merge-forward`) {
      const keep = body!.keep_id as number;
      const absorb = body!.absorb_id as number;
      const fromIndex = body!.from_index as number;
      const report: { frame_index: number; action: string }[] = [];
      for (let idx = fromIndex; idx < this.numFrames; idx++) {
        const objects = this.frames.get(idx) ?? [];
        const absorbed = objects.find((o) => o.id === absorb);
        if (!absorbed) continue;
        report.push({ frame_index: idx, action: objects.some((o) => o.id === keep) ? "merged" : "relabeled" });
        if (body!.confirm) {
          if (objects.some((o) => o.id === keep)) {
            this.frames.set(idx, objects.filter((o) => o.id !== absorb));
          } else {
            absorbed.id = keep;
          }
        }
      }
      if (!body!.confirm) return json({ report, applied: false });
      return json({ report, applied: true, frame: this.frameJson(fromIndex) });
    }

    if (method === "POST" && path === `/projects/${pid}/retain`) {
      const fromIndex = body!.from_index as number;
      const toIndex = body!.to_index as number;
      const present = new Set((this.frames.get(toIndex) ?? []).map((o) => o.id));
      const copied = (this.frames.get(fromIndex) ?? []).filter(
        (o) => o.status === "active" && !present.has(o.id),
      );
      this.frames.set(toIndex, [
        ...(this.frames.get(toIndex) ?? []),
        ...(JSON.parse(JSON.stringify(copied)) as ObjectJson[]),
      ]);
      return json({ frame: this.frameJson(toIndex) });
    }

    if (method === "GET" && fullPath.startsWith(`/projects/${pid}/history`)) {
      const params = new URLSearchParams(fullPath.split("?")[1] ?? "");
      const objectId = Number(params.get("object_id"));
      const center = Number(params.get("center"));
      const radius = Number(params.get("radius") ?? 5);
      const slots = [];
      for (let idx = center - radius; idx <= center + radius; idx++) {
        const object = this.frames.get(idx)?.find((o) => o.id === objectId);
        slots.push(
          idx >= 0 && idx < this.numFrames && object
            ? { frame_index: idx, box: object.geometry }
            : null,
        );
      }
      return json({ slots });
    }

    if (method === "GET" && path === `/projects/${pid}/homographies`) {
      if (this.homographies) return json(this.homographies);
      return error(404, "NotFound", "no homography file");
    }
    if (method === "POST" && path === `/projects/${pid}/save`) {
      return json({ written: ["annotations.csv"] });
    }

    return error(404, "NotFound", `${method} ${path} not routed`);
  }
}
