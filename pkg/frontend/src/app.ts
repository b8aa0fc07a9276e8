/**
 * Application shell: wires the canvas panes, toolbar, properties panel,
 * history strip, and keyboard dispatch to the session state and API.
 *
 * State flows one way: gestures and commands call the service, the
 * service answers with frame state, `SessionState.applyFrame` stores it,
 * and rendering reads only from the store.
 */

import { ApiClient, ApiError, type FrameJson } from "./api.js";
import { ticketSummary, DestructiveFlows } from "./destructive.js";
import { identityMatrix, mapGeometry, type Matrix3 } from "./geometry.js";
import { overlayOps, paintOps } from "./overlay.js";
import { COMMANDS, bindingText, commandForKey, shortcutTable, type Command } from "./shortcuts.js";
import { SessionState } from "./state.js";
import {
  BoxTool,
  GrabCutController,
  ManualBrushTool,
  PolygonTool,
  SelectTool,
  makeToolEnvironment,
  type GestureTool,
  type PaneName,
  type PointerSample,
} from "./tools.js";

export class App {
  readonly api: ApiClient;
  readonly state = new SessionState();
  pid = "";
  flows!: DestructiveFlows;
  grabcut!: GrabCutController;
  private tools = new Map<string, GestureTool>();
  private polygonTool!: PolygonTool;
  private thermalMatrices: { toRgb: Matrix3; fromRgb: Matrix3 } | null = null;

  constructor(
    private root: Document,
    baseUrl = "",
    fetchImpl?: (input: string, init?: RequestInit) => Promise<Response>,
  ) {
    this.api = fetchImpl ? new ApiClient(baseUrl, fetchImpl) : new ApiClient(baseUrl);
  }

  async open(projectRoot: string): Promise<void> {
    const info = await this.api.openProject(projectRoot);
    this.pid = info.project_id;
    this.state.setProject(info);
    this.flows = new DestructiveFlows(this.api, this.state, this.pid);

    const env = makeToolEnvironment(this.api, this.state, this.pid, (e) => this.toast(e));
    this.grabcut = new GrabCutController(env);
    this.polygonTool = new PolygonTool(env);
    this.tools.set("tool.select", new SelectTool(env, (p) => this.hitTest(p.x, p.y)));
    this.tools.set("tool.box", new BoxTool(env));
    this.tools.set("tool.polygon", this.polygonTool);
    this.tools.set("tool.grabcut-rect", this.grabcut.rectTool());
    this.tools.set("tool.brush-tp", this.grabcut.brushTool("true_positive"));
    this.tools.set("tool.brush-tn", this.grabcut.brushTool("true_negative"));
    this.tools.set("tool.brush-add", new ManualBrushTool(env, "add"));
    this.tools.set("tool.brush-remove", new ManualBrushTool(env, "remove"));

    if (info.has_thermal) {
      try {
        const doc = await this.api.homographies(this.pid);
        this.thermalMatrices = { toRgb: doc.thermal_to_rgb, fromRgb: doc.rgb_to_thermal };
        env.thermalToRgb = doc.thermal_to_rgb;
      } catch (error) {
        this.banner("Thermal registration unavailable; editing falls back to RGB only.");
        this.thermalMatrices = null;
      }
    }

    await this.loadFrame(0);
    this.buildToolbar();
    this.buildHelp();
    this.state.subscribe(() => this.render());
    this.root.addEventListener("keydown", (event) => this.onKey(event as KeyboardEvent));
    this.wirePane("rgb");
    this.wirePane("thermal");
    this.render();
  }

  async loadFrame(idx: number): Promise<void> {
    const frame = await this.api.getFrame(this.pid, idx);
    this.state.applyFrame(frame);
    this.state.setFrameIndex(idx);
  }

  activeTool(): GestureTool | undefined {
    return this.tools.get(this.state.activeTool);
  }

  /** Pointer pipeline entry; exposed for scripted tests. */
  pointer(phase: "down" | "move" | "up", sample: PointerSample): Promise<void> | void {
    if (sample.pane === "thermal" && !this.thermalMatrices) return;
    const tool = this.activeTool();
    if (!tool) return;
    if (phase === "down") return tool.down(sample);
    if (phase === "move") return tool.move(sample);
    return tool.up(sample);
  }

  async runCommand(id: string): Promise<void> {
    const state = this.state;
    if (id.startsWith("tool.")) {
      state.setTool(id);
      return;
    }
    try {
      switch (id) {
        case "mask.remove-noise":
        case "mask.fill-holes": {
          if (state.selection === null) return;
          const response = await this.api.maskOp(this.pid, state.currentFrame, state.selection, {
            op: id === "mask.remove-noise" ? "remove_noise" : "fill_holes",
            min_area: 16,
          });
          state.applyFrame(response.frame);
          break;
        }
        case "mask.dontcare-border": {
          if (state.selection === null) return;
          const width = state.project?.dontcare_border_width ?? 0;
          const response = await this.api.maskOp(this.pid, state.currentFrame, state.selection, {
            op: "dontcare_border",
            width,
          });
          state.applyFrame(response.frame);
          break;
        }
        case "mask.brush-grow":
          state.setBrushRadius(state.brushRadius + 1);
          break;
        case "mask.brush-shrink":
          state.setBrushRadius(state.brushRadius - 1);
          break;
        case "mask.commit-grabcut":
          if (state.activeTool === "tool.polygon") {
            await this.polygonTool.finish();
          } else {
            await this.grabcut.commit(this.currentTag(), state.project?.dontcare_border_width ?? 0);
          }
          break;
        case "nav.prev":
          await this.loadFrame(state.currentFrame - 1);
          break;
        case "nav.next":
          await this.loadFrame(Math.min(state.currentFrame + 1, (state.project?.num_frames ?? 1) - 1));
          break;
        case "nav.retain-prev":
        case "nav.retain-next": {
          const target = id === "nav.retain-next" ? state.currentFrame + 1 : state.currentFrame - 1;
          if (target < 0 || target >= (state.project?.num_frames ?? 0)) return;
          const response = await this.api.retain(this.pid, state.currentFrame, target);
          state.applyFrame(response.frame);
          state.setFrameIndex(target);
          break;
        }
        case "nav.interpolate": {
          if (state.selection === null) return;
          const end = Number(this.promptText(`Interpolate ID ${state.selection} up to frame:`, ""));
          if (!Number.isFinite(end)) return;
          const response = await this.api.interpolate(this.pid, state.selection, state.currentFrame, end);
          for (const frame of response.frames) state.applyFrame(frame);
          break;
        }
        case "edit.delete": {
          if (state.selection === null) return;
          const response = await this.api.deleteAnnotation(this.pid, state.currentFrame, state.selection);
          state.select(null);
          state.applyFrame(response.frame);
          break;
        }
        case "edit.delete-forward": {
          if (state.selection === null) return;
          const ticket = await this.flows.previewDeleteForward([state.selection], state.currentFrame);
          this.confirmModal(ticketSummary(ticket), () => this.flows.confirmDeleteForward(ticket));
          break;
        }
        case "edit.merge-forward": {
          if (state.selection === null) return;
          const absorb = Number(this.promptText("Merge which ID into the selection?", ""));
          if (!Number.isFinite(absorb)) return;
          const ticket = await this.flows.previewMergeForward(state.selection, absorb, state.currentFrame);
          this.confirmModal(ticketSummary(ticket), () => this.flows.confirmMergeForward(ticket));
          break;
        }
        case "edit.toggle-status": {
          const selected = state.selectedObject();
          if (!selected) return;
          const response = await this.api.updateAnnotation(this.pid, state.currentFrame, selected.id, {
            status: selected.status === "active" ? "lastframe" : "active",
          });
          state.applyFrame(response.frame);
          break;
        }
        case "edit.cancel":
          this.activeTool()?.cancel();
          state.pendingPolygon = [];
          break;
        case "view.toggle-thermal":
          state.setOverlay({ showThermal: !state.overlay.showThermal });
          break;
        case "view.opacity-up":
          state.setOverlay({ opacity: Math.min(1, state.overlay.opacity + 0.1) });
          break;
        case "view.opacity-down":
          state.setOverlay({ opacity: Math.max(0, state.overlay.opacity - 0.1) });
          break;
        case "view.toggle-roi":
          state.setOverlay({ showRoiMask: !state.overlay.showRoiMask });
          break;
        case "view.help":
          this.toggleHelp();
          break;
        case "project.save":
          await this.api.saveProject(this.pid);
          this.toast("Saved.");
          break;
        case "project.export-yolo": {
          const categories = this.promptText("Category list (name or path):", "mscoco");
          if (!categories) return;
          const result = await this.api.exportYolo(this.pid, categories, "yolo_labels");
          this.toast(`Wrote ${result.files.length} label file(s).`);
          break;
        }
        case "project.export-coco": {
          const result = await this.api.exportCoco(this.pid, "rle", "coco.json");
          this.toast(`Wrote ${result.path} (${result.annotations} annotations).`);
          break;
        }
      }
    } catch (error) {
      this.toast(error);
    }
  }

  currentTag(): string {
    const input = this.root.getElementById("prop-tag") as HTMLInputElement | null;
    return input?.value || this.state.project?.suggested_tags[0] || "object";
  }

  hitTest(x: number, y: number): number | null {
    const frame = this.state.frame(this.state.currentFrame);
    if (!frame) return null;
    // smallest box wins so nested objects stay reachable
    let best: { id: number; area: number } | null = null;
    for (const object of frame.objects) {
      const g = object.geometry;
      if (g.type !== "box") continue;
      if (x >= g.ul_x && x < g.lr_x && y >= g.ul_y && y < g.lr_y) {
        const area = (g.lr_x - g.ul_x) * (g.lr_y - g.ul_y);
        if (!best || area < best.area) best = { id: object.id, area };
      }
    }
    return best?.id ?? null;
  }

  // --- DOM wiring (thin; everything above is testable headlessly) --------

  private byId<T extends HTMLElement>(id: string): T | null {
    return this.root.getElementById(id) as T | null;
  }

  private wirePane(pane: PaneName): void {
    const canvas = this.byId<HTMLCanvasElement>(`${pane}-overlay`);
    if (!canvas) return;
    const sample = (event: PointerEvent): PointerSample => {
      const rect = canvas.getBoundingClientRect();
      const scale = this.scale();
      return {
        x: (event.clientX - rect.left) / scale,
        y: (event.clientY - rect.top) / scale,
        pane,
      };
    };
    canvas.addEventListener("pointerdown", (e) => void this.pointer("down", sample(e)));
    canvas.addEventListener("pointermove", (e) => void this.pointer("move", sample(e)));
    canvas.addEventListener("pointerup", (e) => void this.pointer("up", sample(e)));
  }

  private scale(): number {
    const size = this.state.project?.image_size;
    const canvas = this.byId<HTMLCanvasElement>("rgb-overlay");
    if (!size || !canvas || !size[0]) return 1;
    return canvas.width / size[0];
  }

  private onKey(event: KeyboardEvent): void {
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
    const command = commandForKey(event);
    if (!command) return;
    event.preventDefault();
    void this.runCommand(command.id);
  }

  private buildToolbar(): void {
    const bar = this.byId<HTMLElement>("toolbar");
    if (!bar) return;
    bar.textContent = "";
    for (const command of COMMANDS.filter((c) => c.toolbar)) {
      const button = this.root.createElement("button");
      button.dataset.command = command.id;
      button.textContent = command.label;
      button.title = `${command.label} (${bindingText(command)})`;
      button.addEventListener("click", () => void this.runCommand(command.id));
      bar.appendChild(button);
    }
  }

  private buildHelp(): void {
    const help = this.byId<HTMLElement>("help-table");
    if (!help) return;
    help.textContent = "";
    for (const row of shortcutTable()) {
      const tr = this.root.createElement("tr");
      tr.innerHTML = `<td>${row.binding}</td><td>${row.label}</td><td>${row.group}</td>`;
      help.appendChild(tr);
    }
  }

  private toggleHelp(): void {
    this.byId("help")?.classList.toggle("hidden");
  }

  private confirmModal(text: string, onAccept: () => Promise<void>): void {
    const modal = this.byId<HTMLElement>("confirm-modal");
    const body = this.byId<HTMLElement>("confirm-text");
    const accept = this.byId<HTMLButtonElement>("confirm-accept");
    const reject = this.byId<HTMLButtonElement>("confirm-reject");
    if (!modal || !body || !accept || !reject) {
      // headless fallback used in tests: window.confirm round trip
      if (this.root.defaultView?.confirm(text)) void onAccept();
      return;
    }
    body.textContent = text;
    modal.classList.remove("hidden");
    accept.onclick = () => {
      modal.classList.add("hidden");
      void onAccept().catch((e) => this.toast(e));
    };
    reject.onclick = () => modal.classList.add("hidden");
  }

  private promptText(question: string, fallback: string): string | null {
    return this.root.defaultView?.prompt(question, fallback) ?? null;
  }

  private banner(text: string): void {
    const el = this.byId<HTMLElement>("banner");
    if (el) {
      el.textContent = text;
      el.classList.remove("hidden");
    }
  }

  toast(message: unknown): void {
    const text =
      message instanceof ApiError
        ? `${message.envelope.code}: ${message.envelope.message}`
        : String(message);
    const el = this.byId<HTMLElement>("toast");
    if (!el) return;
    el.textContent = text;
    el.classList.remove("hidden");
    setTimeout(() => el.classList.add("hidden"), 4000);
  }

  render(): void {
    this.renderPane("rgb");
    if (this.state.overlay.showThermal && this.thermalMatrices) this.renderPane("thermal");
    this.renderProperties();
    void this.renderHistory();
    const label = this.byId<HTMLElement>("frame-label");
    if (label && this.state.project) {
      label.textContent = `frame ${this.state.currentFrame + 1} / ${this.state.project.num_frames}`;
    }
  }

  private renderPane(pane: PaneName): void {
    const canvas = this.byId<HTMLCanvasElement>(`${pane}-overlay`);
    const image = this.byId<HTMLImageElement>(`${pane}-image`);
    if (!canvas || !image) return;
    image.src = this.api.imageUrl(this.pid, this.state.currentFrame, pane);
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    let frame = this.state.frame(this.state.currentFrame);
    if (pane === "thermal" && frame && this.thermalMatrices) {
      const m = this.thermalMatrices.fromRgb;
      frame = {
        ...frame,
        objects: frame.objects.map((o) => ({ ...o, geometry: mapGeometry(m, o.geometry) })),
      } as FrameJson;
    }
    paintOps(ctx, overlayOps(frame, this.state.selection, this.state.overlay), this.state.overlay, this.scale());
  }

  private renderProperties(): void {
    const selected = this.state.selectedObject();
    const panel = this.byId<HTMLElement>("properties");
    if (!panel) return;
    panel.classList.toggle("hidden", !selected);
    if (!selected) return;
    const idField = this.byId<HTMLElement>("prop-id");
    if (idField) idField.textContent = String(selected.id);
    const tag = this.byId<HTMLInputElement>("prop-tag");
    if (tag && tag.value !== selected.tag) tag.value = selected.tag;
    const status = this.byId<HTMLInputElement>("prop-status");
    if (status) status.checked = selected.status === "lastframe";
    const metaList = this.byId<HTMLElement>("prop-meta");
    if (metaList) {
      metaList.textContent = "";
      for (const [name, value] of Object.entries(selected.meta)) {
        const label = this.root.createElement("label");
        const box = this.root.createElement("input");
        box.type = "checkbox";
        box.checked = value;
        box.addEventListener("change", () => {
          void this.api
            .updateAnnotation(this.pid, this.state.currentFrame, selected.id, {
              meta: { ...selected.meta, [name]: box.checked },
            })
            .then((r) => this.state.applyFrame(r.frame))
            .catch((e) => this.toast(e));
        });
        label.appendChild(box);
        label.appendChild(this.root.createTextNode(name));
        metaList.appendChild(label);
      }
    }
  }

  private async renderHistory(): Promise<void> {
    const strip = this.byId<HTMLElement>("history");
    if (!strip || this.state.selection === null) {
      if (strip) strip.textContent = "";
      return;
    }
    try {
      const { slots } = await this.api.history(this.pid, this.state.selection, this.state.currentFrame);
      strip.textContent = "";
      for (const slot of slots) {
        const cell = this.root.createElement("div");
        cell.className = slot ? "hist-slot" : "hist-slot empty";
        cell.textContent = slot ? `#${slot.frame_index}` : "·";
        strip.appendChild(cell);
      }
    } catch {
      strip.textContent = "";
    }
  }
}

export async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const projectRoot = params.get("root") ?? "";
  const app = new App(document);
  (window as unknown as { app: App }).app = app;
  if (projectRoot) {
    await app.open(projectRoot);
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("toolbar")) {
  void boot();
}
