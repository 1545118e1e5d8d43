/**
 * The single-page studio: load screenshots per game state, drag rectangles
 * to annotate elements, define cues from regions, edit hotkeys, preview
 * the navigation grid, and export the bundle to the hosting CLI.
 */

import { denormalize, normalizeRect, RectTooSmall, type Block } from "./blocks.js";
import { previewGrid } from "./grid.js";
import { exportBundle, ExportBlocked } from "./exporter.js";
import {
  emptyProject,
  UNKNOWN_STATE,
  type DraftElement,
  type DraftHotkey,
  type StudioProject,
} from "./model.js";
import { validateProject } from "./validate.js";

interface LoadedShot {
  stateId: string;
  image: HTMLImageElement;
}

export class Studio {
  project: StudioProject = emptyProject();
  shots: LoadedShot[] = [];
  current: LoadedShot | null = null;
  lastRect: { left: number; top: number; right: number; bottom: number } | null =
    null;
  private drag: { x: number; y: number } | null = null;

  constructor(private doc: Document) {}

  private byId<T extends HTMLElement>(id: string): T {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  }

  get canvas(): HTMLCanvasElement {
    return this.byId<HTMLCanvasElement>("shot-canvas");
  }

  init(): void {
    this.byId<HTMLInputElement>("shot-file").addEventListener("change", (event) => {
      const input = event.target as HTMLInputElement;
      if (input.files && input.files[0]) {
        const stateId =
          this.byId<HTMLInputElement>("state-id").value.trim() || UNKNOWN_STATE;
        void this.loadScreenshot(input.files[0], stateId);
      }
    });
    const canvas = this.canvas;
    canvas.addEventListener("mousedown", (e) => {
      this.drag = this.canvasPoint(e);
    });
    canvas.addEventListener("mouseup", (e) => {
      if (!this.drag) return;
      const start = this.drag;
      const end = this.canvasPoint(e);
      this.drag = null;
      this.finishDrag(
        Math.min(start.x, end.x), Math.min(start.y, end.y),
        Math.max(start.x, end.x), Math.max(start.y, end.y));
    });
    this.byId("add-element").addEventListener("click", () => this.addElement());
    this.byId("add-cue").addEventListener("click", () => void this.addCue());
    this.byId("add-hotkey").addEventListener("click", () => this.addHotkey());
    this.byId("preview-grid").addEventListener("click", () => this.preview());
    this.byId("validate").addEventListener("click", () => this.showFindings());
    this.byId("export").addEventListener("click", () => void this.export());
    this.byId<HTMLInputElement>("game-id").addEventListener("input", (e) => {
      this.project.gameId = (e.target as HTMLInputElement).value.trim();
    });
    this.redraw();
  }

  private canvasPoint(e: MouseEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    const scaleX = this.canvas.width / rect.width;
    const scaleY = this.canvas.height / rect.height;
    return {
      x: Math.round((e.clientX - rect.left) * scaleX),
      y: Math.round((e.clientY - rect.top) * scaleY),
    };
  }

  async loadScreenshot(file: File, stateId: string): Promise<void> {
    const url = URL.createObjectURL(file);
    const image = new Image();
    await new Promise<void>((resolve, reject) => {
      image.onload = () => resolve();
      image.onerror = () => reject(new Error("cannot decode screenshot"));
      image.src = url;
    });
    const shot = { stateId, image };
    this.shots = this.shots.filter((s) => s.stateId !== stateId).concat(shot);
    this.project.screenshots = this.shots.map((s) => ({
      stateId: s.stateId,
      width: s.image.naturalWidth,
      height: s.image.naturalHeight,
    }));
    this.current = shot;
    this.redraw();
    this.setStatus(`loaded ${stateId} (${image.naturalWidth}x${image.naturalHeight})`);
  }

  private finishDrag(left: number, top: number, right: number, bottom: number): void {
    if (!this.current) {
      this.setStatus("load a screenshot first");
      return;
    }
    this.lastRect = { left, top, right, bottom };
    try {
      const block = this.dragToBlock();
      this.setStatus(`rect [${block.join(", ")}] ready; add as element or cue`);
    } catch (exc) {
      if (exc instanceof RectTooSmall) {
        this.lastRect = null;
        this.setStatus(String(exc.message));
        return;
      }
      throw exc;
    }
    this.redraw();
  }

  dragToBlock(): Block {
    if (!this.current || !this.lastRect) throw new Error("no rect drawn");
    const { image } = this.current;
    const { left, top, right, bottom } = this.lastRect;
    return normalizeRect(left, top, right, bottom,
      image.naturalWidth, image.naturalHeight);
  }

  addElement(): void {
    if (!this.current || !this.lastRect) {
      this.setStatus("draw a rectangle first");
      return;
    }
    const element: DraftElement = {
      stateId: this.current.stateId,
      block: this.dragToBlock(),
      content: this.byId<HTMLInputElement>("element-content").value.trim(),
      interactivity: this.byId<HTMLInputElement>("element-interactive").checked,
    };
    this.project.elements.push(element);
    this.renderLists();
    this.redraw();
  }

  async addCue(): Promise<void> {
    if (!this.current || !this.lastRect) {
      this.setStatus("draw the cue region first");
      return;
    }
    const eventId = this.byId<HTMLInputElement>("cue-id").value.trim();
    const message = this.byId<HTMLInputElement>("cue-message").value.trim();
    const severity = this.byId<HTMLInputElement>("cue-critical").checked
      ? "critical" as const : "normal" as const;
    const image = await this.cropPng();
    this.project.cues.push({
      eventId, message, severity, image, region: this.dragToBlock(),
    });
    this.renderLists();
  }

  private async cropPng(): Promise<Uint8Array> {
    if (!this.current || !this.lastRect) throw new Error("no rect drawn");
    const { left, top, right, bottom } = this.lastRect;
    const crop = this.doc.createElement("canvas");
    crop.width = right - left;
    crop.height = bottom - top;
    const ctx = crop.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    ctx.drawImage(this.current.image, left, top, crop.width, crop.height,
      0, 0, crop.width, crop.height);
    const blob = await new Promise<Blob | null>((resolve) =>
      crop.toBlob(resolve, "image/png"));
    if (!blob) throw new Error("PNG encoding failed");
    return new Uint8Array(await blob.arrayBuffer());
  }

  addHotkey(): void {
    const raw = this.byId<HTMLTextAreaElement>("hotkey-json").value.trim();
    if (!raw) return;
    try {
      const parsed = JSON.parse(raw) as DraftHotkey | DraftHotkey[];
      const list = Array.isArray(parsed) ? parsed : [parsed];
      this.project.hotkeys.push(...list);
      this.renderLists();
      this.setStatus(`${list.length} hotkey(s) added`);
    } catch (exc) {
      this.setStatus(`hotkey JSON invalid: ${exc}`);
    }
  }

  preview(): void {
    if (!this.current) return;
    const stateId = this.current.stateId;
    const entries = previewGrid(
      this.project.elements.filter((e) => e.stateId === stateId));
    this.redraw();
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { naturalWidth: w, naturalHeight: h } = this.current.image;
    ctx.font = "16px sans-serif";
    for (const entry of entries) {
      const [left, top] = denormalize(entry.element.block, w, h);
      ctx.fillStyle = "#ffd23f";
      ctx.fillText(`(${entry.row},${entry.col})`, left + 4, top + 18);
    }
    this.setStatus(entries.length
      ? `${entries.length} interactive elements numbered`
      : "no interactive elements to preview");
  }

  showFindings(): string {
    const findings = validateProject(this.project);
    const text = findings.length
      ? findings.map((f) => `${f.severity.toUpperCase()} ${f.code} ${f.pointer}: ${f.message}`).join("\n")
      : "no findings";
    this.byId<HTMLPreElement>("findings").textContent = text;
    return text;
  }

  async export(): Promise<void> {
    let files;
    try {
      files = exportBundle(this.project);
    } catch (exc) {
      if (exc instanceof ExportBlocked) {
        this.byId<HTMLPreElement>("findings").textContent = exc.findings
          .map((f) => `ERROR ${f.code} ${f.pointer}: ${f.message}`)
          .join("\n");
        this.setStatus("export blocked; fix the findings above");
        return;
      }
      throw exc;
    }
    const form = new FormData();
    for (const [path, data] of files) {
      const blob = typeof data === "string"
        ? new Blob([data], { type: "text/plain" })
        : new Blob([data.slice().buffer], { type: "application/octet-stream" });
      form.append(path, blob, path);
    }
    try {
      const response = await fetch("/export", { method: "POST", body: form });
      const payload = await response.json();
      this.setStatus(payload.ok
        ? `exported to ${payload.bundle}`
        : `server findings: ${JSON.stringify(payload.findings)}`);
    } catch {
      this.downloadOffline(files);
    }
  }

  /** Offline fallback: download the bundle as one JSON file. */
  private downloadOffline(files: Map<string, Uint8Array | string>): void {
    const payload: Record<string, string> = {};
    for (const [path, data] of files) {
      payload[path] = typeof data === "string"
        ? data
        : btoa(String.fromCharCode(...data));
    }
    const blob = new Blob(
      [JSON.stringify({ files_b64: payload }, null, 2)],
      { type: "application/json" });
    const anchor = this.doc.createElement("a");
    anchor.href = URL.createObjectURL(blob);
    anchor.download = `${this.project.gameId || "bundle"}.bundle.json`;
    anchor.click();
    this.setStatus("no export host reachable; bundle downloaded instead");
  }

  private renderLists(): void {
    this.byId<HTMLUListElement>("element-list").innerHTML = this.project.elements
      .map((e) => `<li>[${e.stateId}] ${e.content || "(unlabeled)"}`
        + `${e.interactivity ? "" : " (decorative)"} ${e.block.join(", ")}</li>`)
      .join("");
    this.byId<HTMLUListElement>("cue-list").innerHTML = this.project.cues
      .map((c) => `<li>${c.eventId} (${c.severity}): ${c.message}</li>`)
      .join("");
    this.byId<HTMLUListElement>("hotkey-list").innerHTML = this.project.hotkeys
      .map((h) => `<li>${h.key} -> ${h.id} (${h.kind})</li>`)
      .join("");
  }

  private redraw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    if (!this.current) {
      ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
      return;
    }
    const { image } = this.current;
    this.canvas.width = image.naturalWidth;
    this.canvas.height = image.naturalHeight;
    ctx.drawImage(image, 0, 0);
    ctx.strokeStyle = "#2fd27d";
    ctx.lineWidth = 2;
    for (const element of this.project.elements) {
      if (element.stateId !== this.current.stateId) continue;
      const [l, t, r, b] = denormalize(element.block, image.naturalWidth,
        image.naturalHeight);
      ctx.strokeRect(l, t, r - l, b - t);
    }
    if (this.lastRect) {
      ctx.strokeStyle = "#ffd23f";
      const { left, top, right, bottom } = this.lastRect;
      ctx.strokeRect(left, top, right - left, bottom - top);
    }
  }

  private setStatus(text: string): void {
    this.byId("status").textContent = text;
  }
}

export function initStudio(doc: Document): Studio {
  const studio = new Studio(doc);
  studio.init();
  return studio;
}
