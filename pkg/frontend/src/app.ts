/**
 * Annotation controller: turns clicks into protocol requests and keeps
 * the overlay in sync with session state. Rendering is a thin layer on
 * top (see render()); all decisions live here so the controller can be
 * driven headlessly in tests.
 */

import { Preview, ServiceClient, SliceData, VolumeInfo } from "./protocol.js";
import { OverlayStore } from "./overlay.js";
import { Point, Viewport } from "./viewport.js";

export type ModeKind = "layer" | "grid" | "fluid";

export interface Mode {
  kind: ModeKind;
  boundary?: string;
}

const COMMIT_MINIMUM: Record<ModeKind, number> = {
  layer: 1,
  grid: 2,
  fluid: 3,
};

export type ConnectionStatus = "idle" | "ready" | "error";

export class AnnotationApp {
  readonly client: ServiceClient;
  readonly viewport: Viewport;
  readonly overlay: OverlayStore;

  volume: VolumeInfo | null = null;
  slice: SliceData | null = null;
  mode: Mode | null = null;
  pendingAnchors = 0;
  status: ConnectionStatus = "idle";
  lastError: string | null = null;

  constructor(client: ServiceClient, viewport?: Viewport, overlay?: OverlayStore) {
    this.client = client;
    this.viewport = viewport ?? new Viewport();
    this.overlay = overlay ?? new OverlayStore();
  }

  async loadVolume(path: string, bscanIndex = 0): Promise<VolumeInfo> {
    const payload = await this.client.call("load_volume", {
      path,
      bscan_index: bscanIndex,
    });
    this.volume = payload as unknown as VolumeInfo;
    this.slice = (await this.client.call("get_slice", {
      index: bscanIndex,
    })) as unknown as SliceData;
    this.status = "ready";
    return this.volume;
  }

  async setMode(mode: Mode): Promise<void> {
    await this.client.call("set_mode", {
      mode: mode.kind,
      boundary: mode.boundary ?? null,
    });
    this.mode = mode;
    this.pendingAnchors = 0;
    this.overlay.clearPreview();
  }

  get commitEnabled(): boolean {
    if (!this.mode) {
      return false;
    }
    return this.pendingAnchors >= COMMIT_MINIMUM[this.mode.kind];
  }

  private insideImage(p: Point): boolean {
    if (!this.volume) {
      return false;
    }
    return (
      p.x >= 0 && p.x < this.volume.width && p.y >= 0 && p.y < this.volume.height
    );
  }

  /**
   * Handle a click at screen coordinates: convert to image coordinates,
   * send add_anchor, and apply the returned preview unless a newer
   * anchor request was issued meanwhile. Returns false (and sends
   * nothing) for clicks outside the image.
   */
  async clickAt(screen: Point): Promise<boolean> {
    if (!this.mode || this.status !== "ready") {
      return false;
    }
    const image = this.viewport.screenToImage(screen);
    if (!this.insideImage(image)) {
      return false;
    }
    const seq = this.overlay.nextPreviewSeq();
    const { result } = this.client.request("add_anchor", {
      x: Math.round(image.x),
      y: image.y,
    });
    try {
      const payload = await result;
      this.pendingAnchors += 1;
      this.overlay.applyPreview(seq, payload as unknown as Preview);
      return true;
    } catch (err) {
      this.lastError = String(err);
      return false;
    }
  }

  async undo(): Promise<void> {
    if (this.pendingAnchors === 0) {
      return;
    }
    const seq = this.overlay.nextPreviewSeq();
    try {
      const payload = await this.client.call("undo_anchor", {});
      this.pendingAnchors -= 1;
      this.overlay.applyPreview(seq, payload as unknown as Preview);
    } catch (err) {
      this.lastError = String(err);
    }
  }

  /** Commit the pending anchors; the result moves from the preview
   * layer to the committed overlay. */
  async commit(): Promise<void> {
    if (!this.commitEnabled || !this.mode) {
      return;
    }
    const payload = await this.client.call("commit", {});
    if (payload.kind === "fluid") {
      this.overlay.commitFluid(payload.contour as [number, number][]);
    } else {
      this.overlay.commitBoundary(
        String(payload.boundary),
        payload.y as number[],
      );
    }
    this.pendingAnchors = 0;
  }

  /** Correct a committed boundary between two image-space anchors. */
  async splice(boundary: string, a: Point, b: Point): Promise<void> {
    const payload = await this.client.call("splice", {
      boundary,
      x0: Math.round(a.x),
      y0: a.y,
      x1: Math.round(b.x),
      y1: b.y,
    });
    this.overlay.committedBoundaries.set(boundary, payload.y as number[]);
  }

  async exportRecord(outDir: string): Promise<string[]> {
    const payload = await this.client.call("export", { out_dir: outDir });
    return payload.files as string[];
  }
}

const BOUNDARY_COLORS: Record<string, string> = {
  ILM: "#ff4040",
  RNFL_GCL: "#ffa000",
  GCL_IPL: "#ffff00",
  IPL_INL: "#40ff40",
  INL_OPL: "#00dcdc",
  OPL_ONL: "#4080ff",
  ONL_PR: "#a040ff",
  PR_RPE: "#ff40ff",
  RPE_OUTER: "#ffffff",
};

/** Draw the slice and overlays onto a canvas 2D context. */
export function render(
  app: AnnotationApp,
  ctx: CanvasRenderingContext2D,
  sliceImage: CanvasImageSource | null,
): void {
  const { viewport, overlay } = app;
  ctx.save();
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.setTransform(viewport.zoom, 0, 0, viewport.zoom, viewport.panX, viewport.panY);
  if (sliceImage) {
    ctx.drawImage(sliceImage, 0, 0);
  }
  ctx.lineWidth = 1 / viewport.zoom;
  for (const [name, y] of overlay.committedBoundaries) {
    ctx.strokeStyle = BOUNDARY_COLORS[name] ?? "#ffffff";
    strokePath(ctx, y.map((v, x) => [x, v] as [number, number]));
  }
  ctx.strokeStyle = "#00ffff";
  for (const contour of overlay.fluidContours) {
    strokePath(ctx, contour, true);
  }
  const preview = overlay.preview;
  ctx.strokeStyle = "#f0f0f0";
  ctx.setLineDash([4 / viewport.zoom, 3 / viewport.zoom]);
  if (preview.kind === "boundary") {
    strokePath(ctx, preview.y.map((v, x) => [x, v] as [number, number]));
  } else if (preview.kind === "polyline") {
    strokePath(ctx, preview.nodes);
  }
  ctx.restore();
}

function strokePath(
  ctx: CanvasRenderingContext2D,
  points: [number, number][],
  close = false,
): void {
  if (points.length === 0) {
    return;
  }
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (const [x, y] of points.slice(1)) {
    ctx.lineTo(x, y);
  }
  if (close) {
    ctx.closePath();
  }
  ctx.stroke();
}
