/**
 * Overlay state: committed boundaries, fluid contours, and the live
 * preview. Everything here came from a service response; the client
 * never computes a path itself.
 *
 * Preview staleness: every preview-changing request (add/undo) takes a
 * monotonically increasing sequence number. A preview response is
 * applied only when it carries the latest issued sequence, so a
 * superseded response can never paint the screen, not even for a frame.
 */

import type { Preview } from "./protocol.js";

export class OverlayStore {
  committedBoundaries = new Map<string, number[]>();
  fluidContours: [number, number][][] = [];
  preview: Preview = { kind: "empty" };

  private latestSeq = 0;
  private appliedLog: Preview[] = [];

  /** Reserve the sequence number for a preview-changing request. */
  nextPreviewSeq(): number {
    return ++this.latestSeq;
  }

  /** Apply a preview response; returns false when it was stale. */
  applyPreview(seq: number, preview: Preview): boolean {
    if (seq !== this.latestSeq) {
      return false;
    }
    this.preview = preview;
    this.appliedLog.push(preview);
    return true;
  }

  clearPreview(): void {
    this.preview = { kind: "empty" };
  }

  /** Every preview that was actually shown, oldest first (for tests). */
  get shownPreviews(): readonly Preview[] {
    return this.appliedLog;
  }

  commitBoundary(name: string, y: number[]): void {
    this.committedBoundaries.set(name, y);
    this.clearPreview();
  }

  commitFluid(contour: [number, number][]): void {
    this.fluidContours.push(contour);
    this.clearPreview();
  }
}
