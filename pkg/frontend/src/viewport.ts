/**
 * Zoom/pan transform between image pixels and screen pixels.
 *
 * screen = image * zoom + pan. All overlays are stored in image
 * coordinates and mapped through this transform at render time, so the
 * round trip screen -> image -> screen must be the identity (well
 * within half a pixel at any zoom).
 */

export interface Point {
  x: number;
  y: number;
}

export class Viewport {
  zoom = 1;
  panX = 0;
  panY = 0;

  imageToScreen(p: Point): Point {
    return { x: p.x * this.zoom + this.panX, y: p.y * this.zoom + this.panY };
  }

  screenToImage(p: Point): Point {
    return { x: (p.x - this.panX) / this.zoom, y: (p.y - this.panY) / this.zoom };
  }

  /** Change zoom while keeping the given screen point fixed. */
  setZoom(zoom: number, anchor?: Point): void {
    if (!(zoom > 0)) {
      throw new Error("zoom must be positive");
    }
    if (anchor) {
      const before = this.screenToImage(anchor);
      this.zoom = zoom;
      this.panX = anchor.x - before.x * zoom;
      this.panY = anchor.y - before.y * zoom;
    } else {
      this.zoom = zoom;
    }
  }

  panBy(dx: number, dy: number): void {
    this.panX += dx;
    this.panY += dy;
  }
}
