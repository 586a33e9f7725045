/** Stroke capture model: an append-only list of pen trajectories.
 *
 * The pad records points exactly as the pointer reports them, in canvas
 * coordinates (CSS pixels relative to the canvas origin).  Payloads sent to
 * the recognition service are produced by applying an affine map to every
 * point; the map is diagonal (independent x/y scale plus offset), so it is
 * invertible whenever both scales are non-zero.
 */

export interface Point {
  readonly x: number;
  readonly y: number;
}

/** Affine change of coordinates: payload = canvas * scale + offset. */
export class AffineMap {
  constructor(
    readonly scaleX: number,
    readonly scaleY: number,
    readonly offsetX: number,
    readonly offsetY: number,
  ) {
    if (scaleX === 0 || scaleY === 0 || ![scaleX, scaleY, offsetX, offsetY].every(Number.isFinite)) {
      throw new Error("affine map must have finite parameters and non-zero scales");
    }
  }

  static identity(): AffineMap {
    return new AffineMap(1, 1, 0, 0);
  }

  /**
   * Map from a canvas element's CSS box onto its backing store, so payload
   * coordinates are device pixels: payload = canvasPoint * (width / cssWidth).
   */
  static forCanvas(cssWidth: number, cssHeight: number, width: number, height: number): AffineMap {
    return new AffineMap(width / cssWidth, height / cssHeight, 0, 0);
  }

  apply(p: Point): Point {
    return { x: p.x * this.scaleX + this.offsetX, y: p.y * this.scaleY + this.offsetY };
  }

  inverse(): AffineMap {
    return new AffineMap(
      1 / this.scaleX,
      1 / this.scaleY,
      -this.offsetX / this.scaleX,
      -this.offsetY / this.scaleY,
    );
  }
}

/** Wire format of a recognition request. */
export interface InkPayload {
  strokes: [number, number][][];
  k: number;
}

export class StrokePad {
  private finished: Point[][] = [];
  private current: Point[] | null = null;

  /** Completed strokes, oldest first.  The returned arrays are copies. */
  strokes(): Point[][] {
    return this.finished.map((s) => s.slice());
  }

  strokeCount(): number {
    return this.finished.length;
  }

  /** The stroke being drawn right now, or null between pen-down and pen-up. */
  pendingStroke(): Point[] | null {
    return this.current ? this.current.slice() : null;
  }

  penDown(x: number, y: number): void {
    if (this.current !== null) {
      // A second pen-down without a pen-up (e.g. pointer capture lost):
      // finish the open stroke first so no drawn points are dropped.
      this.penUp();
    }
    this.current = [{ x, y }];
  }

  penMove(x: number, y: number): void {
    if (this.current === null) {
      return; // hover movement with the pen up is not ink
    }
    this.current.push({ x, y });
  }

  /** End the open stroke.  A tap (no movement) still yields a 1-point stroke. */
  penUp(): Point[] | null {
    if (this.current === null) {
      return null;
    }
    const stroke = this.current;
    this.current = null;
    this.finished.push(stroke);
    return stroke.slice();
  }

  /** Remove the most recent completed stroke only. */
  undo(): boolean {
    if (this.finished.length === 0) {
      return false;
    }
    this.finished.pop();
    return true;
  }

  clear(): void {
    this.finished = [];
    this.current = null;
  }

  /**
   * Build the request payload: every completed stroke, in drawing order,
   * with `map` applied to each point.
   */
  toPayload(k: number, map: AffineMap = AffineMap.identity()): InkPayload {
    if (!Number.isInteger(k) || k < 1) {
      throw new Error(`k must be a positive integer, got ${k}`);
    }
    return {
      strokes: this.finished.map((stroke) =>
        stroke.map((p) => {
          const q = map.apply(p);
          return [q.x, q.y] as [number, number];
        }),
      ),
      k,
    };
  }
}
