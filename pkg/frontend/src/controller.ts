/** Coordinates the stroke pad, the service client, and a view.
 *
 * The controller is DOM-free: the page supplies a `PadView` that renders
 * state changes, and forwards raw pointer positions (canvas coordinates)
 * here.  Recognition runs in the background — pointer input keeps flowing
 * while a request is in flight, and a pen-up during one simply starts a
 * newer request that supersedes it.
 */

import { AffineMap, StrokePad, type Point } from "./ink.js";
import type { RecognizeClient, RecognizeResult } from "./client.js";

/** What the result panel should show for one completed stroke. */
export interface StrokeDisplay {
  label: string;
  loglik: number;
  alternatives: { label: string; loglik: number }[];
}

export interface ResultDisplay {
  strokes: StrokeDisplay[];
  /** Glyph to render large, or null when no akshara was composed. */
  aksharaGlyph: string | null;
  /** Caption under the glyph: the akshara id, or "no akshara". */
  aksharaCaption: string;
  diagnostic: string | null;
}

export interface PadView {
  renderInk(strokes: Point[][], pending: Point[] | null): void;
  renderStrokeCount(count: number): void;
  renderResult(display: ResultDisplay | null): void;
  /** null hides the banner; a message shows it without blocking input. */
  renderBanner(message: string | null): void;
  renderBusy(busy: boolean): void;
}

export function describeResult(result: RecognizeResult): ResultDisplay {
  const strokes: StrokeDisplay[] = result.sequence.map((label, i) => ({
    label,
    loglik: result.sequence_logliks[i] ?? NaN,
    alternatives: (result.strokes[i]?.ranked ?? []).map((r) => ({
      label: r.label,
      loglik: r.loglik,
    })),
  }));
  if (result.akshara === null) {
    return { strokes, aksharaGlyph: null, aksharaCaption: "no akshara", diagnostic: result.diagnostic };
  }
  return {
    strokes,
    aksharaGlyph: result.akshara.unicode ?? result.akshara.id,
    aksharaCaption: result.akshara.id,
    diagnostic: result.diagnostic,
  };
}

export class PadController {
  readonly pad = new StrokePad();
  private k = 1;
  private auto = true;

  constructor(
    private readonly client: RecognizeClient,
    private readonly view: PadView,
    private readonly map: AffineMap = AffineMap.identity(),
  ) {}

  pointerDown(x: number, y: number): void {
    this.pad.penDown(x, y);
    this.refreshInk();
  }

  pointerMove(x: number, y: number): void {
    this.pad.penMove(x, y);
    this.refreshInk();
  }

  /** Finish the stroke; in auto mode this also kicks off recognition. */
  pointerUp(): void {
    if (this.pad.penUp() === null) {
      return;
    }
    this.refreshInk();
    if (this.auto) {
      void this.recognize();
    }
  }

  undo(): void {
    if (!this.pad.undo()) {
      return;
    }
    this.refreshInk();
    if (this.pad.strokeCount() === 0) {
      this.view.renderResult(null);
    } else if (this.auto) {
      void this.recognize();
    }
  }

  clear(): void {
    this.pad.clear();
    this.refreshInk();
    this.view.renderResult(null);
    this.view.renderBanner(null);
  }

  setK(k: number): void {
    if (!Number.isInteger(k) || k < 1) {
      throw new Error(`k must be a positive integer, got ${k}`);
    }
    this.k = k;
  }

  getK(): number {
    return this.k;
  }

  setAuto(auto: boolean): void {
    this.auto = auto;
  }

  isAuto(): boolean {
    return this.auto;
  }

  /**
   * Send the current ink for recognition.  Errors raise the banner and leave
   * the ink untouched, so "retry" is just calling this again.
   */
  async recognize(): Promise<void> {
    if (this.pad.strokeCount() === 0) {
      return;
    }
    const payload = this.pad.toPayload(this.k, this.map);
    this.view.renderBusy(true);
    const outcome = await this.client.recognize(payload);
    if (outcome.kind === "superseded") {
      return; // a newer request owns the busy flag and the panels now
    }
    this.view.renderBusy(false);
    if (outcome.kind === "error") {
      this.view.renderBanner(`${outcome.message} (${outcome.code})`);
      return;
    }
    this.view.renderBanner(null);
    this.view.renderResult(describeResult(outcome.result));
  }

  private refreshInk(): void {
    this.view.renderInk(this.pad.strokes(), this.pad.pendingStroke());
    this.view.renderStrokeCount(this.pad.strokeCount());
  }
}
