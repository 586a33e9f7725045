/** Page bootstrap: binds the DOM to the controller.
 *
 * All behaviour lives in the DOM-free modules (ink, client, controller);
 * this file only translates browser events into controller calls and
 * controller view-calls into canvas drawing and text updates.
 */

import { AffineMap, type Point } from "./ink.js";
import { RecognizeClient } from "./client.js";
import { PadController, type PadView, type ResultDisplay } from "./controller.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

class DomView implements PadView {
  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly strokeCount: HTMLElement,
    private readonly resultPanel: HTMLElement,
    private readonly aksharaGlyph: HTMLElement,
    private readonly aksharaCaption: HTMLElement,
    private readonly banner: HTMLElement,
    private readonly busy: HTMLElement,
  ) {}

  renderInk(strokes: Point[][], pending: Point[] | null): void {
    const ctx = this.canvas.getContext("2d");
    if (ctx === null) {
      return;
    }
    const scale = window.devicePixelRatio || 1;
    ctx.setTransform(scale, 0, 0, scale, 0, 0);
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.lineWidth = 2.5;
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
    ctx.strokeStyle = "#1a237e";
    ctx.fillStyle = "#1a237e";
    for (const stroke of strokes) {
      drawStroke(ctx, stroke);
    }
    if (pending !== null) {
      ctx.strokeStyle = "#5c6bc0";
      ctx.fillStyle = "#5c6bc0";
      drawStroke(ctx, pending);
    }
  }

  renderStrokeCount(count: number): void {
    this.strokeCount.textContent = String(count);
  }

  renderResult(display: ResultDisplay | null): void {
    this.resultPanel.replaceChildren();
    if (display === null) {
      this.aksharaGlyph.textContent = "";
      this.aksharaCaption.textContent = "draw something";
      return;
    }
    for (const [i, stroke] of display.strokes.entries()) {
      const row = document.createElement("li");
      const alts = stroke.alternatives
        .map((a) => `${a.label} (${a.loglik.toFixed(1)})`)
        .join(", ");
      row.textContent = `stroke ${i + 1}: ${stroke.label} — ${alts}`;
      this.resultPanel.appendChild(row);
    }
    this.aksharaGlyph.textContent = display.aksharaGlyph ?? "–";
    this.aksharaCaption.textContent = display.diagnostic
      ? `${display.aksharaCaption} (${display.diagnostic})`
      : display.aksharaCaption;
  }

  renderBanner(message: string | null): void {
    this.banner.hidden = message === null;
    const text = this.banner.querySelector(".banner-text");
    if (text !== null) {
      text.textContent = message ?? "";
    }
  }

  renderBusy(busy: boolean): void {
    this.busy.hidden = !busy;
  }
}

function drawStroke(ctx: CanvasRenderingContext2D, stroke: Point[]): void {
  const first = stroke[0];
  if (first === undefined) {
    return;
  }
  if (stroke.length === 1) {
    ctx.beginPath();
    ctx.arc(first.x, first.y, 2, 0, 2 * Math.PI);
    ctx.fill();
    return;
  }
  ctx.beginPath();
  ctx.moveTo(first.x, first.y);
  for (const p of stroke.slice(1)) {
    ctx.lineTo(p.x, p.y);
  }
  ctx.stroke();
}

/** Pointer position in canvas CSS coordinates. */
function canvasPoint(canvas: HTMLCanvasElement, ev: PointerEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
}

export function start(): void {
  const canvas = byId<HTMLCanvasElement>("pad");
  const scale = window.devicePixelRatio || 1;
  canvas.width = Math.round(canvas.clientWidth * scale);
  canvas.height = Math.round(canvas.clientHeight * scale);

  const view = new DomView(
    canvas,
    byId("stroke-count"),
    byId("stroke-list"),
    byId("akshara-glyph"),
    byId("akshara-caption"),
    byId("banner"),
    byId("busy"),
  );
  // Payload coordinates are canvas CSS pixels: the identity map.  Server-side
  // preprocessing normalizes position and scale, so no device scaling is
  // needed — only the affine contract matters, and identity is trivially
  // invertible.
  const controller = new PadController(new RecognizeClient(""), view, AffineMap.identity());
  controller.clear();

  let activePointer: number | null = null;
  canvas.addEventListener("pointerdown", (ev) => {
    if (activePointer !== null) {
      return;
    }
    activePointer = ev.pointerId;
    canvas.setPointerCapture(ev.pointerId);
    const p = canvasPoint(canvas, ev);
    controller.pointerDown(p.x, p.y);
    ev.preventDefault();
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (ev.pointerId !== activePointer) {
      return;
    }
    const p = canvasPoint(canvas, ev);
    controller.pointerMove(p.x, p.y);
  });
  const finish = (ev: PointerEvent) => {
    if (ev.pointerId !== activePointer) {
      return;
    }
    activePointer = null;
    controller.pointerUp();
  };
  canvas.addEventListener("pointerup", finish);
  canvas.addEventListener("pointercancel", finish);

  byId<HTMLButtonElement>("undo").addEventListener("click", () => controller.undo());
  byId<HTMLButtonElement>("clear").addEventListener("click", () => controller.clear());
  byId<HTMLButtonElement>("recognize").addEventListener("click", () => void controller.recognize());
  byId<HTMLButtonElement>("retry").addEventListener("click", () => void controller.recognize());

  const autoBox = byId<HTMLInputElement>("auto");
  autoBox.checked = controller.isAuto();
  autoBox.addEventListener("change", () => controller.setAuto(autoBox.checked));

  const kSlider = byId<HTMLInputElement>("k");
  const kValue = byId("k-value");
  kValue.textContent = kSlider.value;
  controller.setK(Number(kSlider.value));
  kSlider.addEventListener("input", () => {
    controller.setK(Number(kSlider.value));
    kValue.textContent = kSlider.value;
  });

  void new RecognizeClient("").health().then(
    (h) => {
      byId("health").textContent = `service ${h.status}: ${h.classes} classes, ${h.rules} rules`;
    },
    () => {
      byId("health").textContent = "service unreachable";
    },
  );
}

start();
