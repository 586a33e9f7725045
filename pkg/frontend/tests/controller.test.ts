import { describe, expect, it } from "vitest";

import { RecognizeClient, type FetchLike, type RecognizeResult } from "../src/client.js";
import { PadController, describeResult, type PadView, type ResultDisplay } from "../src/controller.js";
import { AffineMap, type Point } from "../src/ink.js";

class StubView implements PadView {
  ink: Point[][] = [];
  pending: Point[] | null = null;
  strokeCount = 0;
  result: ResultDisplay | null = null;
  resultUpdates = 0;
  banner: string | null = null;
  busy = false;

  renderInk(strokes: Point[][], pending: Point[] | null): void {
    this.ink = strokes;
    this.pending = pending;
  }
  renderStrokeCount(count: number): void {
    this.strokeCount = count;
  }
  renderResult(display: ResultDisplay | null): void {
    this.result = display;
    this.resultUpdates += 1;
  }
  renderBanner(message: string | null): void {
    this.banner = message;
  }
  renderBusy(busy: boolean): void {
    this.busy = busy;
  }
}

function resultBody(sequence: string[], akshara: { id: string; unicode: string | null } | null): string {
  return JSON.stringify({
    k: 1,
    strokes: sequence.map((label) => ({ ranked: [{ label, loglik: -1.5 }] })),
    sequence,
    sequence_logliks: sequence.map(() => -1.5),
    total_loglik: -1.5 * sequence.length,
    akshara,
    diagnostic: null,
  });
}

function okFetch(body: string): { fetchFn: FetchLike; bodies: string[] } {
  const bodies: string[] = [];
  const fetchFn: FetchLike = async (_input, init) => {
    bodies.push(init?.body as string);
    return new Response(body, { status: 200, headers: { "content-type": "application/json" } });
  };
  return { fetchFn, bodies };
}

function drawStroke(c: PadController, points: [number, number][]): void {
  const [first, ...rest] = points;
  c.pointerDown(first![0], first![1]);
  for (const [x, y] of rest) {
    c.pointerMove(x, y);
  }
  c.pointerUp();
}

describe("auto-recognition", () => {
  it("sends the ink after every pen-up when auto is on", async () => {
    const { fetchFn, bodies } = okFetch(resultBody(["ln"], null));
    const view = new StubView();
    const c = new PadController(new RecognizeClient("", fetchFn), view);

    drawStroke(c, [[0, 0], [10, 10]]);
    await Promise.resolve(); // let the fire-and-forget request settle
    await new Promise((r) => setTimeout(r));

    expect(bodies).toHaveLength(1);
    expect(JSON.parse(bodies[0]!)).toEqual({ strokes: [[[0, 0], [10, 10]]], k: 1 });
    expect(view.result?.strokes.map((s) => s.label)).toEqual(["ln"]);
    expect(view.busy).toBe(false);
  });

  it("stays quiet when auto is off until recognize() is called", async () => {
    const { fetchFn, bodies } = okFetch(resultBody(["ln"], null));
    const view = new StubView();
    const c = new PadController(new RecognizeClient("", fetchFn), view);
    c.setAuto(false);

    drawStroke(c, [[0, 0], [10, 10]]);
    await new Promise((r) => setTimeout(r));
    expect(bodies).toHaveLength(0);

    await c.recognize();
    expect(bodies).toHaveLength(1);
  });

  it("passes the configured k through to the payload", async () => {
    const { fetchFn, bodies } = okFetch(resultBody(["ln"], null));
    const view = new StubView();
    const c = new PadController(new RecognizeClient("", fetchFn), view);
    c.setK(3);

    drawStroke(c, [[0, 0], [5, 5]]);
    await new Promise((r) => setTimeout(r));
    expect(JSON.parse(bodies[0]!).k).toBe(3);
  });

  it("does nothing on an empty pad", async () => {
    const { fetchFn, bodies } = okFetch(resultBody(["ln"], null));
    const c = new PadController(new RecognizeClient("", fetchFn), new StubView());
    await c.recognize();
    expect(bodies).toHaveLength(0);
  });
});

describe("error banner", () => {
  it("shows a banner on failure and keeps the ink", async () => {
    const view = new StubView();
    const failing: FetchLike = async () => {
      throw new TypeError("fetch failed");
    };
    const c = new PadController(new RecognizeClient("", failing), view);

    drawStroke(c, [[0, 0], [4, 4]]);
    await new Promise((r) => setTimeout(r));

    expect(view.banner).toContain("fetch failed");
    expect(view.banner).toContain("network");
    expect(view.ink).toEqual([[{ x: 0, y: 0 }, { x: 4, y: 4 }]]);
    expect(c.pad.strokeCount()).toBe(1);
    expect(view.busy).toBe(false);
  });

  it("retrying after recovery clears the banner and renders the result", async () => {
    const view = new StubView();
    let down = true;
    const flaky: FetchLike = async () => {
      if (down) {
        throw new TypeError("fetch failed");
      }
      return new Response(resultBody(["ln"], { id: "akA", unicode: "অ" }), { status: 200 });
    };
    const c = new PadController(new RecognizeClient("", flaky), view);

    drawStroke(c, [[0, 0], [4, 4]]);
    await new Promise((r) => setTimeout(r));
    expect(view.banner).not.toBeNull();

    down = false;
    await c.recognize(); // the retry button calls exactly this
    expect(view.banner).toBeNull();
    expect(view.result?.aksharaGlyph).toBe("অ");
  });

  it("shows the service's own error message", async () => {
    const view = new StubView();
    const rejecting: FetchLike = async () =>
      new Response(JSON.stringify({ error: { code: "invalid_k", message: "k must be >= 1" } }), {
        status: 400,
      });
    const c = new PadController(new RecognizeClient("", rejecting), view);
    drawStroke(c, [[0, 0], [4, 4]]);
    await new Promise((r) => setTimeout(r));
    expect(view.banner).toBe("k must be >= 1 (invalid_k)");
  });
});

describe("undo and clear", () => {
  it("undo re-recognizes the remaining ink", async () => {
    const { fetchFn, bodies } = okFetch(resultBody(["ln"], null));
    const view = new StubView();
    const c = new PadController(new RecognizeClient("", fetchFn), view);

    drawStroke(c, [[0, 0], [1, 1]]);
    drawStroke(c, [[2, 2], [3, 3]]);
    await new Promise((r) => setTimeout(r));
    expect(bodies).toHaveLength(2);

    c.undo();
    await new Promise((r) => setTimeout(r));
    expect(bodies).toHaveLength(3);
    expect(JSON.parse(bodies[2]!).strokes).toEqual([[[0, 0], [1, 1]]]);
    expect(view.strokeCount).toBe(1);
  });

  it("undoing the last stroke clears the result instead of requesting", async () => {
    const { fetchFn, bodies } = okFetch(resultBody(["ln"], null));
    const view = new StubView();
    const c = new PadController(new RecognizeClient("", fetchFn), view);

    drawStroke(c, [[0, 0], [1, 1]]);
    await new Promise((r) => setTimeout(r));
    const before = bodies.length;

    c.undo();
    await new Promise((r) => setTimeout(r));
    expect(bodies).toHaveLength(before);
    expect(view.result).toBeNull();
    expect(view.strokeCount).toBe(0);
  });

  it("clear wipes ink, result, and banner", async () => {
    const view = new StubView();
    const failing: FetchLike = async () => {
      throw new TypeError("fetch failed");
    };
    const c = new PadController(new RecognizeClient("", failing), view);
    drawStroke(c, [[0, 0], [1, 1]]);
    await new Promise((r) => setTimeout(r));

    c.clear();
    expect(view.strokeCount).toBe(0);
    expect(view.result).toBeNull();
    expect(view.banner).toBeNull();
    expect(view.ink).toEqual([]);
  });
});

describe("in-flight behaviour", () => {
  it("accepts input during a request and lets the newer pen-up win", async () => {
    const view = new StubView();
    const resolvers: ((r: Response) => void)[] = [];
    const slow: FetchLike = (_input, init) =>
      new Promise<Response>((resolve, reject) => {
        init?.signal?.addEventListener("abort", () =>
          reject(new DOMException("aborted", "AbortError")),
        );
        resolvers.push(resolve);
      });
    const c = new PadController(new RecognizeClient("", slow), view);

    drawStroke(c, [[0, 0], [1, 1]]);
    // The first request is still pending; drawing proceeds regardless.
    drawStroke(c, [[2, 2], [3, 3]]);
    expect(view.strokeCount).toBe(2);
    expect(resolvers).toHaveLength(2);

    resolvers[1]!(
      new Response(resultBody(["ln", "lp"], { id: "akA", unicode: "অ" }), { status: 200 }),
    );
    await new Promise((r) => setTimeout(r));

    expect(view.result?.strokes).toHaveLength(2);
    expect(view.result?.aksharaGlyph).toBe("অ");
    expect(view.busy).toBe(false);
    expect(view.banner).toBeNull();
  });

  it("never renders a superseded response", async () => {
    const view = new StubView();
    const resolvers: ((r: Response) => void)[] = [];
    const manual: FetchLike = () =>
      new Promise<Response>((resolve) => {
        resolvers.push(resolve); // ignores the abort signal on purpose
      });
    const c = new PadController(new RecognizeClient("", manual), view);

    drawStroke(c, [[0, 0], [1, 1]]);
    drawStroke(c, [[2, 2], [3, 3]]);

    // Old response arrives late; it must not touch the panels.
    resolvers[0]!(new Response(resultBody(["STALE"], null), { status: 200 }));
    await new Promise((r) => setTimeout(r));
    expect(view.result).toBeNull();
    expect(view.busy).toBe(true); // newer request still pending

    resolvers[1]!(new Response(resultBody(["ln", "lp"], null), { status: 200 }));
    await new Promise((r) => setTimeout(r));
    expect(view.result?.strokes.map((s) => s.label)).toEqual(["ln", "lp"]);
    expect(view.busy).toBe(false);
  });
});

describe("describeResult", () => {
  const base: RecognizeResult = {
    k: 2,
    strokes: [
      { ranked: [{ label: "ln", loglik: -1.0 }, { label: "lp", loglik: -4.0 }] },
      { ranked: [{ label: "lp", loglik: -2.0 }] },
    ],
    sequence: ["ln", "lp"],
    sequence_logliks: [-1.0, -2.0],
    total_loglik: -3.0,
    akshara: { id: "akA", unicode: "অ" },
    diagnostic: null,
  };

  it("lists per-stroke labels with their alternatives", () => {
    const d = describeResult(base);
    expect(d.strokes).toEqual([
      {
        label: "ln",
        loglik: -1.0,
        alternatives: [
          { label: "ln", loglik: -1.0 },
          { label: "lp", loglik: -4.0 },
        ],
      },
      { label: "lp", loglik: -2.0, alternatives: [{ label: "lp", loglik: -2.0 }] },
    ]);
    expect(d.aksharaGlyph).toBe("অ");
    expect(d.aksharaCaption).toBe("akA");
  });

  it("renders 'no akshara' when composition failed but keeps the labels", () => {
    const d = describeResult({ ...base, akshara: null });
    expect(d.aksharaGlyph).toBeNull();
    expect(d.aksharaCaption).toBe("no akshara");
    expect(d.strokes.map((s) => s.label)).toEqual(["ln", "lp"]);
  });

  it("falls back to the akshara id when no glyph is known", () => {
    const d = describeResult({ ...base, akshara: { id: "akB", unicode: null } });
    expect(d.aksharaGlyph).toBe("akB");
    expect(d.aksharaCaption).toBe("akB");
  });

  it("carries the diagnostic through", () => {
    const d = describeResult({ ...base, akshara: null, diagnostic: "input has 9 strokes" });
    expect(d.diagnostic).toContain("9 strokes");
  });
});
