/** HTTP client for the recognition service.
 *
 * The pad fires a request on every pen-up in auto mode, so requests can pile
 * up faster than the service answers.  This client keeps at most one request
 * in flight: starting a new `recognize` aborts the previous one, and a call
 * whose response arrives after a newer call has started resolves to a
 * `superseded` outcome that callers simply drop.
 */

import type { InkPayload } from "./ink.js";

export interface RankedLabel {
  label: string;
  loglik: number;
}

export interface AksharaResult {
  id: string;
  unicode: string | null;
}

/** Body of a successful /api/recognize response. */
export interface RecognizeResult {
  k: number;
  strokes: { ranked: RankedLabel[] }[];
  sequence: string[];
  sequence_logliks: number[];
  total_loglik: number;
  akshara: AksharaResult | null;
  diagnostic: string | null;
}

export interface HealthInfo {
  status: string;
  classes: number;
  rules: number;
}

export type RecognizeOutcome =
  | { kind: "result"; result: RecognizeResult }
  | { kind: "error"; code: string; message: string }
  | { kind: "superseded" };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class RecognizeClient {
  private generation = 0;
  private inflight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async recognize(payload: InkPayload): Promise<RecognizeOutcome> {
    const generation = ++this.generation;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;

    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/api/recognize`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
        signal: controller.signal,
      });
    } catch (err) {
      if (generation !== this.generation || controller.signal.aborted) {
        return { kind: "superseded" };
      }
      return { kind: "error", code: "network", message: describe(err) };
    }
    if (generation !== this.generation) {
      return { kind: "superseded" };
    }

    if (!response.ok) {
      return await parseErrorBody(response);
    }
    try {
      const result = (await response.json()) as RecognizeResult;
      return generation === this.generation
        ? { kind: "result", result }
        : { kind: "superseded" };
    } catch (err) {
      return { kind: "error", code: "bad_response", message: describe(err) };
    }
  }

  async health(): Promise<HealthInfo> {
    const response = await this.fetchFn(`${this.baseUrl}/api/health`);
    return (await response.json()) as HealthInfo;
  }

  async models(): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}/api/models`);
    if (!response.ok) {
      const outcome = await parseErrorBody(response);
      throw new Error(outcome.kind === "error" ? outcome.message : "models unavailable");
    }
    return await response.json();
  }
}

async function parseErrorBody(
  response: Response,
): Promise<{ kind: "error"; code: string; message: string }> {
  let code = `http_${response.status}`;
  let message = `service returned status ${response.status}`;
  try {
    const body = (await response.json()) as { error?: { code?: string; message?: string } };
    if (body.error?.code) {
      code = body.error.code;
    }
    if (body.error?.message) {
      message = body.error.message;
    }
  } catch {
    // keep the generic status message
  }
  return { kind: "error", code, message };
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
