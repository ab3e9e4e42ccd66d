// Test doubles: a recording fetch backed by a routing function, plus
// builders for the JSON shapes the service returns.

import type { RecommendationResponse, SummaryEnvelope } from "../src/types.js";

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
  headers: Record<string, string> | undefined;
}

export interface RoutedAnswer {
  status: number;
  body?: unknown;
}

export type Handler = (req: RecordedRequest) => RoutedAnswer | undefined;

/** Just enough of a Response for the client: ok, status, and text(). */
export function fakeResponse(status: number, body?: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    text: async () => (body === undefined ? "" : JSON.stringify(body)),
  } as unknown as Response;
}

/**
 * A fetch stand-in that records every request and answers from `handler`.
 * A handler that throws simulates the network dropping the request; a
 * handler that returns undefined marks a request the test never expected.
 */
export function fakeFetch(handler: Handler): {
  fetchImpl: (input: string, init?: RequestInit) => Promise<Response>;
  requests: RecordedRequest[];
} {
  const requests: RecordedRequest[] = [];
  const fetchImpl = async (input: string, init?: RequestInit): Promise<Response> => {
    const req: RecordedRequest = {
      method: init?.method ?? "GET",
      path: input,
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
      headers: init?.headers as Record<string, string> | undefined,
    };
    requests.push(req);
    const answer = handler(req);
    if (!answer) throw new Error(`no route for ${req.method} ${req.path}`);
    return fakeResponse(answer.status, answer.body);
  };
  return { fetchImpl, requests };
}

export function recommendation(
  overrides: Partial<RecommendationResponse> = {},
): RecommendationResponse {
  return {
    session_id: "s1",
    mode: "assortment",
    items: [],
    constraints_used: { lowest_price: null, highest_price: null, color: null },
    summary_digest: "digest-0",
    generated_at: "2026-08-15T12:00:00+00:00",
    ...overrides,
  };
}

export function summaryEnvelope(overrides: Partial<SummaryEnvelope> = {}): SummaryEnvelope {
  return {
    session_id: "s1",
    summary: null,
    constraints: null,
    cache_key: "cache-0",
    ...overrides,
  };
}

/** Let pending promises settle (real timers only). */
export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export function buttonByText(root: HTMLElement, text: string): HTMLButtonElement {
  for (const button of root.querySelectorAll("button")) {
    if (button.textContent === text) return button;
  }
  throw new Error(`no button labeled '${text}'`);
}
