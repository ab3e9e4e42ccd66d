// Typed client over the service's HTTP API. Every method either resolves
// with the parsed JSON body or throws ApiError (HTTP status received) /
// NetworkError (no response at all).

import type {
  CatalogItem,
  ConstraintSetDto,
  RecommendationResponse,
  SummaryEnvelope,
  ValidationIssue,
  ValidationReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`request failed with status ${status}`);
    this.name = "ApiError";
  }
}

export class NetworkError extends Error {
  readonly cause: unknown;

  constructor(cause: unknown) {
    super("network request did not reach the server");
    this.name = "NetworkError";
    this.cause = cause;
  }
}

export interface EventPayload {
  item_id: string;
  timestamp?: number;
  screenshot_key?: string;
  screenshot_kind?: string;
  image_base64?: string;
}

export type OverrideOutcome =
  | { outcome: "accepted"; report: ValidationReport }
  | { outcome: "rejected"; issues: ValidationIssue[] };

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, payload?.detail ?? payload);
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  async createSession(sessionId?: string): Promise<string> {
    const body = sessionId ? { session_id: sessionId } : {};
    const created = await this.request<{ session_id: string }>("POST", "/sessions", body);
    return created.session_id;
  }

  postEvent(sessionId: string, payload: EventPayload): Promise<{ events: number }> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/events`, payload);
  }

  getSummary(sessionId: string): Promise<SummaryEnvelope> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/summary`);
  }

  getRecommendations(
    sessionId: string,
    mode: "assortment" | "rerank" = "assortment",
    k?: number,
  ): Promise<RecommendationResponse> {
    const query = new URLSearchParams({ mode });
    if (k !== undefined) query.set("k", String(k));
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/recommendations?${query}`,
    );
  }

  getCatalog(): Promise<{ items: CatalogItem[]; version: number }> {
    return this.request("GET", "/catalog");
  }

  /**
   * Submit constraint overrides. A 422 is a normal outcome here (the server
   * rejected the edit and kept the previous state), so it resolves instead
   * of throwing; network failures still throw NetworkError.
   */
  async putConstraints(
    sessionId: string,
    edited: Partial<ConstraintSetDto>,
  ): Promise<OverrideOutcome> {
    try {
      const report = await this.request<ValidationReport>(
        "PUT",
        `/sessions/${encodeURIComponent(sessionId)}/constraints`,
        edited,
      );
      return { outcome: "accepted", report };
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        const detail = err.detail as ValidationReport;
        return { outcome: "rejected", issues: detail.issues ?? [] };
      }
      throw err;
    }
  }
}
