// Live recommendation panel: polls the service at a fixed cadence and
// renders whatever the latest response says, in its exact order.

import { ApiError, NetworkError } from "./api.js";
import type { ApiClient } from "./api.js";
import { toViewModel } from "./viewmodel.js";
import type { PanelViewModel } from "./viewmodel.js";

export interface PanelOptions {
  mode?: "assortment" | "rerank";
  k?: number;
  /** Polling cadence in milliseconds. */
  intervalMs?: number;
  now?: () => number;
  onRender?: (vm: PanelViewModel) => void;
}

export const DEFAULT_POLL_MS = 2000;

export class RecommendationPanel {
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly mode: "assortment" | "rerank";
  private readonly k?: number;
  readonly intervalMs: number;
  private readonly now: () => number;
  private readonly onRender?: (vm: PanelViewModel) => void;
  lastViewModel: PanelViewModel | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly root: HTMLElement,
    options: PanelOptions = {},
  ) {
    this.mode = options.mode ?? "assortment";
    this.k = options.k;
    this.intervalMs = options.intervalMs ?? DEFAULT_POLL_MS;
    this.now = options.now ?? (() => Date.now());
    this.onRender = options.onRender;
  }

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One polling cycle; errors render as a status line, never throw. */
  async tick(): Promise<void> {
    try {
      const [response, summaryEnvelope] = await Promise.all([
        this.api.getRecommendations(this.sessionId, this.mode, this.k),
        this.api.getSummary(this.sessionId),
      ]);
      const vm = toViewModel(response, summaryEnvelope.summary, this.now());
      this.lastViewModel = vm;
      this.render(vm);
      this.onRender?.(vm);
    } catch (err) {
      this.renderProblem(err);
    }
  }

  private render(vm: PanelViewModel): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";

    const constraints = doc.createElement("p");
    constraints.className = "panel-constraints";
    constraints.textContent = `showing ${vm.constraints.band}, ${vm.constraints.color}`;
    this.root.append(constraints);

    if (vm.recommendations.length === 0) {
      const empty = doc.createElement("p");
      empty.className = "panel-empty";
      empty.textContent = "no recommendations yet";
      this.root.append(empty);
    } else {
      const list = doc.createElement("ol");
      list.className = "panel-items";
      for (const row of vm.recommendations) {
        const li = doc.createElement("li");
        li.dataset.itemId = row.itemId;
        li.textContent = `${row.title} ${row.price}`;
        const badge = doc.createElement("span");
        badge.className = "badge";
        badge.textContent = row.badge;
        li.append(" ", badge);
        list.append(li);
      }
      this.root.append(list);
    }

    const summary = doc.createElement("dl");
    summary.className = "panel-summary";
    for (const [category, value] of Object.entries(vm.summaryExcerpt)) {
      const dt = doc.createElement("dt");
      dt.textContent = category;
      const dd = doc.createElement("dd");
      dd.textContent = value;
      summary.append(dt, dd);
    }
    this.root.append(summary);

    const staleness = doc.createElement("p");
    staleness.className = "panel-staleness";
    staleness.textContent = `generated ${Math.round(vm.stalenessSeconds)}s ago`;
    this.root.append(staleness);
  }

  private renderProblem(err: unknown): void {
    const doc = this.root.ownerDocument;
    let line = "recommendations unavailable";
    if (err instanceof NetworkError) {
      line = "server unreachable, retrying";
    } else if (err instanceof ApiError) {
      line = `waiting on the pipeline (status ${err.status})`;
    }
    let status = this.root.querySelector<HTMLElement>(".panel-status");
    if (!status) {
      status = doc.createElement("p");
      status.className = "panel-status";
      this.root.prepend(status);
    }
    status.textContent = line;
  }
}
