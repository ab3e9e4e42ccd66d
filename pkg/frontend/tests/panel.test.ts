import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { DEFAULT_POLL_MS, RecommendationPanel } from "../src/panel.js";
import type { RecommendedItem } from "../src/types.js";
import type { Handler, RoutedAnswer } from "./helpers.js";
import { fakeFetch, recommendation, summaryEnvelope } from "./helpers.js";

const NOW = Date.parse("2026-08-15T12:00:05+00:00");

function setup(options: { intervalMs?: number } = {}) {
  const items: RecommendedItem[] = [];
  let failWith: RoutedAnswer | "network" | null = null;
  const handler: Handler = (req) => {
    if (failWith === "network") throw new TypeError("fetch failed");
    if (failWith) return failWith;
    if (req.path.includes("/recommendations")) {
      return { status: 200, body: recommendation({ items: [...items] }) };
    }
    if (req.path.endsWith("/summary")) {
      return {
        status: 200,
        body: summaryEnvelope({
          summary: { entries: { "Price Range": "ABSENT" }, extras: {} },
        }),
      };
    }
    return undefined;
  };
  const { fetchImpl, requests } = fakeFetch(handler);
  const root = document.createElement("div");
  document.body.append(root);
  const panel = new RecommendationPanel(new ApiClient("", fetchImpl), "s1", root, {
    now: () => NOW,
    ...options,
  });
  return {
    panel,
    root,
    items,
    requests,
    setFailure: (f: RoutedAnswer | "network" | null) => {
      failWith = f;
    },
    recommendationCalls: () => requests.filter((r) => r.path.includes("/recommendations")).length,
    renderedIds: () =>
      [...root.querySelectorAll<HTMLElement>(".panel-items li")].map((li) => li.dataset.itemId),
  };
}

describe("RecommendationPanel", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("polls every two seconds by default", async () => {
    const t = setup();
    expect(DEFAULT_POLL_MS).toBe(2000);
    expect(t.panel.intervalMs).toBe(2000);

    t.panel.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(t.recommendationCalls()).toBe(1);
    await vi.advanceTimersByTimeAsync(1999);
    expect(t.recommendationCalls()).toBe(1);
    await vi.advanceTimersByTimeAsync(1);
    expect(t.recommendationCalls()).toBe(2);

    t.panel.stop();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(t.recommendationCalls()).toBe(2);
  });

  it("shows new recommendations on the next cycle after they appear", async () => {
    const t = setup();
    t.panel.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(t.root.querySelector(".panel-empty")?.textContent).toBe("no recommendations yet");

    t.items.push(
      { item_id: "z-1", title: "last alphabetically", price: 5, score: 0.1 },
      { item_id: "a-2", title: "first alphabetically", price: 99, score: 0.9 },
    );
    await vi.advanceTimersByTimeAsync(DEFAULT_POLL_MS);
    // rendered rows mirror the response order, untouched by any client sort
    expect(t.renderedIds()).toEqual(["z-1", "a-2"]);
    t.panel.stop();
  });

  it("renders constraints, summary, and staleness lines", async () => {
    const t = setup();
    t.items.push({ item_id: "i-1", title: "wool scarf", price: 20, score: 0.4 });
    t.panel.start();
    await vi.advanceTimersByTimeAsync(0);
    t.panel.stop();

    expect(t.root.querySelector(".panel-constraints")?.textContent).toBe(
      "showing any price, any color",
    );
    expect(t.root.querySelector(".panel-items li")?.textContent).toBe("wool scarf $20.00 offer");
    const summary = t.root.querySelector(".panel-summary");
    expect(summary?.querySelector("dt")?.textContent).toBe("Price Range");
    expect(summary?.querySelector("dd")?.textContent).toBe("not available");
    expect(t.root.querySelector(".panel-staleness")?.textContent).toBe("generated 5s ago");
    expect(t.panel.lastViewModel?.stalenessSeconds).toBe(5);
  });

  it("turns a network failure into a retrying status line, then recovers", async () => {
    const t = setup();
    t.setFailure("network");
    t.panel.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(t.root.querySelector(".panel-status")?.textContent).toBe(
      "server unreachable, retrying",
    );

    t.setFailure(null);
    t.items.push({ item_id: "i-1", title: "wool scarf", price: 20, score: 0.4 });
    await vi.advanceTimersByTimeAsync(DEFAULT_POLL_MS);
    expect(t.root.querySelector(".panel-status")).toBeNull();
    expect(t.renderedIds()).toEqual(["i-1"]);
    t.panel.stop();
  });

  it("names the pipeline status for http errors", async () => {
    const t = setup();
    t.setFailure({ status: 409, body: { detail: "rerank mode needs a configured session model" } });
    t.panel.start();
    await vi.advanceTimersByTimeAsync(0);
    t.panel.stop();
    expect(t.root.querySelector(".panel-status")?.textContent).toBe(
      "waiting on the pipeline (status 409)",
    );
  });
});
