// Mock storefront: renders the catalog as product cards and turns every
// browse into exactly one session event carrying a viewport capture key.

import type { ApiClient } from "./api.js";
import type { CatalogItem } from "./types.js";
import { formatPrice } from "./viewmodel.js";

export interface CaptureConfig {
  /** "viewport" snapshots the rendered page; "fixture" sends pre-stored
   * keys so demos replay deterministically against the mock backend. */
  mode: "viewport" | "fixture";
  /** Key prefix in fixture mode; keys are `${prefix}-${n}` in browse order. */
  fixturePrefix?: string;
}

/** Draw a small canvas snapshot of the visible page and return raw base64. */
export function captureViewport(doc: Document = document): string | undefined {
  const canvas = doc.createElement("canvas");
  canvas.width = Math.max(1, Math.min(doc.documentElement.clientWidth || 800, 1600));
  canvas.height = Math.max(1, Math.min(doc.documentElement.clientHeight || 600, 1200));
  const ctx = canvas.getContext("2d");
  if (!ctx) return undefined;
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#1a1a1a";
  ctx.font = "16px sans-serif";
  const heading = doc.querySelector("h1")?.textContent ?? doc.title ?? "storefront";
  ctx.fillText(heading, 16, 32);
  let y = 64;
  for (const card of doc.querySelectorAll("[data-item-id]")) {
    ctx.fillText(card.textContent?.replace(/\s+/g, " ").trim() ?? "", 16, y);
    y += 24;
    if (y > canvas.height - 16) break;
  }
  const url = canvas.toDataURL("image/png");
  const comma = url.indexOf(",");
  return comma >= 0 ? url.slice(comma + 1) : undefined;
}

export class Storefront {
  private seq = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly capture: CaptureConfig,
    private readonly onBrowse?: (item: CatalogItem) => void,
  ) {}

  get browseCount(): number {
    return this.seq;
  }

  /** One browse, one event post; the capture key is always present. */
  async browse(item: CatalogItem, doc?: Document): Promise<void> {
    const n = this.seq;
    this.seq += 1;
    const key =
      this.capture.mode === "fixture"
        ? `${this.capture.fixturePrefix ?? this.sessionId}-${n}`
        : `view-${this.sessionId}-${n}`;
    const image = this.capture.mode === "viewport" ? captureViewport(doc) : undefined;
    await this.api.postEvent(this.sessionId, {
      item_id: item.item_id,
      timestamp: n,
      screenshot_key: key,
      image_base64: image,
    });
    this.onBrowse?.(item);
  }

  /** Render product cards; clicking a card browses it. */
  mount(root: HTMLElement, items: CatalogItem[]): void {
    root.textContent = "";
    for (const item of items) {
      const card = root.ownerDocument.createElement("button");
      card.className = "product-card";
      card.dataset.itemId = item.item_id;
      card.type = "button";
      const title = root.ownerDocument.createElement("strong");
      title.textContent = item.title;
      const price = root.ownerDocument.createElement("span");
      price.textContent = formatPrice(item.price);
      card.append(title, price);
      if (item.color) {
        const color = root.ownerDocument.createElement("em");
        color.textContent = item.color;
        card.append(color);
      }
      card.addEventListener("click", () => {
        card.classList.add("browsed");
        void this.browse(item, root.ownerDocument);
      });
      root.append(card);
    }
  }
}
