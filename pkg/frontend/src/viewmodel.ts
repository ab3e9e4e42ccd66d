// Pure mapping from service responses to what the panel renders.

import { ABSENT } from "./types.js";
import type {
  ConstraintSetDto,
  RecommendationResponse,
  RecommendedItem,
  SummaryDto,
} from "./types.js";

export const NOT_AVAILABLE = "not available";

export interface PanelRow {
  itemId: string;
  title: string;
  price: string;
  badge: string;
}

export interface PanelViewModel {
  recommendations: PanelRow[];
  constraints: { band: string; color: string };
  summaryExcerpt: Record<string, string>;
  stalenessSeconds: number;
}

export function formatPrice(value: number): string {
  return `$${value.toFixed(2)}`;
}

export function formatBand(constraints: ConstraintSetDto): string {
  const low = constraints.lowest_price;
  const high = constraints.highest_price;
  if (low === null && high === null) return "any price";
  if (low === null) return `up to ${formatPrice(high as number)}`;
  if (high === null) return `from ${formatPrice(low)}`;
  return `${formatPrice(low)} to ${formatPrice(high)}`;
}

/** True when the item breaks the displayed constraints (price band only;
 * the row carries no color field, the server enforces that side). */
export function outsideBand(item: RecommendedItem, constraints: ConstraintSetDto): boolean {
  if (constraints.lowest_price !== null && item.price < constraints.lowest_price) return true;
  if (constraints.highest_price !== null && item.price > constraints.highest_price) return true;
  return false;
}

function badgeFor(item: RecommendedItem, response: RecommendationResponse): string {
  // a violating row is never presented as a plain offer; the server
  // guarantees this cannot happen, the badge makes a breach visible
  if (response.mode === "assortment" && outsideBand(item, response.constraints_used)) {
    return "outside constraints";
  }
  return response.mode === "rerank" ? `match ${item.score.toFixed(2)}` : "offer";
}

/**
 * Field-by-field mapping; rows keep the response order exactly and ABSENT
 * summary categories render as "not available".
 */
export function toViewModel(
  response: RecommendationResponse,
  summary: SummaryDto | null,
  nowMs: number = Date.now(),
): PanelViewModel {
  const excerpt: Record<string, string> = {};
  if (summary) {
    for (const [category, value] of Object.entries(summary.entries)) {
      excerpt[category] = value === ABSENT ? NOT_AVAILABLE : value;
    }
  }
  const generated = Date.parse(response.generated_at);
  const staleness = Number.isNaN(generated) ? 0 : Math.max(0, (nowMs - generated) / 1000);
  return {
    recommendations: response.items.map((item) => ({
      itemId: item.item_id,
      title: item.title,
      price: formatPrice(item.price),
      badge: badgeFor(item, response),
    })),
    constraints: {
      band: formatBand(response.constraints_used),
      color: response.constraints_used.color ?? "any color",
    },
    summaryExcerpt: excerpt,
    stalenessSeconds: staleness,
  };
}
