// JSON shapes exchanged with the recommendation service

export interface CatalogItem {
  item_id: string;
  title: string;
  brand: string | null;
  color: string | null;
  price: number;
}

export interface RecommendedItem {
  item_id: string;
  title: string;
  price: number;
  score: number;
}

export interface ConstraintSetDto {
  lowest_price: number | null;
  highest_price: number | null;
  color: string | null;
}

export interface RecommendationResponse {
  session_id: string;
  mode: "assortment" | "rerank";
  items: RecommendedItem[];
  constraints_used: ConstraintSetDto;
  summary_digest: string;
  generated_at: string;
}

export interface SummaryDto {
  entries: Record<string, string>;
  extras: Record<string, string>;
}

export interface SummaryEnvelope {
  session_id: string;
  summary: SummaryDto | null;
  constraints: ConstraintSetDto | null;
  cache_key?: string;
}

export interface ValidationIssue {
  code: string;
  message: string;
}

export interface ValidationReport {
  status: "valid" | "rejected";
  issues: ValidationIssue[];
}

/** The summarizer writes this literal for categories it found nothing for. */
export const ABSENT = "ABSENT";
