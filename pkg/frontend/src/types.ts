// JSON shapes of the HTTP API (see docs/api.md in the repository root).

export type ElementStatus = "unmapped" | "candidates_ready" | "mapped" | "no_match";

export interface ProjectSummary {
  project_id: string;
  name: string;
  element_count: number;
  rejected_rows: { line: number; reason: string }[];
  status_counts: Record<ElementStatus, number>;
  config: Record<string, string | number>;
}

export interface ElementRow {
  element_id: string;
  name: string;
  description: string;
  values: string[];
  status: ElementStatus;
  selected_tiny_id: string | null;
}

export interface ElementPage {
  total: number;
  page: number;
  page_size: number;
  items: ElementRow[];
}

export interface Candidate {
  tiny_id: string;
  rank: number;
  fused_score: number;
  lexical_score: number | null;
  vector_score: number | null;
  llm_suggested: boolean;
  name: string;
  collection: string;
  detail_url: string;
}

export interface CandidateList {
  element_id: string;
  config: Record<string, string | number>;
  candidates: Candidate[];
  timings: Record<string, number>;
}

export interface JobStatus {
  job_id: string;
  state: "running" | "done" | "error";
  total: number;
  completed: number;
  error: string | null;
}

export interface ValueMatch {
  source_value: string;
  matched_value: string;
  score: number;
}

export interface ValueMappingResponse {
  available: boolean;
  reason?: string;
  matches: ValueMatch[];
}

export interface CdeDetail {
  tiny_id: string;
  name: string;
  collection: string;
  definition: string;
  designations: string[];
  question_texts: string[];
  permissible_values: { value_name: string; code: string | null; code_system: string | null }[];
  detail_url: string;
}

export interface CollectionInfo {
  name: string;
  count: number;
}

export interface DecisionResult {
  element_id: string;
  status: ElementStatus;
}

export interface ApiError {
  error: { code: string; message: string };
}
