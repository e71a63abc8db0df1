// Single UI state container with change notification. All authoritative
// state lives on the server; this only caches what the panels render, so a
// reload recovers everything from the API.

import type { CandidateList, CdeDetail, ElementRow, JobStatus, ProjectSummary, ValueMatch } from "./types.js";

export interface ValueDraft {
  targetTinyId: string;
  targetValues: string[];        // the CDE's permissible value names
  rows: ValueMatch[];            // one per source value, user-editable
  available: boolean;
  reason?: string;
}

export interface UiState {
  project: ProjectSummary | null;
  elements: ElementRow[];
  total: number;
  page: number;
  pageSize: number;
  statusFilter: string;
  sort: string;
  selectedElementId: string | null;
  candidates: CandidateList | null;
  candidatesLoading: boolean;
  selectedCandidate: CdeDetail | null;
  valueDraft: ValueDraft | null;
  job: JobStatus | null;
  banner: string | null;
  busy: boolean; // one in-flight mutation at a time
}

export function initialState(): UiState {
  return {
    project: null,
    elements: [],
    total: 0,
    page: 1,
    pageSize: 50, // typical dictionaries (tens of elements) fit one page
    statusFilter: "",
    sort: "",
    selectedElementId: null,
    candidates: null,
    candidatesLoading: false,
    selectedCandidate: null,
    valueDraft: null,
    job: null,
    banner: null,
    busy: false,
  };
}

export class Store {
  private listeners: (() => void)[] = [];
  state: UiState = initialState();

  update(patch: Partial<UiState>): void {
    Object.assign(this.state, patch);
    for (const listener of this.listeners) listener();
  }

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }
}
