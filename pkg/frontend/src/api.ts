// Typed client for the mapping service. Every state mutation the UI makes
// goes through this module, so tests can verify the network contract by
// stubbing fetch.

import type {
  CandidateList,
  CdeDetail,
  CollectionInfo,
  DecisionResult,
  ElementPage,
  JobStatus,
  ProjectSummary,
  ValueMatch,
  ValueMappingResponse,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function parseResponse<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => null);
  if (!resp.ok) {
    const error = body && body.error ? body.error : { code: "http_error", message: resp.statusText };
    throw new ApiRequestError(resp.status, error.code, error.message);
  }
  return body as T;
}

export class ApiClient {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  private async getJson<T>(path: string): Promise<T> {
    return parseResponse<T>(await fetch(this.url(path)));
  }

  private async postJson<T>(path: string, body?: unknown): Promise<T> {
    return parseResponse<T>(
      await fetch(this.url(path), {
        method: "POST",
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      }),
    );
  }

  async createProject(file: File, name: string, config: Record<string, string> = {}): Promise<ProjectSummary> {
    const form = new FormData();
    form.append("file", file);
    form.append("name", name);
    if (Object.keys(config).length > 0) form.append("config", JSON.stringify(config));
    return parseResponse<ProjectSummary>(await fetch(this.url("/api/projects"), { method: "POST", body: form }));
  }

  async listElements(
    projectId: string,
    opts: { status?: string; page?: number; pageSize?: number; sort?: string } = {},
  ): Promise<ElementPage> {
    const params = new URLSearchParams();
    if (opts.status) params.set("status", opts.status);
    if (opts.page) params.set("page", String(opts.page));
    if (opts.pageSize) params.set("page_size", String(opts.pageSize));
    if (opts.sort) params.set("sort", opts.sort);
    const qs = params.toString();
    return this.getJson<ElementPage>(`/api/projects/${projectId}/elements${qs ? "?" + qs : ""}`);
  }

  async computeCandidates(projectId: string, elementId: string): Promise<CandidateList> {
    return this.postJson<CandidateList>(`/api/projects/${projectId}/elements/${elementId}/candidates`);
  }

  async startMapAll(projectId: string): Promise<{ job_id: string }> {
    return this.postJson<{ job_id: string }>(`/api/projects/${projectId}/map-all`);
  }

  async jobStatus(jobId: string): Promise<JobStatus> {
    return this.getJson<JobStatus>(`/api/jobs/${jobId}`);
  }

  async search(query: string, collections?: string[]): Promise<CandidateList> {
    return this.postJson<CandidateList>("/api/search", { query, collections });
  }

  async recordDecision(
    projectId: string,
    elementId: string,
    decision:
      | { selected_tiny_id: string; origin: string; value_mappings?: ValueMatch[] }
      | { no_match: true },
  ): Promise<DecisionResult> {
    return this.postJson<DecisionResult>(`/api/projects/${projectId}/elements/${elementId}/decision`, decision);
  }

  async valueMappings(projectId: string, elementId: string, targetTinyId: string): Promise<ValueMappingResponse> {
    return this.postJson<ValueMappingResponse>(
      `/api/projects/${projectId}/elements/${elementId}/value-mappings`,
      { target_tiny_id: targetTinyId },
    );
  }

  async cdeDetail(tinyId: string): Promise<CdeDetail> {
    return this.getJson<CdeDetail>(`/api/cde/${tinyId}`);
  }

  async collections(): Promise<CollectionInfo[]> {
    return this.getJson<CollectionInfo[]>("/api/collections");
  }

  exportUrl(projectId: string): string {
    return this.url(`/api/projects/${projectId}/export`);
  }

  async exportCsv(projectId: string): Promise<string> {
    const resp = await fetch(this.exportUrl(projectId));
    if (!resp.ok) {
      const body = await resp.json().catch(() => null);
      const error = body && body.error ? body.error : { code: "http_error", message: resp.statusText };
      throw new ApiRequestError(resp.status, error.code, error.message);
    }
    return resp.text();
  }
}
