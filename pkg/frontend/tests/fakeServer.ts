// In-memory implementation of the documented HTTP contract, installed as a
// fetch stub. Records every request so tests can assert the UI mutates
// state only through the documented endpoints.

import type { Candidate, ElementRow, ElementStatus } from "../src/types.js";

export interface FakeCde {
  tiny_id: string;
  name: string;
  collection: string;
  definition: string;
  values: string[];
}

export const FAKE_CORPUS: FakeCde[] = [
  { tiny_id: "QX1", name: "Race", collection: "NIH-Endorsed", definition: "Self-reported race",
    values: ["White", "Black or African American", "Asian"] },
  { tiny_id: "QX2", name: "Ethnicity", collection: "Project 5 (COVID-19)", definition: "Self-reported ethnicity",
    values: ["Hispanic or Latino", "Not Hispanic or Latino"] },
  { tiny_id: "QX3", name: "Imaging Modality Type", collection: "NINDS", definition: "Imaging modality", values: [] },
  { tiny_id: "QX4", name: "Visual Acuity Score", collection: "NEI", definition: "Visual acuity", values: [] },
  { tiny_id: "QX5", name: "Gender Identity", collection: "NIH-Endorsed", definition: "Gender",
    values: ["Male", "Female", "Unknown"] },
];

interface FakeElement extends ElementRow {
  description: string;
}

interface FakeProject {
  project_id: string;
  name: string;
  config: Record<string, string>;
  elements: FakeElement[];
  decisions: Map<string, { selected: string | null; origin?: string; value_mappings: unknown[] }>;
}

function readFileText(file: File): Promise<string> {
  if (typeof file.text === "function") return file.text();
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(String(reader.result));
    reader.onerror = () => reject(reader.error);
    reader.readAsText(file);
  });
}

function tokens(text: string): Set<string> {
  return new Set(text.toLowerCase().match(/[a-z0-9]+/g) ?? []);
}

function overlap(a: string, b: string): number {
  const ta = tokens(a);
  const tb = tokens(b);
  let n = 0;
  for (const t of ta) if (tb.has(t)) n += 1;
  return n;
}

export class FakeServer {
  projects = new Map<string, FakeProject>();
  requests: { method: string; path: string; body?: unknown }[] = [];
  jobPolls = 0;
  failNext: { status: number; code: string; message: string } | null = null;
  private counter = 0;

  /** Candidate list for a query string; exact name match ranks first. */
  private candidatesFor(query: string, rerank: boolean, collections?: string[]): Candidate[] {
    const scored = FAKE_CORPUS
      .filter((cde) => !collections || collections.includes(cde.collection))
      .map((cde) => ({
        cde,
        score: cde.name.toLowerCase() === query.toLowerCase() ? 100 : overlap(query, cde.name),
      }))
      .filter((s) => s.score > 0)
      .sort((a, b) => b.score - a.score || a.cde.tiny_id.localeCompare(b.cde.tiny_id))
      .slice(0, 10);
    return scored.map((s, i) => ({
      tiny_id: s.cde.tiny_id,
      rank: i + 1,
      fused_score: 1 / (60 + i + 1),
      lexical_score: s.score,
      vector_score: null,
      llm_suggested: rerank && i === 0,
      name: s.cde.name,
      collection: s.cde.collection,
      detail_url: `https://cde.nlm.nih.gov/deView?tinyId=${s.cde.tiny_id}`,
    }));
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), { status, headers: { "Content-Type": "application/json" } });
  }

  private error(status: number, code: string, message: string): Response {
    return this.json({ error: { code, message } }, status);
  }

  install(): void {
    globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
      const url = typeof input === "string" ? input : input instanceof URL ? input.toString() : input.url;
      return this.handle(url, init);
    }) as typeof fetch;
  }

  async handle(url: string, init?: RequestInit): Promise<Response> {
    const method = (init?.method ?? "GET").toUpperCase();
    const parsed = new URL(url, "http://fake");
    const path = parsed.pathname;
    let body: unknown;
    if (typeof init?.body === "string") body = JSON.parse(init.body);
    this.requests.push({ method, path, body });

    if (this.failNext) {
      const failure = this.failNext;
      this.failNext = null;
      return this.error(failure.status, failure.code, failure.message);
    }

    if (method === "POST" && path === "/api/projects") {
      const form = init!.body as FormData;
      const file = form.get("file") as File;
      const config = form.get("config") ? JSON.parse(form.get("config") as string) : {};
      const text = await readFileText(file);
      const lines = text.trim().split("\n");
      const elements: FakeElement[] = [];
      const rejected: { line: number; reason: string }[] = [];
      lines.slice(1).forEach((line, i) => {
        const [name = "", description = "", values = ""] = line.split(",");
        if (!name.trim()) {
          rejected.push({ line: i + 2, reason: "empty name" });
          return;
        }
        elements.push({
          element_id: `e${String(elements.length + 1).padStart(4, "0")}`,
          name: name.trim(),
          description,
          values: values ? values.split("|") : [],
          status: "unmapped",
          selected_tiny_id: null,
        });
      });
      this.counter += 1;
      const project: FakeProject = {
        project_id: `p${this.counter}`,
        name: (form.get("name") as string) ?? "project",
        config,
        elements,
        decisions: new Map(),
      };
      this.projects.set(project.project_id, project);
      const counts = { unmapped: elements.length, candidates_ready: 0, mapped: 0, no_match: 0 };
      return this.json({
        project_id: project.project_id,
        name: project.name,
        element_count: elements.length,
        rejected_rows: rejected,
        status_counts: counts,
        config,
      });
    }

    let match = path.match(/^\/api\/projects\/([^/]+)\/elements$/);
    if (method === "GET" && match) {
      const project = this.projects.get(match[1]);
      if (!project) return this.error(404, "store_error", `unknown project: '${match[1]}'`);
      let items = [...project.elements];
      const status = parsed.searchParams.get("status");
      if (status) items = items.filter((e) => e.status === status);
      const sort = parsed.searchParams.get("sort");
      if (sort) {
        const key = sort.replace(/^-/, "") as keyof FakeElement;
        items.sort((a, b) => String(a[key]).localeCompare(String(b[key])));
        if (sort.startsWith("-")) items.reverse();
      }
      const page = Number(parsed.searchParams.get("page") ?? "1");
      const pageSize = Number(parsed.searchParams.get("page_size") ?? "25");
      const window = items.slice((page - 1) * pageSize, page * pageSize);
      return this.json({ total: items.length, page, page_size: pageSize, items: window });
    }

    match = path.match(/^\/api\/projects\/([^/]+)\/elements\/([^/]+)\/candidates$/);
    if (method === "POST" && match) {
      const project = this.projects.get(match[1]);
      if (!project) return this.error(404, "store_error", `unknown project: '${match[1]}'`);
      const element = project.elements.find((e) => e.element_id === match![2]);
      if (!element) return this.error(404, "store_error", `unknown element: '${match[2]}'`);
      const rerank = project.config["rerank"] === "on";
      const collections = project.config["collections"]
        ? String(project.config["collections"]).split(",")
        : undefined;
      const candidates = this.candidatesFor(element.name, rerank, collections);
      if (element.status === "unmapped") element.status = "candidates_ready";
      return this.json({ element_id: element.element_id, config: project.config, candidates, timings: {} });
    }

    match = path.match(/^\/api\/projects\/([^/]+)\/map-all$/);
    if (method === "POST" && match) {
      const project = this.projects.get(match[1]);
      if (!project) return this.error(404, "store_error", `unknown project: '${match[1]}'`);
      for (const element of project.elements) {
        if (element.status === "unmapped") element.status = "candidates_ready";
      }
      this.jobPolls = 0;
      return this.json({ job_id: "job1" });
    }

    match = path.match(/^\/api\/jobs\/([^/]+)$/);
    if (method === "GET" && match) {
      this.jobPolls += 1;
      const total = 3;
      const done = this.jobPolls >= 2;
      return this.json({
        job_id: match[1],
        state: done ? "done" : "running",
        total,
        completed: done ? total : 1,
        error: null,
      });
    }

    if (method === "POST" && path === "/api/search") {
      const request = body as { query: string; collections?: string[] };
      if (!request.query?.trim()) return this.error(400, "data_error", "query must be non-empty");
      return this.json({
        element_id: "__manual__",
        config: {},
        candidates: this.candidatesFor(request.query, false, request.collections),
        timings: {},
      });
    }

    match = path.match(/^\/api\/projects\/([^/]+)\/elements\/([^/]+)\/decision$/);
    if (method === "POST" && match) {
      const project = this.projects.get(match[1]);
      if (!project) return this.error(404, "store_error", `unknown project: '${match[1]}'`);
      const element = project.elements.find((e) => e.element_id === match![2]);
      if (!element) return this.error(404, "store_error", `unknown element: '${match[2]}'`);
      const request = body as {
        selected_tiny_id?: string;
        no_match?: boolean;
        origin?: string;
        value_mappings?: unknown[];
      };
      if (request.no_match) {
        element.status = "no_match";
        element.selected_tiny_id = null;
        project.decisions.set(element.element_id, { selected: null, value_mappings: [] });
      } else {
        element.status = "mapped";
        element.selected_tiny_id = request.selected_tiny_id!;
        project.decisions.set(element.element_id, {
          selected: request.selected_tiny_id!,
          origin: request.origin,
          value_mappings: request.value_mappings ?? [],
        });
      }
      return this.json({ element_id: element.element_id, status: element.status });
    }

    match = path.match(/^\/api\/projects\/([^/]+)\/elements\/([^/]+)\/value-mappings$/);
    if (method === "POST" && match) {
      const project = this.projects.get(match[1]);
      if (!project) return this.error(404, "store_error", `unknown project: '${match[1]}'`);
      const element = project.elements.find((e) => e.element_id === match![2]);
      if (!element) return this.error(404, "store_error", `unknown element: '${match[2]}'`);
      const request = body as { target_tiny_id: string };
      const cde = FAKE_CORPUS.find((c) => c.tiny_id === request.target_tiny_id);
      if (!cde) return this.error(404, "store_error", `unknown CDE: '${request.target_tiny_id}'`);
      if (element.values.length === 0) {
        return this.json({ available: false, reason: "source element has no raw values", matches: [] });
      }
      if (cde.values.length === 0) {
        return this.json({ available: false, reason: "target CDE has no permissible values", matches: [] });
      }
      const matches = element.values.map((value) => {
        const exact = cde.values.find((v) => v.toLowerCase() === value.toLowerCase());
        return exact
          ? { source_value: value, matched_value: exact, score: 1.0 }
          : { source_value: value, matched_value: cde.values[0], score: 0.0 };
      });
      return this.json({ available: true, matches });
    }

    match = path.match(/^\/api\/projects\/([^/]+)\/export$/);
    if (method === "GET" && match) {
      const project = this.projects.get(match[1]);
      if (!project) return this.error(404, "store_error", `unknown project: '${match[1]}'`);
      const header =
        "source_name,source_description,source_values,target_tiny_id,target_name,target_collection,target_detail_url,origin,value_mappings,status";
      const rows = project.elements.map((element) => {
        const decision = project.decisions.get(element.element_id);
        const target = decision?.selected ? FAKE_CORPUS.find((c) => c.tiny_id === decision.selected) : undefined;
        return [
          element.name,
          element.description,
          element.values.join("|"),
          target?.tiny_id ?? "",
          target?.name ?? "",
          target?.collection ?? "",
          target ? `https://cde.nlm.nih.gov/deView?tinyId=${target.tiny_id}` : "",
          decision?.origin ?? "",
          "",
          element.status,
        ].join(",");
      });
      return new Response([header, ...rows].join("\n"), { status: 200, headers: { "Content-Type": "text/csv" } });
    }

    match = path.match(/^\/api\/cde\/([^/]+)$/);
    if (method === "GET" && match) {
      const cde = FAKE_CORPUS.find((c) => c.tiny_id === match![1]);
      if (!cde) return this.error(404, "store_error", `unknown CDE: '${match[1]}'`);
      return this.json({
        tiny_id: cde.tiny_id,
        name: cde.name,
        collection: cde.collection,
        definition: cde.definition,
        designations: [],
        question_texts: [],
        permissible_values: cde.values.map((v) => ({ value_name: v, code: null, code_system: null })),
        detail_url: `https://cde.nlm.nih.gov/deView?tinyId=${cde.tiny_id}`,
      });
    }

    if (method === "GET" && path === "/api/collections") {
      const counts = new Map<string, number>();
      for (const cde of FAKE_CORPUS) counts.set(cde.collection, (counts.get(cde.collection) ?? 0) + 1);
      return this.json([...counts.entries()].map(([name, count]) => ({ name, count })));
    }

    return this.error(404, "store_error", `unknown route: ${method} ${path}`);
  }
}

export function eyeDictionaryCsv(rowCount = 40): string {
  const lines = ["name,description,values"];
  lines.push("Race-White,Race of participant,White");
  lines.push("Ethnic Group,Self-reported ethnicity,Hispanic or Latino|Not Hispanic or Latino");
  for (let i = lines.length - 1; i < rowCount; i += 1) {
    lines.push(`Eye Field ${i},Study field ${i},`);
  }
  return lines.join("\n") + "\n";
}

export type { ElementStatus };
