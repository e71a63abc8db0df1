// Four-panel review app: ribbon menu, source elements, candidate CDEs,
// value mapping. All mapping state lives on the server; every mutation goes
// through the ApiClient, and any view is recoverable from API state alone.

import { ApiClient, ApiRequestError } from "./api.js";
import { el } from "./dom.js";
import { Store } from "./state.js";
import type { MenuActions } from "./components/menu.js";
import { renderMenu } from "./components/menu.js";
import type { SourcePanelActions } from "./components/sourcePanel.js";
import { renderSourcePanel } from "./components/sourcePanel.js";
import type { TargetPanelActions } from "./components/targetPanel.js";
import { renderTargetPanel } from "./components/targetPanel.js";
import type { ValuePanelActions } from "./components/valuePanel.js";
import { renderValuePanel } from "./components/valuePanel.js";
import type { ValueMatch } from "./types.js";

export interface AppOptions {
  pollIntervalMs?: number;
  download?: (filename: string, text: string) => void;
}

function browserDownload(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const link = el("a", { href: url, download: filename });
  document.body.append(link);
  link.click();
  link.remove();
  URL.revokeObjectURL(url);
}

export class App {
  readonly store = new Store();
  private candidatesSource: "recommend" | "manual_search" = "recommend";
  private draftEdited = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private options: AppOptions = {},
  ) {
    this.store.subscribe(() => this.render());
    this.render();
  }

  // -- plumbing ---------------------------------------------------------------

  private async guard<T>(work: () => Promise<T>): Promise<T | undefined> {
    this.store.update({ busy: true, banner: null });
    try {
      return await work();
    } catch (error) {
      const message =
        error instanceof ApiRequestError ? `${error.code}: ${error.message}` : String(error);
      this.store.update({ banner: message });
      return undefined;
    } finally {
      this.store.update({ busy: false });
    }
  }

  private async refreshElements(): Promise<void> {
    const project = this.store.state.project;
    if (!project) return;
    const { statusFilter, page, pageSize, sort } = this.store.state;
    const result = await this.api.listElements(project.project_id, {
      status: statusFilter || undefined,
      page,
      pageSize,
      sort: sort || undefined,
    });
    this.store.update({ elements: result.items, total: result.total, page: result.page });
  }

  // -- actions ------------------------------------------------------------------

  readonly menuActions: MenuActions = {
    uploadCsv: (file) =>
      void this.guard(async () => {
        const project = await this.api.createProject(file, file.name.replace(/\.csv$/i, ""));
        this.store.update({
          project,
          page: 1,
          selectedElementId: null,
          candidates: null,
          selectedCandidate: null,
          valueDraft: null,
          banner:
            project.rejected_rows.length > 0
              ? `import rejected ${project.rejected_rows.length} row(s): ` +
                project.rejected_rows.map((r) => `line ${r.line} (${r.reason})`).join(", ")
              : null,
        });
        await this.refreshElements();
      }),

    mapSelected: () => {
      const eid = this.store.state.selectedElementId;
      if (eid) void this.loadCandidates(eid);
    },

    mapAll: () =>
      void this.guard(async () => {
        const project = this.store.state.project;
        if (!project) return;
        const { job_id } = await this.api.startMapAll(project.project_id);
        this.store.update({ job: { job_id, state: "running", total: 0, completed: 0, error: null } });
        await this.pollJob(job_id);
        await this.refreshElements();
      }),

    manualSearch: (query) =>
      void this.guard(async () => {
        const result = await this.api.search(query);
        this.candidatesSource = "manual_search";
        this.store.update({ candidates: result, selectedCandidate: null, valueDraft: null });
      }),

    exportCsv: () =>
      void this.guard(async () => {
        const project = this.store.state.project;
        if (!project) return;
        const text = await this.api.exportCsv(project.project_id);
        (this.options.download ?? browserDownload)(`${project.name}_mappings.csv`, text);
      }),
  };

  readonly sourceActions: SourcePanelActions = {
    selectElement: (elementId) => void this.loadCandidates(elementId),
    setStatusFilter: (status) =>
      void this.guard(async () => {
        this.store.update({ statusFilter: status, page: 1 });
        await this.refreshElements();
      }),
    setSort: (sort) =>
      void this.guard(async () => {
        this.store.update({ sort });
        await this.refreshElements();
      }),
    setPage: (page) =>
      void this.guard(async () => {
        this.store.update({ page });
        await this.refreshElements();
      }),
  };

  readonly targetActions: TargetPanelActions = {
    selectCandidate: (tinyId) =>
      void this.guard(async () => {
        const detail = await this.api.cdeDetail(tinyId);
        const element = this.currentElement();
        const targetValues = detail.permissible_values.map((pv) => pv.value_name);
        this.draftEdited = false;
        if (targetValues.length === 0) {
          this.store.update({
            selectedCandidate: detail,
            valueDraft: { targetTinyId: tinyId, targetValues, rows: [], available: false,
                          reason: "target CDE has no permissible values" },
          });
        } else if (!element || element.values.length === 0) {
          this.store.update({
            selectedCandidate: detail,
            valueDraft: { targetTinyId: tinyId, targetValues, rows: [], available: false,
                          reason: "source element has no raw values" },
          });
        } else {
          this.store.update({
            selectedCandidate: detail,
            valueDraft: {
              targetTinyId: tinyId,
              targetValues,
              rows: element.values.map((v) => ({ source_value: v, matched_value: "", score: 0 })),
              available: true,
            },
          });
        }
      }),

    confirmSelection: () =>
      void this.guard(async () => {
        const { project, selectedElementId, selectedCandidate, candidates, valueDraft } = this.store.state;
        if (!project || !selectedElementId || !selectedCandidate) return;
        const mappings: ValueMatch[] = (valueDraft?.available ? valueDraft.rows : []).filter(
          (row) => row.matched_value !== "",
        );
        const rank1 = candidates?.candidates.find((c) => c.rank === 1);
        const origin =
          this.candidatesSource === "manual_search"
            ? "manual_search"
            : rank1?.tiny_id === selectedCandidate.tiny_id && !this.draftEdited
              ? "auto_top1"
              : "human_selected";
        await this.api.recordDecision(project.project_id, selectedElementId, {
          selected_tiny_id: selectedCandidate.tiny_id,
          origin,
          value_mappings: mappings,
        });
        await this.refreshElements();
      }),

    markNoMatch: () =>
      void this.guard(async () => {
        const { project, selectedElementId } = this.store.state;
        if (!project || !selectedElementId) return;
        await this.api.recordDecision(project.project_id, selectedElementId, { no_match: true });
        this.store.update({ selectedCandidate: null, valueDraft: null });
        await this.refreshElements();
      }),

    manualSearch: (query) => this.menuActions.manualSearch(query),
  };

  readonly valueActions: ValuePanelActions = {
    autoFill: () =>
      void this.guard(async () => {
        const { project, selectedElementId, valueDraft } = this.store.state;
        if (!project || !selectedElementId || !valueDraft) return;
        const result = await this.api.valueMappings(project.project_id, selectedElementId, valueDraft.targetTinyId);
        if (!result.available) {
          this.store.update({
            valueDraft: { ...valueDraft, available: false, reason: result.reason ?? "unavailable", rows: [] },
          });
          return;
        }
        this.store.update({ valueDraft: { ...valueDraft, available: true, rows: result.matches } });
      }),

    overrideValue: (sourceValue, matchedValue) => {
      const draft = this.store.state.valueDraft;
      if (!draft) return;
      this.draftEdited = true;
      const rows = draft.rows.map((row) =>
        row.source_value === sourceValue ? { source_value: sourceValue, matched_value: matchedValue, score: 0 } : row,
      );
      this.store.update({ valueDraft: { ...draft, rows } });
    },
  };

  // -- flows ------------------------------------------------------------------

  private currentElement() {
    return this.store.state.elements.find((e) => e.element_id === this.store.state.selectedElementId);
  }

  private async loadCandidates(elementId: string): Promise<void> {
    await this.guard(async () => {
      const project = this.store.state.project;
      if (!project) return;
      this.candidatesSource = "recommend";
      this.store.update({
        selectedElementId: elementId,
        candidatesLoading: true,
        candidates: null,
        selectedCandidate: null,
        valueDraft: null,
      });
      const candidates = await this.api.computeCandidates(project.project_id, elementId);
      this.store.update({ candidates, candidatesLoading: false });
      await this.refreshElements();
    });
    if (this.store.state.candidatesLoading) this.store.update({ candidatesLoading: false });
  }

  private async pollJob(jobId: string): Promise<void> {
    const interval = this.options.pollIntervalMs ?? 1000;
    for (;;) {
      const job = await this.api.jobStatus(jobId);
      this.store.update({ job });
      if (job.state !== "running") return;
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  // -- rendering ----------------------------------------------------------------

  private render(): void {
    const state = this.store.state;
    this.root.replaceChildren();
    if (state.banner) {
      this.root.append(
        el(
          "div",
          { class: "banner", role: "alert" },
          state.banner,
          el("button", { class: "banner-dismiss", onclick: () => this.store.update({ banner: null }) }, "×"),
        ),
      );
    }
    this.root.append(renderMenu(state, this.menuActions));
    this.root.append(
      el(
        "main",
        { class: "panels" },
        renderSourcePanel(state, this.sourceActions),
        renderTargetPanel(state, this.targetActions),
        renderValuePanel(state, this.valueActions),
      ),
    );
  }
}

export function createApp(root: HTMLElement, api: ApiClient, options: AppOptions = {}): App {
  return new App(root, api, options);
}
