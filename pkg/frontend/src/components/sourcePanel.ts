// Source element table: paged, filterable by status, sortable, with status
// badges. Selecting a row loads (or requests) its candidates.

import { el } from "../dom.js";
import type { UiState } from "../state.js";
import type { ElementStatus } from "../types.js";

export interface SourcePanelActions {
  selectElement(elementId: string): void;
  setStatusFilter(status: string): void;
  setSort(sort: string): void;
  setPage(page: number): void;
}

const STATUS_LABELS: Record<ElementStatus, string> = {
  unmapped: "unmapped",
  candidates_ready: "candidates ready",
  mapped: "mapped",
  no_match: "no match",
};

export function statusBadge(status: ElementStatus): HTMLElement {
  return el("span", { class: `badge status-${status}`, "data-status": status }, STATUS_LABELS[status]);
}

export function renderSourcePanel(state: UiState, actions: SourcePanelActions): HTMLElement {
  const filter = el("select", { class: "status-filter" }) as HTMLSelectElement;
  for (const [value, label] of [["", "all statuses"], ["unmapped", "unmapped"],
                                ["candidates_ready", "candidates ready"], ["mapped", "mapped"],
                                ["no_match", "no match"]]) {
    filter.append(el("option", { value }, label));
  }
  filter.value = state.statusFilter;
  filter.addEventListener("change", () => actions.setStatusFilter(filter.value));

  const sortHeader = (key: string, label: string) => {
    const active = state.sort === key || state.sort === `-${key}`;
    const arrow = state.sort === key ? " ▲" : state.sort === `-${key}` ? " ▼" : "";
    return el(
      "th",
      {
        class: active ? "sortable sorted" : "sortable",
        onclick: () => actions.setSort(state.sort === key ? `-${key}` : key),
      },
      label + arrow,
    );
  };

  const rows = state.elements.map((item) => {
    const selected = item.element_id === state.selectedElementId;
    return el(
      "tr",
      {
        class: selected ? "source-row selected" : "source-row",
        "data-element-id": item.element_id,
        onclick: () => actions.selectElement(item.element_id),
      },
      el("td", {}, item.name),
      el("td", { class: "muted" }, item.description),
      el("td", { class: "muted" }, item.values.join(", ")),
      el("td", {}, statusBadge(item.status)),
    );
  });

  const totalPages = Math.max(1, Math.ceil(state.total / state.pageSize));
  const pager = el(
    "div",
    { class: "pager" },
    el("button", { disabled: state.page <= 1, onclick: () => actions.setPage(state.page - 1) }, "‹ prev"),
    el("span", { class: "pager-info" }, `page ${state.page} of ${totalPages} (${state.total} elements)`),
    el("button", { disabled: state.page >= totalPages, onclick: () => actions.setPage(state.page + 1) }, "next ›"),
  );

  return el(
    "section",
    { class: "panel source-panel" },
    el("header", { class: "panel-header" }, el("h2", {}, "Source elements"), filter),
    state.project === null
      ? el("p", { class: "placeholder" }, "Upload a data dictionary CSV to begin.")
      : el(
          "table",
          { class: "source-table" },
          el("thead", {}, el("tr", {}, sortHeader("name", "Name"), el("th", {}, "Description"),
                             el("th", {}, "Values"), sortHeader("status", "Status"))),
          el("tbody", {}, ...rows),
        ),
    state.project === null ? null : pager,
  );
}
