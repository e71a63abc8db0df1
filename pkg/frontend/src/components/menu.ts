// Ribbon menu: upload CSV, map selected, map all, manual search, export.

import { el } from "../dom.js";
import type { UiState } from "../state.js";

export interface MenuActions {
  uploadCsv(file: File): void;
  mapSelected(): void;
  mapAll(): void;
  manualSearch(query: string): void;
  exportCsv(): void;
}

export function renderMenu(state: UiState, actions: MenuActions): HTMLElement {
  const fileInput = el("input", { type: "file", accept: ".csv", class: "hidden-file-input" });
  fileInput.addEventListener("change", () => {
    const file = fileInput.files && fileInput.files[0];
    if (file) actions.uploadCsv(file);
    fileInput.value = "";
  });

  const haveProject = state.project !== null;
  const disabled = state.busy;

  const searchBox = el("input", {
    type: "search",
    class: "menu-search",
    placeholder: "Manual search across collections...",
  }) as HTMLInputElement;
  const runSearch = () => {
    if (searchBox.value.trim()) actions.manualSearch(searchBox.value.trim());
  };
  searchBox.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") runSearch();
  });

  const jobProgress =
    state.job && state.job.state === "running"
      ? el("span", { class: "job-progress" }, `mapping ${state.job.completed}/${state.job.total}...`)
      : state.job && state.job.state === "error"
        ? el("span", { class: "job-progress job-error" }, `map all failed: ${state.job.error ?? "unknown"}`)
        : null;

  return el(
    "nav",
    { class: "menu" },
    el("button", { class: "menu-btn", disabled, onclick: () => fileInput.click() }, "Upload CSV"),
    fileInput,
    el(
      "button",
      { class: "menu-btn", disabled: disabled || !haveProject || !state.selectedElementId, onclick: () => actions.mapSelected() },
      "Map selected",
    ),
    el(
      "button",
      { class: "menu-btn", disabled: disabled || !haveProject || (state.job?.state === "running"), onclick: () => actions.mapAll() },
      "Map all",
    ),
    searchBox,
    el("button", { class: "menu-btn", disabled, onclick: runSearch }, "Search"),
    el(
      "button",
      { class: "menu-btn", disabled: disabled || !haveProject, onclick: () => actions.exportCsv() },
      "Export",
    ),
    jobProgress,
  );
}
