// Value mapping panel: source values on the left, target permissible values
// as editable dropdowns, with LLM auto-fill.

import { el } from "../dom.js";
import type { UiState } from "../state.js";

export interface ValuePanelActions {
  autoFill(): void;
  overrideValue(sourceValue: string, matchedValue: string): void;
}

export function renderValuePanel(state: UiState, actions: ValuePanelActions): HTMLElement {
  const header = el("header", { class: "panel-header" }, el("h2", {}, "Value mapping"));
  if (!state.selectedCandidate || !state.valueDraft) {
    return el(
      "section",
      { class: "panel value-panel" },
      header,
      el("p", { class: "placeholder" }, "Select a candidate CDE to map values."),
    );
  }
  const draft = state.valueDraft;
  if (!draft.available) {
    return el(
      "section",
      { class: "panel value-panel" },
      header,
      el("p", { class: "placeholder unavailable" }, `value mapping unavailable: ${draft.reason ?? ""}`),
    );
  }

  const rows = draft.rows.map((row) => {
    const select = el("select", { class: "value-select", "data-source-value": row.source_value }) as HTMLSelectElement;
    select.append(el("option", { value: "" }, "(unmapped)"));
    for (const name of draft.targetValues) {
      select.append(el("option", { value: name }, name));
    }
    select.value = row.matched_value;
    select.addEventListener("change", () => actions.overrideValue(row.source_value, select.value));
    return el(
      "tr",
      { class: "value-row" },
      el("td", {}, row.source_value),
      el("td", {}, select),
      el("td", { class: "muted value-score" }, row.score > 0 ? row.score.toFixed(3) : ""),
    );
  });

  return el(
    "section",
    { class: "panel value-panel" },
    header,
    el(
      "table",
      { class: "value-table" },
      el("thead", {}, el("tr", {}, el("th", {}, "Source value"), el("th", {}, "Target value"), el("th", {}, "Score"))),
      el("tbody", {}, ...rows),
    ),
    el(
      "footer",
      { class: "panel-footer" },
      el("button", { class: "autofill-btn", disabled: state.busy, onclick: () => actions.autoFill() }, "Auto-fill"),
    ),
  );
}
