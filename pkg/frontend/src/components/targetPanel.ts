// Candidate CDE table: rank, name, collection, scores with retriever
// provenance, "LLM suggested" badge, repository link, confirm / no match.

import { el } from "../dom.js";
import type { UiState } from "../state.js";

export interface TargetPanelActions {
  selectCandidate(tinyId: string): void;
  confirmSelection(): void;
  markNoMatch(): void;
  manualSearch(query: string): void;
}

function score(value: number | null): string {
  return value === null ? "-" : value.toFixed(3);
}

export function renderTargetPanel(state: UiState, actions: TargetPanelActions): HTMLElement {
  const body: (Node | null)[] = [];
  if (state.candidatesLoading) {
    body.push(el("p", { class: "placeholder spinner" }, "Retrieving candidates..."));
  } else if (!state.candidates) {
    body.push(el("p", { class: "placeholder" }, "Select a source element to see candidate CDEs."));
  } else if (state.candidates.candidates.length === 0) {
    body.push(el("p", { class: "placeholder" }, "No candidates found; try a manual search."));
  } else {
    const rows = state.candidates.candidates.map((candidate) => {
      const selected = state.selectedCandidate?.tiny_id === candidate.tiny_id;
      const scores = `lexical ${score(candidate.lexical_score)} / vector ${score(candidate.vector_score)} / fused ${score(candidate.fused_score)}`;
      return el(
        "tr",
        {
          class: selected ? "candidate-row selected" : "candidate-row",
          "data-tiny-id": candidate.tiny_id,
          onclick: () => actions.selectCandidate(candidate.tiny_id),
        },
        el("td", {}, String(candidate.rank)),
        el(
          "td",
          {},
          candidate.name,
          candidate.llm_suggested ? el("span", { class: "badge llm-badge" }, "LLM suggested") : null,
        ),
        el("td", {}, candidate.collection),
        el("td", { class: "muted score-cell", title: scores }, score(candidate.fused_score)),
        el(
          "td",
          {},
          el("a", { href: candidate.detail_url, target: "_blank", rel: "noopener", class: "detail-link" }, "view"),
        ),
      );
    });
    body.push(
      el(
        "table",
        { class: "candidate-table" },
        el("thead", {}, el("tr", {}, el("th", {}, "#"), el("th", {}, "Name"), el("th", {}, "Collection"),
                           el("th", {}, "Score"), el("th", {}, "Link"))),
        el("tbody", {}, ...rows),
      ),
    );
  }

  const searchBox = el("input", {
    type: "search",
    class: "panel-search",
    placeholder: "Search this panel manually...",
  }) as HTMLInputElement;
  searchBox.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter" && searchBox.value.trim()) {
      actions.manualSearch(searchBox.value.trim());
    }
  });

  const canDecide = state.selectedElementId !== null && !state.busy;
  return el(
    "section",
    { class: "panel target-panel" },
    el(
      "header",
      { class: "panel-header" },
      el("h2", {}, "Candidate CDEs"),
      searchBox,
    ),
    ...body,
    el(
      "footer",
      { class: "panel-footer" },
      el(
        "button",
        {
          class: "confirm-btn",
          disabled: !canDecide || state.selectedCandidate === null,
          onclick: () => actions.confirmSelection(),
        },
        "Confirm mapping",
      ),
      el(
        "button",
        { class: "no-match-btn", disabled: !canDecide, onclick: () => actions.markNoMatch() },
        "No match",
      ),
    ),
  );
}
