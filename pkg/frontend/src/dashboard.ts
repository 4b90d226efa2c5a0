/**
 * Round-progress dashboard: budgets, covered words, labeled counts, and the
 * running accuracy when the server knows ground truth. Pure rendering of
 * server state.
 */

import type { StateResponse } from "./api.js";

export interface RoundRow {
  index: number;
  budget: number;
  annotated: number;
  coveredWords: number;
  newWords: number;
}

export function roundRows(state: StateResponse): RoundRow[] {
  const rows: RoundRow[] = [];
  let previous = 0;
  for (const round of state.rounds) {
    rows.push({
      index: round.index,
      budget: round.budget,
      annotated: round.selected.length,
      coveredWords: round.covered_words,
      newWords: round.covered_words - previous,
    });
    previous = round.covered_words;
  }
  return rows;
}

export function coveredWordsMonotone(rows: RoundRow[]): boolean {
  for (let i = 1; i < rows.length; i++) {
    if (rows[i].coveredWords < rows[i - 1].coveredWords) return false;
  }
  return true;
}

export function renderDashboard(doc: Document, el: HTMLElement, state: StateResponse): void {
  el.textContent = "";

  const status = doc.createElement("p");
  status.className = "status";
  const phase = state.error
    ? `error: ${state.error}`
    : state.complete
      ? "run complete"
      : state.pending_count > 0
        ? `${state.pending_count} annotation(s) outstanding`
        : "predicting…";
  const mla = state.mla !== undefined ? ` · MLA ${(state.mla * 100).toFixed(1)}%` : "";
  status.textContent =
    `${phase} · labeled ${state.labeled_count}/${state.corpus_size}` +
    ` · budget left ${state.budget_remaining}${mla}`;
  el.appendChild(status);

  const table = doc.createElement("table");
  const head = doc.createElement("tr");
  for (const caption of ["round", "budget", "annotated", "covered words", "new words"]) {
    const th = doc.createElement("th");
    th.textContent = caption;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const row of roundRows(state)) {
    const tr = doc.createElement("tr");
    for (const value of [row.index, row.budget, row.annotated, row.coveredWords, row.newWords]) {
      const td = doc.createElement("td");
      td.textContent = String(value);
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  el.appendChild(table);
}
