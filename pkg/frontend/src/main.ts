/**
 * Page wiring: a 2-second poll loop against the service, card rendering for
 * the current round, and the advance control. Local edits on unsubmitted
 * cards survive refreshes; everything else re-renders from server state.
 */

import { ApiClient, ApiError, type StateResponse } from "./api.js";
import { PendingCard, renderCard } from "./cards.js";
import { renderDashboard } from "./dashboard.js";

const POLL_MS = 2000;

const client = new ApiClient("", new URLSearchParams(location.search).get("token"));
const cards = new Map<number, PendingCard>();
let catalogTypes: string[] = [];
let lastRoundSeen = -1;

function el(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found;
}

function note(text: string, isError = false): void {
  const box = el("notice");
  box.textContent = text;
  box.className = isError ? "notice error" : "notice";
}

async function submitCard(card: PendingCard): Promise<void> {
  try {
    const result = await client.submitAnnotation(card.logId, card.templateString());
    card.submitted = true;
    note(`log ${card.logId} submitted, ${result.remaining} to go`);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      card.submitted = true;
      note(`log ${card.logId} was already submitted`);
    } else if (err instanceof ApiError) {
      note(`submit failed: ${err.detail}`, true);
    } else {
      note(`submit failed: ${err}`, true);
    }
  }
  await refresh();
}

async function advance(): Promise<void> {
  try {
    await client.advanceRound();
    note("round advanced");
  } catch (err) {
    if (err instanceof ApiError && err.status === 423) {
      note(`cannot advance: ${err.outstanding.length} item(s) outstanding`, true);
    } else {
      note(`advance failed: ${err}`, true);
    }
  }
  await refresh();
}

function renderCards(): void {
  const box = el("cards");
  box.textContent = "";
  const sorted = [...cards.values()].sort((a, b) => a.logId - b.logId);
  for (const card of sorted) {
    box.appendChild(renderCard(document, card, catalogTypes, { onSubmit: submitCard }));
  }
  const allDone = sorted.length > 0 && sorted.every((c) => c.submitted);
  const button = el("advance") as HTMLButtonElement;
  button.disabled = !allDone;
  el("round-banner").textContent =
    sorted.length === 0
      ? "no annotations pending"
      : allDone
        ? "round complete — advance when ready"
        : `round ${sorted[0].round}: ${sorted.filter((c) => !c.submitted).length} item(s) left`;
}

async function refresh(): Promise<void> {
  let state: StateResponse;
  try {
    state = await client.getState();
  } catch (err) {
    note(`service unreachable: ${err}`, true);
    return;
  }
  catalogTypes = state.catalog_types;
  renderDashboard(document, el("dashboard"), state);

  const pending = await client.getPending().catch(() => []);
  const round = pending.length > 0 ? pending[0].round : lastRoundSeen;
  if (round !== lastRoundSeen) {
    cards.clear();
    lastRoundSeen = round;
  }
  const liveIds = new Set<number>();
  for (const item of pending) {
    liveIds.add(item.log_id);
    const existing = cards.get(item.log_id);
    if (existing) {
      existing.submitted = item.submitted;
    } else {
      cards.set(item.log_id, PendingCard.fromPending(item, catalogTypes));
    }
  }
  for (const id of [...cards.keys()]) {
    if (!liveIds.has(id)) cards.delete(id);
  }
  renderCards();
}

export function start(): void {
  el("advance").addEventListener("click", advance);
  void refresh();
  setInterval(() => void refresh(), POLL_MS);
}

if (typeof document !== "undefined" && document.getElementById("cards")) {
  start();
}
