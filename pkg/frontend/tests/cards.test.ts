// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import type { PendingItem } from "../src/api.js";
import { PendingCard, renderCard } from "../src/cards.js";

const TYPES = ["DATE", "IP", "ID", "NUM"];

function item(overrides: Partial<PendingItem> = {}): PendingItem {
  return {
    log_id: 7,
    round: 1,
    raw: "session opened for user u42",
    words: ["session", "opened", "for", "user", "u42"],
    guess: "<session> <opened> <for> <user> [ID]",
    submitted: false,
    ...overrides,
  };
}

describe("PendingCard", () => {
  it("pre-applies a well-formed guess", () => {
    const card = PendingCard.fromPending(item(), TYPES);
    expect(card.allTagged()).toBe(true);
    expect(card.templateString()).toBe("<session> <opened> <for> <user> [ID]");
    expect(card.canSubmit(TYPES)).toBe(true);
  });

  it("ignores a guess with the wrong token count", () => {
    const card = PendingCard.fromPending(item({ guess: "<a> <b>" }), TYPES);
    expect(card.allTagged()).toBe(false);
    expect(card.canSubmit(TYPES)).toBe(false);
  });

  it("builds templates from manual tags", () => {
    const card = PendingCard.fromPending(item({ guess: null }), TYPES);
    card.words.forEach((_, i) => card.setKeyword(i));
    card.setType(4, "ID");
    expect(card.templateString()).toBe("<session> <opened> <for> <user> [ID]");
    expect(card.validate(TYPES).ok).toBe(true);
  });

  it("gates submission until every word is tagged", () => {
    const card = PendingCard.fromPending(item({ guess: null }), TYPES);
    expect(card.canSubmit(TYPES)).toBe(false);
    card.words.forEach((_, i) => card.setKeyword(i));
    expect(card.canSubmit(TYPES)).toBe(true);
    card.clearTag(2);
    expect(card.canSubmit(TYPES)).toBe(false);
  });

  it("validates the raw-text override through the grammar", () => {
    const card = PendingCard.fromPending(item({ guess: null }), TYPES);
    card.overrideText = "<session> <opened> <for> <user> [BOGUS]";
    expect(card.validate(TYPES).ok).toBe(false);
    card.overrideText = "<session> <opened> <for> <user> [ID]";
    expect(card.validate(TYPES).ok).toBe(true);
  });
});

describe("renderCard", () => {
  it("renders one select per word and enables submit when valid", () => {
    const card = PendingCard.fromPending(item(), TYPES);
    const el = renderCard(document, card, TYPES, { onSubmit: () => {} });
    const selects = el.querySelectorAll("select");
    expect(selects.length).toBe(5);
    const button = el.querySelector("button")!;
    expect(button.disabled).toBe(false);
    expect(el.querySelector(".preview")!.textContent).toBe(
      "<session> <opened> <for> <user> [ID]",
    );
  });

  it("disables submit while tags are missing and recovers on change", () => {
    const card = PendingCard.fromPending(item({ guess: null }), TYPES);
    const el = renderCard(document, card, TYPES, { onSubmit: () => {} });
    const button = el.querySelector("button")!;
    expect(button.disabled).toBe(true);
    for (const select of el.querySelectorAll("select")) {
      select.value = "<keyword>";
      select.dispatchEvent(new Event("change"));
    }
    expect(button.disabled).toBe(false);
    expect(el.querySelector(".errors")!.textContent).toBe("");
  });

  it("fires the submit handler with the card", () => {
    const card = PendingCard.fromPending(item(), TYPES);
    let got: PendingCard | null = null;
    const el = renderCard(document, card, TYPES, { onSubmit: (c) => (got = c) });
    el.querySelector("button")!.click();
    expect(got).toBe(card);
  });
});
