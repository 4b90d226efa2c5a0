/**
 * Pending-card view model and its DOM renderer.
 *
 * A card tags every word of the selected log either with a word type from
 * the catalog or as a literal keyword. The LLM's guess is pre-applied when
 * its token count matches. A raw-text override exists as a fallback editor;
 * either path must pass the local grammar check before submit is enabled.
 */

import type { PendingItem } from "./api.js";
import {
  renderTokens,
  tokenizeTemplate,
  validateTemplate,
  type TemplateToken,
  type ValidationResult,
} from "./grammar.js";

export type WordTag =
  | { kind: "type"; value: string }
  | { kind: "keyword" };

export class PendingCard {
  readonly logId: number;
  readonly round: number;
  readonly raw: string;
  readonly words: string[];
  tags: (WordTag | null)[];
  overrideText: string | null = null;
  submitted: boolean;

  constructor(item: PendingItem) {
    this.logId = item.log_id;
    this.round = item.round;
    this.raw = item.raw;
    this.words = [...item.words];
    this.tags = this.words.map(() => null);
    this.submitted = item.submitted;
  }

  static fromPending(item: PendingItem, types: string[]): PendingCard {
    const card = new PendingCard(item);
    if (item.guess) {
      card.applyGuess(item.guess, types);
    }
    return card;
  }

  /** Pre-fill tags from a guessed template when it lines up with the words. */
  applyGuess(guess: string, types: string[]): boolean {
    const tokens = tokenizeTemplate(guess);
    if (tokens.length !== this.words.length) return false;
    const known = new Set(types);
    const tags: (WordTag | null)[] = [];
    for (const token of tokens) {
      if (token.kind === "placeholder") {
        if (!known.has(token.value)) return false;
        tags.push({ kind: "type", value: token.value });
      } else {
        tags.push({ kind: "keyword" });
      }
    }
    this.tags = tags;
    return true;
  }

  setType(index: number, typeName: string): void {
    this.tags[index] = { kind: "type", value: typeName };
  }

  setKeyword(index: number): void {
    this.tags[index] = { kind: "keyword" };
  }

  clearTag(index: number): void {
    this.tags[index] = null;
  }

  allTagged(): boolean {
    return this.tags.every((t) => t !== null);
  }

  /** Canonical template string from the tag row (or the raw override). */
  templateString(): string {
    if (this.overrideText !== null) return this.overrideText;
    const tokens: TemplateToken[] = this.tags.map((tag, i) => {
      if (tag === null || tag.kind === "keyword") {
        return { kind: "keyword", value: this.words[i] };
      }
      return { kind: "placeholder", value: tag.value };
    });
    return renderTokens(tokens);
  }

  validate(types: string[]): ValidationResult {
    if (this.overrideText === null && !this.allTagged()) {
      return {
        ok: false,
        errors: ["every word needs a tag"],
        tokens: [],
      };
    }
    return validateTemplate(this.templateString(), types, this.words.length);
  }

  canSubmit(types: string[]): boolean {
    return !this.submitted && this.validate(types).ok;
  }
}

export interface CardHandlers {
  onSubmit: (card: PendingCard) => void;
}

/** Build the card element; pure function of (card, types), no globals. */
export function renderCard(
  doc: Document,
  card: PendingCard,
  types: string[],
  handlers: CardHandlers,
): HTMLElement {
  const root = doc.createElement("article");
  root.className = "card";
  root.dataset.logId = String(card.logId);

  const title = doc.createElement("h3");
  title.textContent = `log ${card.logId}`;
  root.appendChild(title);

  const rawLine = doc.createElement("pre");
  rawLine.textContent = card.raw;
  root.appendChild(rawLine);

  const row = doc.createElement("div");
  row.className = "tag-row";
  card.words.forEach((word, i) => {
    const cell = doc.createElement("label");
    cell.className = "tag-cell";
    const caption = doc.createElement("span");
    caption.textContent = word;
    cell.appendChild(caption);

    const select = doc.createElement("select");
    const blank = doc.createElement("option");
    blank.value = "";
    blank.textContent = "—";
    select.appendChild(blank);
    const kw = doc.createElement("option");
    kw.value = "<keyword>";
    kw.textContent = "keyword";
    select.appendChild(kw);
    for (const t of types) {
      const opt = doc.createElement("option");
      opt.value = t;
      opt.textContent = `[${t}]`;
      select.appendChild(opt);
    }
    const tag = card.tags[i];
    select.value = tag === null ? "" : tag.kind === "keyword" ? "<keyword>" : tag.value;
    select.addEventListener("change", () => {
      if (select.value === "") card.clearTag(i);
      else if (select.value === "<keyword>") card.setKeyword(i);
      else card.setType(i, select.value);
      refresh();
    });
    cell.appendChild(select);
    row.appendChild(cell);
  });
  root.appendChild(row);

  const preview = doc.createElement("code");
  preview.className = "preview";
  root.appendChild(preview);

  const errorBox = doc.createElement("p");
  errorBox.className = "errors";
  root.appendChild(errorBox);

  const submit = doc.createElement("button");
  submit.textContent = card.submitted ? "submitted" : "submit";
  submit.addEventListener("click", () => handlers.onSubmit(card));
  root.appendChild(submit);

  function refresh(): void {
    preview.textContent = card.allTagged() || card.overrideText !== null
      ? card.templateString()
      : "(tag every word)";
    const result = card.validate(types);
    errorBox.textContent = result.errors.join("; ");
    submit.disabled = !card.canSubmit(types);
  }
  refresh();
  return root;
}
