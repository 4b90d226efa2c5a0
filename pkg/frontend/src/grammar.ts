/**
 * Local mirror of the canonical template grammar, used only to gate the
 * submit button; the server re-validates every submission.
 *
 * Token forms: `[NAME]` is a type placeholder (NAME must be in the catalog),
 * `<word>` is a keyword, and a bare token is treated as a keyword.
 */

export type TokenKind = "placeholder" | "keyword";

export interface TemplateToken {
  kind: TokenKind;
  value: string;
}

export interface ValidationResult {
  ok: boolean;
  errors: string[];
  tokens: TemplateToken[];
}

export function tokenizeTemplate(text: string): TemplateToken[] {
  const tokens: TemplateToken[] = [];
  for (const part of text.split(/\s+/).filter((p) => p.length > 0)) {
    if (part.length >= 3 && part.startsWith("[") && part.endsWith("]")) {
      tokens.push({ kind: "placeholder", value: part.slice(1, -1) });
    } else if (part.length >= 3 && part.startsWith("<") && part.endsWith(">")) {
      tokens.push({ kind: "keyword", value: part.slice(1, -1) });
    } else {
      tokens.push({ kind: "keyword", value: part });
    }
  }
  return tokens;
}

export function renderTokens(tokens: TemplateToken[]): string {
  return tokens
    .map((t) => (t.kind === "placeholder" ? `[${t.value}]` : `<${t.value}>`))
    .join(" ");
}

export function validateTemplate(
  text: string,
  types: string[],
  wordCount: number,
): ValidationResult {
  const errors: string[] = [];
  const tokens = tokenizeTemplate(text);
  if (tokens.length === 0) {
    errors.push("template is empty");
  }
  const known = new Set(types);
  for (const token of tokens) {
    if (token.kind === "placeholder" && !known.has(token.value)) {
      errors.push(`unknown word type: ${token.value}`);
    }
  }
  if (tokens.length > 0 && tokens.length !== wordCount) {
    errors.push(`template has ${tokens.length} tokens but the log has ${wordCount} words`);
  }
  return { ok: errors.length === 0, errors, tokens };
}
