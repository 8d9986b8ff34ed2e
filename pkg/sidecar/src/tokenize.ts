/**
 * Word tokenization shared by the embedding, NER, and scoring models.
 *
 * Offsets are code-point indices, not UTF-16 code units, so they match
 * what a Python client computes with len()/slicing on the same string.
 */

const TOKEN_RE = /[\p{L}\p{N}]+(?:['’][\p{L}\p{N}]+)*/gu;

export interface TokenSpan {
  token: string;
  start: number;
  end: number;
}

/** Map from UTF-16 index to code-point index for one string. */
function codePointIndex(text: string): Uint32Array {
  const map = new Uint32Array(text.length + 1);
  let points = 0;
  let unit = 0;
  for (const ch of text) {
    for (let i = 0; i < ch.length; i++) {
      map[unit + i] = points;
    }
    unit += ch.length;
    points += 1;
  }
  map[text.length] = points;
  return map;
}

export function tokenSpans(text: string): TokenSpan[] {
  const index = codePointIndex(text);
  const spans: TokenSpan[] = [];
  for (const match of text.matchAll(TOKEN_RE)) {
    const raw = match[0];
    spans.push({
      token: raw.toLowerCase(),
      start: index[match.index],
      end: index[match.index + raw.length],
    });
  }
  return spans;
}

export function tokenize(text: string): string[] {
  return tokenSpans(text).map((span) => span.token);
}
