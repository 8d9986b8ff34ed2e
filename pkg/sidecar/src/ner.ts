/**
 * Heuristic named-entity tagger.
 *
 * Digit-bearing tokens are NUM; capitalized tokens that do not open a
 * sentence are NAME. Spans use code-point offsets into the submitted
 * text and never overlap because each covers exactly one token.
 */

import { tokenSpans } from "./tokenize.js";

export interface EntitySpan {
  start: number;
  end: number;
  label: string;
}

const DIGIT_RE = /\p{Nd}/u;
const UPPER_RE = /^\p{Lu}/u;

export function entities(text: string, _modelId: string): EntitySpan[] {
  const chars = [...text];
  const spans: EntitySpan[] = [];
  let previousEnd = 0;
  let first = true;
  for (const { start, end } of tokenSpans(text)) {
    const gap = chars.slice(previousEnd, start).join("");
    const sentenceInitial = first || /[.!?]/.test(gap);
    first = false;
    previousEnd = end;
    const token = chars.slice(start, end).join("");
    if (DIGIT_RE.test(token)) {
      spans.push({ start, end, label: "NUM" });
    } else if (UPPER_RE.test(token) && !sentenceInitial) {
      spans.push({ start, end, label: "NAME" });
    }
  }
  return spans;
}
