/**
 * Candidate/reference similarity: clipped token-overlap F1.
 *
 * Identical strings always score 1.0; two empty strings count as a
 * perfect match, one empty side as a total miss.
 */

import { tokenize } from "./tokenize.js";

function counts(tokens: string[]): Map<string, number> {
  const table = new Map<string, number>();
  for (const token of tokens) {
    table.set(token, (table.get(token) ?? 0) + 1);
  }
  return table;
}

export function tokenF1(candidate: string, reference: string): number {
  const cand = counts(tokenize(candidate));
  const ref = counts(tokenize(reference));
  if (cand.size === 0 || ref.size === 0) {
    return cand.size === 0 && ref.size === 0 ? 1.0 : 0.0;
  }
  let overlap = 0;
  let candTotal = 0;
  let refTotal = 0;
  for (const count of cand.values()) candTotal += count;
  for (const count of ref.values()) refTotal += count;
  for (const [token, count] of cand) {
    overlap += Math.min(count, ref.get(token) ?? 0);
  }
  if (overlap === 0) {
    return 0.0;
  }
  const precision = overlap / candTotal;
  const recall = overlap / refTotal;
  return (2 * precision * recall) / (precision + recall);
}
