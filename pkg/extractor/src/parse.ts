/** Parsers for model completions: grading labels and verbalized confidence. */

const LABEL_PATTERN = /\b(1|0|correct|incorrect|right|wrong)\b/i;

/** First recognizable grading label in the completion, or null. */
export function parseLabel(text: string): 0 | 1 | null {
  const match = LABEL_PATTERN.exec(text);
  if (!match) return null;
  const token = match[1].toLowerCase();
  return token === "1" || token === "correct" || token === "right" ? 1 : 0;
}

const LABELED_CONFIDENCE = /(?:confidence|probability|score)\s*[:=]?\s*([0-9]+(?:\.[0-9]+)?)\s*(%?)/i;
const BARE_NUMBER = /([0-9]+(?:\.[0-9]+)?)\s*(%?)/;

/**
 * Verbalized confidence from a completion.
 *
 * Accepts a bare decimal in [0, 1], a percentage (with or without the %
 * sign: bare numbers in (1, 100] are read as percentages), or a labeled
 * field like "confidence: 0.85". Returns null when nothing parseable is
 * found or the value is out of range.
 */
export function parseVerbalized(text: string): number | null {
  const match = LABELED_CONFIDENCE.exec(text) ?? BARE_NUMBER.exec(text);
  if (!match) return null;
  let value = Number(match[1]);
  if (!Number.isFinite(value)) return null;
  if (match[2] === "%" || value > 1.0) value /= 100.0;
  if (value < 0 || value > 1) return null;
  return value;
}
