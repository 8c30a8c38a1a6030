import { readFileSync, writeFileSync } from "node:fs";
import Papa from "papaparse";

import { InputRow, InterchangeRecord, inputRowSchema } from "./types.js";

/** Read extraction input rows from a CSV (with header) or JSONL file. */
export function readInput(path: string): InputRow[] {
  const text = readFileSync(path, "utf-8");
  const rawRows: unknown[] = path.endsWith(".csv") ? parseCsv(text) : parseJsonl(text);
  return rawRows.map((raw, i) => {
    const result = inputRowSchema.safeParse(raw);
    if (!result.success) {
      throw new Error(`input row ${i + 1} is invalid: ${result.error.issues[0]?.message}`);
    }
    return result.data;
  });
}

function parseCsv(text: string): unknown[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`CSV parse error at row ${first.row}: ${first.message}`);
  }
  return parsed.data;
}

function parseJsonl(text: string): unknown[] {
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line, i) => {
      try {
        return JSON.parse(line);
      } catch {
        throw new Error(`input line ${i + 1} is not valid JSON`);
      }
    });
}

/** Write records as interchange JSONL with a stable key order. */
export function writeInterchange(records: InterchangeRecord[], path: string): void {
  const lines = records.map((record) => {
    const ordered: Record<string, unknown> = {
      id: record.id,
      question_id: record.question_id,
      text: record.text,
      gold_label: record.gold_label,
      embedding: record.embedding,
      pred_label: record.pred_label,
      label_logliks: record.label_logliks,
      sampled_labels: record.sampled_labels,
    };
    if (record.verbalized !== undefined) ordered.verbalized = record.verbalized;
    return JSON.stringify(ordered);
  });
  writeFileSync(path, lines.join("\n") + (lines.length ? "\n" : ""));
}
