import { parseLabel, parseVerbalized } from "./parse.js";
import { renderTemplate } from "./prompts.js";
import {
  ExtractionJob,
  ExtractionResult,
  InputRow,
  InterchangeRecord,
  ModelClient,
  RecordWarning,
  SkippedRecord,
} from "./types.js";

const LABEL_MAX_TOKENS = 8;
const CONFIDENCE_MAX_TOKENS = 32;

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

async function withRetries<T>(job: ExtractionJob, fn: () => Promise<T>): Promise<T> {
  let lastError: unknown;
  for (let attempt = 0; attempt < job.retry.attempts; attempt++) {
    try {
      return await fn();
    } catch (error) {
      lastError = error;
      if (attempt + 1 < job.retry.attempts && job.retry.delayMs > 0) {
        await sleep(job.retry.delayMs);
      }
    }
  }
  throw lastError;
}

function promptVars(row: InputRow): Record<string, string> {
  return {
    question: row.question,
    reference_answer: row.reference_answer,
    response: row.response,
  };
}

/**
 * Extract one interchange record: greedy decision, verbalized confidence,
 * label log-likelihoods over the candidate labels, one sampled label per
 * configured temperature, and the embedding of the response text alone.
 */
export async function extractRecord(
  row: InputRow,
  id: string,
  job: ExtractionJob,
  client: ModelClient,
  warnings: RecordWarning[],
): Promise<InterchangeRecord> {
  const gradingPrompt = renderTemplate(job.gradingTemplate, promptVars(row));

  const greedyText = await withRetries(job, () =>
    client.chat(gradingPrompt, job.greedyTemperature, LABEL_MAX_TOKENS),
  );
  const pred = parseLabel(greedyText);
  if (pred === null) {
    throw new Error(`could not parse a grading label from ${JSON.stringify(greedyText.slice(0, 80))}`);
  }

  let verbalized: number | undefined;
  try {
    const confidencePrompt = renderTemplate(job.confidenceTemplate, {
      ...promptVars(row),
      decision: pred === 1 ? "correct" : "incorrect",
    });
    const completion = await withRetries(job, () =>
      client.chat(confidencePrompt, job.greedyTemperature, CONFIDENCE_MAX_TOKENS),
    );
    const parsed = parseVerbalized(completion);
    if (parsed === null) {
      warnings.push({
        id,
        kind: "verbalized-missing",
        detail: `unparseable confidence completion ${JSON.stringify(completion.slice(0, 80))}`,
      });
    } else {
      verbalized = parsed;
    }
  } catch (error) {
    warnings.push({ id, kind: "verbalized-missing", detail: String(error) });
  }

  // label continuations hold only the label token, no reasoning tokens
  const [loglik0, loglik1] = await Promise.all([
    withRetries(job, () => client.scoreContinuation(gradingPrompt, " 0")),
    withRetries(job, () => client.scoreContinuation(gradingPrompt, " 1")),
  ]);

  const sampled: number[] = [];
  for (const temperature of job.temperatures) {
    try {
      const text = await withRetries(job, () => client.chat(gradingPrompt, temperature, LABEL_MAX_TOKENS));
      const label = parseLabel(text);
      if (label === null) throw new Error(`unparseable sample ${JSON.stringify(text.slice(0, 80))}`);
      sampled.push(label);
    } catch (error) {
      // keep one sample per temperature; fall back to the greedy decision
      warnings.push({ id, kind: "sample-fallback", detail: `t=${temperature}: ${String(error)}` });
      sampled.push(pred);
    }
  }

  const embedding = await withRetries(job, () => client.embed(row.response));

  const record: InterchangeRecord = {
    id,
    question_id: row.question_id,
    text: row.response,
    gold_label: row.gold_label,
    embedding,
    pred_label: pred,
    label_logliks: { "0": loglik0, "1": loglik1 },
    sampled_labels: sampled,
  };
  if (verbalized !== undefined) record.verbalized = verbalized;
  return record;
}

/** Run extraction over all rows, batchSize records at a time, preserving input order. */
export async function runJob(
  rows: InputRow[],
  job: ExtractionJob,
  client: ModelClient,
): Promise<ExtractionResult> {
  const records: InterchangeRecord[] = [];
  const warnings: RecordWarning[] = [];
  const skipped: SkippedRecord[] = [];

  const ids = rows.map((row, i) => row.response_id ?? `${row.question_id}-r${i}`);

  for (let start = 0; start < rows.length; start += job.batchSize) {
    const batch = rows.slice(start, start + job.batchSize);
    const settled = await Promise.all(
      batch.map((row, offset) =>
        extractRecord(row, ids[start + offset], job, client, warnings)
          .then((record) => ({ record, error: null as string | null }))
          .catch((error) => ({ record: null, error: String(error) })),
      ),
    );
    settled.forEach((outcome, offset) => {
      if (outcome.record) {
        records.push(outcome.record);
      } else {
        skipped.push({ id: ids[start + offset], reason: outcome.error ?? "unknown error" });
      }
    });
  }
  return { records, warnings, skipped };
}
