import { z } from "zod";

/** One question/response row of the extraction input. */
export const inputRowSchema = z.object({
  question_id: z.string().min(1),
  question: z.string().min(1),
  reference_answer: z.string().min(1),
  response_id: z.string().min(1).optional(),
  response: z.string(),
  gold_label: z.coerce.number().int().min(0).max(1),
});

export type InputRow = z.infer<typeof inputRowSchema>;

/** One line of the gradeconf interchange JSONL. */
export interface InterchangeRecord {
  id: string;
  question_id: string;
  text: string;
  gold_label: number;
  embedding: number[];
  pred_label: number;
  verbalized?: number;
  label_logliks: { "0": number; "1": number };
  sampled_labels: number[];
}

export interface RetryPolicy {
  attempts: number; // total tries including the first
  delayMs: number;
}

export interface ExtractionJob {
  model: string;
  embeddingModel: string;
  gradingTemplate: string;
  confidenceTemplate: string;
  temperatures: number[]; // consistency samples, one per temperature
  greedyTemperature: number;
  batchSize: number;
  retry: RetryPolicy;
}

export const DEFAULT_TEMPERATURES = [0.2, 0.4, 0.6, 0.8, 1.0];
export const DEFAULT_GREEDY_TEMPERATURE = 0.1;

/** Transport used by the extraction pipeline; mocked in tests. */
export interface ModelClient {
  /** One completion for the prompt at the given temperature. */
  chat(prompt: string, temperature: number, maxTokens: number): Promise<string>;
  /** Summed log-probability of the continuation tokens given the prefix. */
  scoreContinuation(prefix: string, continuation: string): Promise<number>;
  /** Embedding of the text (response only, no question context). */
  embed(text: string): Promise<number[]>;
}

export interface RecordWarning {
  id: string;
  kind: "verbalized-missing" | "sample-fallback";
  detail: string;
}

export interface SkippedRecord {
  id: string;
  reason: string;
}

export interface ExtractionResult {
  records: InterchangeRecord[];
  warnings: RecordWarning[];
  skipped: SkippedRecord[];
}
