import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { extractRecord, runJob } from "../src/extract.js";
import { ExtractionJob, InputRow } from "../src/types.js";
import { MockClient } from "./mock.js";

const PROMPTS = join(__dirname, "..", "prompts");

function job(overrides: Partial<ExtractionJob> = {}): ExtractionJob {
  return {
    model: "mock-llm",
    embeddingModel: "mock-embed",
    gradingTemplate: readFileSync(join(PROMPTS, "grading.txt"), "utf-8"),
    confidenceTemplate: readFileSync(join(PROMPTS, "confidence.txt"), "utf-8"),
    temperatures: [0.2, 0.4, 0.6, 0.8, 1.0],
    greedyTemperature: 0.1,
    batchSize: 4,
    retry: { attempts: 2, delayMs: 0 },
    ...overrides,
  };
}

function rows(n: number): InputRow[] {
  return Array.from({ length: n }, (_, i) => ({
    question_id: `q${i % 5}`,
    question: `What makes object ${i} move?`,
    reference_answer: "An unbalanced force acts on it.",
    response_id: `resp-${i}`,
    response: `Because a force pushes object ${i}.`,
    gold_label: i % 2,
  }));
}

describe("extractRecord", () => {
  it("emits one sample per configured temperature", async () => {
    const record = await extractRecord(rows(1)[0], "r0", job(), new MockClient(), []);
    expect(record.sampled_labels).toHaveLength(5);
    const shorter = await extractRecord(
      rows(1)[0], "r0", job({ temperatures: [0.3, 0.9] }), new MockClient(), [],
    );
    expect(shorter.sampled_labels).toHaveLength(2);
  });

  it("scores exactly the two candidate labels", async () => {
    const record = await extractRecord(rows(1)[0], "r0", job(), new MockClient(), []);
    expect(Object.keys(record.label_logliks).sort()).toEqual(["0", "1"]);
    expect(record.label_logliks["0"]).toBeLessThan(0);
    expect(record.label_logliks["1"]).toBeLessThan(0);
  });

  it("embeds the response text", async () => {
    const client = new MockClient({ embeddingDim: 7 });
    const record = await extractRecord(rows(1)[0], "r0", job(), client, []);
    expect(record.embedding).toHaveLength(7);
  });

  it("parses each accepted verbalized format", async () => {
    for (const format of ["decimal", "percent", "labeled"] as const) {
      const client = new MockClient({ confidenceFormat: format });
      const record = await extractRecord(rows(1)[0], "r0", job(), client, []);
      expect(record.verbalized).toBeGreaterThanOrEqual(0);
      expect(record.verbalized).toBeLessThanOrEqual(1);
    }
  });

  it("omits verbalized with a warning when unparseable", async () => {
    const warnings: any[] = [];
    const client = new MockClient({ unparseableConfidenceFor: () => true });
    const record = await extractRecord(rows(1)[0], "r0", job(), client, warnings);
    expect(record.verbalized).toBeUndefined();
    expect(warnings).toHaveLength(1);
    expect(warnings[0].kind).toBe("verbalized-missing");
  });

  it("falls back to the greedy label when a sample is unparseable", async () => {
    const warnings: any[] = [];
    const client = new MockClient({ unparseableSamplesFor: () => true });
    const record = await extractRecord(rows(1)[0], "r0", job(), client, warnings);
    expect(record.sampled_labels).toHaveLength(5);
    expect(new Set(record.sampled_labels)).toEqual(new Set([record.pred_label]));
    expect(warnings.filter((w) => w.kind === "sample-fallback")).toHaveLength(5);
  });

  it("retries transient failures", async () => {
    const client = new MockClient({ embedFailuresBeforeSuccess: 1 });
    const record = await extractRecord(rows(1)[0], "r0", job(), client, []);
    expect(record.embedding).toHaveLength(6);
  });
});

describe("runJob", () => {
  it("skips records whose grading call keeps failing", async () => {
    const input = rows(6);
    const failFor = (prompt: string) => prompt.includes("object 2");
    const result = await runJob(input, job(), new MockClient({ failGradingFor: failFor }));
    expect(result.records).toHaveLength(5);
    expect(result.skipped).toHaveLength(1);
    expect(result.skipped[0].id).toBe("resp-2");
    expect(result.skipped[0].reason).toContain("mock endpoint failure");
  });

  it("preserves input order despite concurrency", async () => {
    const input = rows(17);
    const result = await runJob(input, job({ batchSize: 5 }), new MockClient({ jitterMs: 8 }));
    expect(result.records.map((r) => r.id)).toEqual(input.map((r) => r.response_id));
  });

  it("keeps a constant embedding dimension across the run", async () => {
    const result = await runJob(rows(9), job(), new MockClient());
    const dims = new Set(result.records.map((r) => r.embedding.length));
    expect(dims.size).toBe(1);
  });
});
