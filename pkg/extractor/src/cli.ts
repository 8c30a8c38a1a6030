#!/usr/bin/env node
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { OpenAiCompatClient, endpointsFromEnv } from "./client.js";
import { runJob } from "./extract.js";
import { readInput, writeInterchange } from "./io.js";
import { loadTemplates } from "./prompts.js";
import { DEFAULT_GREEDY_TEMPERATURE, DEFAULT_TEMPERATURES, ExtractionJob } from "./types.js";

const DEFAULT_PROMPTS_DIR = join(dirname(fileURLToPath(import.meta.url)), "..", "prompts");

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .usage("Extract gradeconf interchange JSONL from LLM + embedding endpoints")
    .option("input", { type: "string", demandOption: true, describe: "question/response CSV or JSONL" })
    .option("output", { type: "string", demandOption: true, describe: "interchange JSONL to write" })
    .option("prompts-dir", { type: "string", default: DEFAULT_PROMPTS_DIR })
    .option("temperatures", {
      type: "string",
      default: DEFAULT_TEMPERATURES.join(","),
      describe: "comma-separated sampling temperatures, one consistency sample each",
    })
    .option("greedy-temperature", { type: "number", default: DEFAULT_GREEDY_TEMPERATURE })
    .option("batch-size", { type: "number", default: 4 })
    .option("retries", { type: "number", default: 3, describe: "attempts per model call" })
    .option("retry-delay-ms", { type: "number", default: 500 })
    .strict()
    .parse();

  const endpoints = endpointsFromEnv();
  const templates = loadTemplates(argv["prompts-dir"]);
  const temperatures = argv.temperatures.split(",").map(Number);
  if (temperatures.length === 0 || temperatures.some((t) => !Number.isFinite(t))) {
    throw new Error(`invalid temperature list: ${argv.temperatures}`);
  }

  const job: ExtractionJob = {
    model: endpoints.model,
    embeddingModel: endpoints.embeddingModel,
    gradingTemplate: templates.grading,
    confidenceTemplate: templates.confidence,
    temperatures,
    greedyTemperature: argv["greedy-temperature"],
    batchSize: argv["batch-size"],
    retry: { attempts: argv.retries, delayMs: argv["retry-delay-ms"] },
  };

  const rows = readInput(argv.input);
  console.error(`extracting ${rows.length} responses with ${endpoints.model}`);
  const result = await runJob(rows, job, new OpenAiCompatClient(endpoints));
  writeInterchange(result.records, argv.output);

  for (const warning of result.warnings) {
    console.error(`warning: ${warning.id}: ${warning.kind}: ${warning.detail}`);
  }
  for (const skip of result.skipped) {
    console.error(`error: skipped ${skip.id}: ${skip.reason}`);
  }
  console.error(
    `wrote ${result.records.length} records to ${argv.output} ` +
      `(${result.warnings.length} warnings, ${result.skipped.length} skipped)`,
  );
  return result.records.length > 0 ? 0 : 1;
}

main().then(
  (code) => process.exit(code),
  (error) => {
    console.error(`error: ${error instanceof Error ? error.message : String(error)}`);
    process.exit(1);
  },
);
