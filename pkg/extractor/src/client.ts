import { ModelClient } from "./types.js";

export interface EndpointConfig {
  llmBaseUrl: string;
  llmApiKey?: string;
  embedBaseUrl: string;
  embedApiKey?: string;
  model: string;
  embeddingModel: string;
}

/** Read endpoint configuration from GRADECONF_* environment variables. */
export function endpointsFromEnv(env: NodeJS.ProcessEnv = process.env): EndpointConfig {
  const llmBaseUrl = env.GRADECONF_LLM_BASE_URL;
  if (!llmBaseUrl) throw new Error("GRADECONF_LLM_BASE_URL is not set");
  const model = env.GRADECONF_LLM_MODEL;
  if (!model) throw new Error("GRADECONF_LLM_MODEL is not set");
  return {
    llmBaseUrl,
    llmApiKey: env.GRADECONF_LLM_API_KEY,
    embedBaseUrl: env.GRADECONF_EMBED_BASE_URL ?? llmBaseUrl,
    embedApiKey: env.GRADECONF_EMBED_API_KEY ?? env.GRADECONF_LLM_API_KEY,
    model,
    embeddingModel: env.GRADECONF_EMBED_MODEL ?? "all-MiniLM-L6-v2",
  };
}

async function postJson(url: string, apiKey: string | undefined, body: unknown): Promise<any> {
  const headers: Record<string, string> = { "content-type": "application/json" };
  if (apiKey) headers.authorization = `Bearer ${apiKey}`;
  const response = await fetch(url, { method: "POST", headers, body: JSON.stringify(body) });
  if (!response.ok) {
    const detail = await response.text().catch(() => "");
    throw new Error(`${url} -> HTTP ${response.status}: ${detail.slice(0, 200)}`);
  }
  return response.json();
}

/**
 * OpenAI-compatible transport.
 *
 * Grading/confidence completions go through /chat/completions; label
 * log-likelihoods use the /completions echo+logprobs trick (score the
 * prompt with max_tokens 0 and sum the logprobs of the tokens that lie
 * beyond the prefix); embeddings use /embeddings.
 */
export class OpenAiCompatClient implements ModelClient {
  constructor(private readonly config: EndpointConfig) {}

  async chat(prompt: string, temperature: number, maxTokens: number): Promise<string> {
    const data = await postJson(`${this.config.llmBaseUrl}/chat/completions`, this.config.llmApiKey, {
      model: this.config.model,
      messages: [{ role: "user", content: prompt }],
      temperature,
      max_tokens: maxTokens,
    });
    const content = data?.choices?.[0]?.message?.content;
    if (typeof content !== "string") throw new Error("chat completion had no message content");
    return content;
  }

  async scoreContinuation(prefix: string, continuation: string): Promise<number> {
    const data = await postJson(`${this.config.llmBaseUrl}/completions`, this.config.llmApiKey, {
      model: this.config.model,
      prompt: prefix + continuation,
      max_tokens: 0,
      echo: true,
      logprobs: 0,
    });
    const logprobs = data?.choices?.[0]?.logprobs;
    const tokens: unknown[] = logprobs?.tokens ?? [];
    const tokenLogprobs: (number | null)[] = logprobs?.token_logprobs ?? [];
    const offsets: number[] = logprobs?.text_offset ?? [];
    let total = 0;
    let counted = 0;
    for (let i = 0; i < tokens.length; i++) {
      if (offsets[i] >= prefix.length) {
        const lp = tokenLogprobs[i];
        if (lp === null || lp === undefined) throw new Error("continuation token has no logprob");
        total += lp;
        counted += 1;
      }
    }
    if (counted === 0) throw new Error("no tokens scored beyond the prompt prefix");
    return total;
  }

  async embed(text: string): Promise<number[]> {
    const data = await postJson(`${this.config.embedBaseUrl}/embeddings`, this.config.embedApiKey, {
      model: this.config.embeddingModel,
      input: text,
    });
    const embedding = data?.data?.[0]?.embedding;
    if (!Array.isArray(embedding) || embedding.length === 0) {
      throw new Error("embeddings response had no vector");
    }
    return embedding.map(Number);
  }
}
