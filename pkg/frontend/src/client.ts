/**
 * HTTP client for the kgdecode service.
 *
 * Covers whole-question decoding plus the step-wise constraint API:
 * open a session, advance named sequences token by token, read back
 * allowed-token masks as packed bitsets, fork sequences for beam search
 * on the caller's side, and swap the knowledge base.
 */

import { decodeBase64 } from "./bitset.js";
import { VocabularyView } from "./tokens.js";

export type MaskMode = "full" | "no-pruning" | "unconstrained";

export interface HealthInfo {
  status: string;
  entities: number;
  relations: number;
  triples: number;
  vocab_size: number;
}

export interface RankedQuery {
  query: string;
  logp: number;
}

export interface Answer {
  kind: string;
  value: string[];
  rank: number;
}

export interface QuestionResult {
  question: string;
  ranked: RankedQuery[];
  answer: Answer | null;
  steps: number;
  dead_hypotheses: number;
  error: string | null;
}

export interface DecodeOptions {
  mode?: MaskMode;
  beamSize?: number;
  maxLen?: number;
  scorer?: string;
  seed?: number;
  gold?: Record<string, string>;
}

export interface PackedMask {
  mode: MaskMode;
  vocabSize: number;
  raw: Uint8Array;
  allowedCount: number;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function expectOk(resp: Response): Promise<any> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail = (body as any)?.detail ?? {};
    throw new ServiceError(resp.status, detail.code ?? "error", detail.message ?? resp.statusText);
  }
  return body;
}

function toPackedMask(payload: any): PackedMask {
  if (payload.bit_order !== "lsb0") {
    throw new Error(`unsupported bit order ${payload.bit_order}`);
  }
  return {
    mode: payload.mode,
    vocabSize: payload.vocab_size,
    raw: decodeBase64(payload.mask_b64),
    allowedCount: payload.allowed_count,
  };
}

export class KgDecodeClient {
  constructor(readonly baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async get(path: string): Promise<any> {
    return expectOk(await fetch(this.baseUrl + path));
  }

  private async post(path: string, body?: unknown): Promise<any> {
    return expectOk(
      await fetch(this.baseUrl + path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      }),
    );
  }

  health(): Promise<HealthInfo> {
    return this.get("/health");
  }

  async vocabulary(): Promise<VocabularyView> {
    const payload = await this.get("/vocabulary");
    return new VocabularyView(payload.tokens);
  }

  async decode(questions: string[], options: DecodeOptions = {}): Promise<QuestionResult[]> {
    const payload = await this.post("/decode", {
      questions,
      mode: options.mode ?? "full",
      beam_size: options.beamSize ?? 10,
      max_len: options.maxLen ?? 128,
      scorer: options.scorer ?? "uniform",
      seed: options.seed ?? 0,
      gold: options.gold,
    });
    return payload.results;
  }

  async swap(indexPath: string): Promise<{ entities: number; relations: number; triples: number }> {
    return this.post("/swap", { index_path: indexPath });
  }

  async openSession(): Promise<SessionHandle> {
    const payload = await this.post("/sessions");
    return new SessionHandle(this, payload.session_id);
  }

  async closeSession(sessionId: string): Promise<void> {
    await expectOk(await fetch(`${this.baseUrl}/sessions/${sessionId}`, { method: "DELETE" }));
  }

  async advance(sessionId: string, seqId: string, tokens: number[]): Promise<number> {
    const payload = await this.post(
      `/sessions/${sessionId}/sequences/${encodeURIComponent(seqId)}/advance`,
      { tokens },
    );
    return payload.position;
  }

  async fork(sessionId: string, seqId: string, newId: string): Promise<void> {
    await this.post(`/sessions/${sessionId}/sequences/${encodeURIComponent(seqId)}/fork`, {
      new_id: newId,
    });
  }

  async mask(sessionId: string, seqId: string, mode: MaskMode = "full"): Promise<PackedMask> {
    const payload = await this.get(
      `/sessions/${sessionId}/sequences/${encodeURIComponent(seqId)}/mask?mode=${mode}`,
    );
    return toPackedMask(payload);
  }

  /** One-shot mask for a prefix, recomputed server-side from scratch. */
  async replayMask(tokens: number[], mode: MaskMode = "full"): Promise<PackedMask> {
    return toPackedMask(await this.post("/mask/replay", { tokens, mode }));
  }
}

/** One session; sequences are named by the caller and forkable. */
export class SessionHandle {
  constructor(
    private readonly client: KgDecodeClient,
    readonly id: string,
  ) {}

  advance(seqId: string, tokens: number | number[]): Promise<number> {
    return this.client.advance(this.id, seqId, Array.isArray(tokens) ? tokens : [tokens]);
  }

  mask(seqId: string, mode: MaskMode = "full"): Promise<PackedMask> {
    return this.client.mask(this.id, seqId, mode);
  }

  fork(seqId: string, newId: string): Promise<void> {
    return this.client.fork(this.id, seqId, newId);
  }

  close(): Promise<void> {
    return this.client.closeSession(this.id);
  }
}
