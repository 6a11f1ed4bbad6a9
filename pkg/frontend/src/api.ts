// Typed client for the blind-test session API. The transport is injectable
// so the session flow can run against an in-memory stub in tests.

export interface SessionInfo {
  session_id: string;
  n_pairs: number;
  checkpoint_id: string;
}

export interface PairPayload {
  pair_index: number;
  n_pairs: number;
  sample1: number[];
  sample2: number[];
  answered: boolean;
}

export interface AnswerReceipt {
  session_id: string;
  pair_index: number;
  answered: number;
  n_pairs: number;
  complete: boolean;
}

export interface PairResult {
  pair_index: number;
  chosen_slot: number;
  real_slot: number;
  correct: boolean;
}

export interface ResultsPayload {
  session_id: string;
  checkpoint_id: string;
  n_pairs: number;
  answered: number;
  complete: boolean;
  accuracy?: number;
  pairs?: PairResult[];
}

export interface SpectrogramPayload {
  pair_index: number;
  window_len: number;
  overlap: number;
  sample1: number[][];
  sample2: number[][];
}

export interface Transport {
  get(path: string): Promise<unknown>;
  post(path: string, body: unknown): Promise<unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, public category: string, message: string) {
    super(message);
  }
}

/** fetch-backed transport; non-2xx responses raise ApiError with the
 * server's error category so callers can distinguish conflicts. */
export class HttpTransport implements Transport {
  constructor(private base: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await fetch(this.base + path, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const err = (body as { error?: { category?: string; message?: string } }).error;
      throw new ApiError(response.status, err?.category ?? "http",
        err?.message ?? `HTTP ${response.status}`);
    }
    return body;
  }

  get(path: string): Promise<unknown> {
    return this.request(path);
  }

  post(path: string, body: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}

export class BlindTestApi {
  constructor(private transport: Transport) {}

  createSession(nPairs?: number, seed?: number): Promise<SessionInfo> {
    const body: Record<string, number> = {};
    if (nPairs !== undefined) body.n_pairs = nPairs;
    if (seed !== undefined) body.seed = seed;
    return this.transport.post("/api/session", body) as Promise<SessionInfo>;
  }

  getPair(sessionId: string, index: number): Promise<PairPayload> {
    return this.transport.get(
      `/api/session/${sessionId}/pair/${index}`) as Promise<PairPayload>;
  }

  getSpectrogram(sessionId: string, index: number): Promise<SpectrogramPayload> {
    return this.transport.get(
      `/api/session/${sessionId}/pair/${index}/spectrogram`) as Promise<SpectrogramPayload>;
  }

  submitAnswer(sessionId: string, pairIndex: number,
               chosenSlot: 0 | 1): Promise<AnswerReceipt> {
    return this.transport.post(`/api/session/${sessionId}/answer`,
      { pair_index: pairIndex, chosen_slot: chosenSlot }) as Promise<AnswerReceipt>;
  }

  getResults(sessionId: string): Promise<ResultsPayload> {
    return this.transport.get(
      `/api/session/${sessionId}/results`) as Promise<ResultsPayload>;
  }
}
