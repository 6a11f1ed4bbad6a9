// Session flow state machine: create or resume, walk the pairs in order,
// submit one answer per pair, fetch the final report. Pure logic with an
// injected API so the whole flow runs headless in tests.

import { ApiError, BlindTestApi, PairPayload, ResultsPayload } from "./api.js";

export type FlowState = "answering" | "answered" | "complete";

export class SessionFlow {
  private answeredCount = 0;
  private submitting = false;
  current = 0;

  private constructor(private api: BlindTestApi, readonly sessionId: string,
                      readonly nPairs: number) {}

  static async create(api: BlindTestApi, nPairs: number,
                      seed?: number): Promise<SessionFlow> {
    if (nPairs < 1) {
      throw new Error("a session needs at least one pair");
    }
    const info = await api.createSession(nPairs, seed);
    return new SessionFlow(api, info.session_id, info.n_pairs);
  }

  /** Rebuild progress from server state after a reload: the first
   * unanswered pair becomes current. */
  static async resume(api: BlindTestApi, sessionId: string): Promise<SessionFlow> {
    const results = await api.getResults(sessionId);
    const flow = new SessionFlow(api, sessionId, results.n_pairs);
    flow.answeredCount = results.answered;
    flow.current = results.n_pairs;
    for (let k = 0; k < results.n_pairs; k++) {
      const pair = await api.getPair(sessionId, k);
      if (!pair.answered) {
        flow.current = k;
        break;
      }
    }
    return flow;
  }

  get complete(): boolean {
    return this.answeredCount >= this.nPairs;
  }

  get answered(): number {
    return this.answeredCount;
  }

  loadCurrentPair(): Promise<PairPayload> {
    return this.api.getPair(this.sessionId, this.current);
  }

  /** Submit the human's choice for the current pair. Duplicate clicks while
   * a request is in flight are dropped; a server-side conflict (the pair
   * was already answered, e.g. in another tab) is reconciled, not fatal. */
  async choose(slot: 0 | 1): Promise<FlowState> {
    if (this.complete) {
      return "complete";
    }
    if (this.submitting) {
      return "answering";
    }
    this.submitting = true;
    try {
      const receipt = await this.api.submitAnswer(this.sessionId, this.current, slot);
      this.answeredCount = receipt.answered;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.answeredCount += 1;   // already recorded server-side
      } else {
        throw err;
      }
    } finally {
      this.submitting = false;
    }
    return this.complete ? "complete" : "answered";
  }

  /** Advance to the next pair after an answer. */
  advance(): number {
    if (this.current < this.nPairs - 1) {
      this.current += 1;
    }
    return this.current;
  }

  results(): Promise<ResultsPayload> {
    return this.api.getResults(this.sessionId);
  }
}

/** Accuracy recomputed client-side from the per-pair report; must agree
 * with the server's summary figure. */
export function accuracyFromReport(results: ResultsPayload): number {
  if (!results.pairs || results.pairs.length === 0) {
    return 0;
  }
  const correct = results.pairs.filter((p) => p.correct).length;
  return correct / results.pairs.length;
}
