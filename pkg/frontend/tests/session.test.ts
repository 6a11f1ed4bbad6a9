import { describe, expect, it } from "vitest";

import { BlindTestApi } from "../src/api.js";
import { SessionFlow, accuracyFromReport } from "../src/session.js";
import { StubServer } from "./stub_server.js";

const TRUTH: (0 | 1)[] = [0, 1, 1, 0, 1, 0, 0, 1];

describe("end-to-end session flow against the stub server", () => {
  it("reproduces the server-computed accuracy exactly", async () => {
    const stub = new StubServer(TRUTH);
    const api = new BlindTestApi(stub);
    const flow = await SessionFlow.create(api, TRUTH.length);

    // a scripted rater that is right on even pairs and wrong on odd ones
    for (let k = 0; k < TRUTH.length; k++) {
      const pair = await flow.loadCurrentPair();
      expect(pair.pair_index).toBe(k);
      expect(pair.answered).toBe(false);
      const pick = (k % 2 === 0 ? TRUTH[k] : 1 - TRUTH[k]) as 0 | 1;
      const state = await flow.choose(pick);
      expect(state).toBe(k === TRUTH.length - 1 ? "complete" : "answered");
      flow.advance();
    }

    const results = await flow.results();
    expect(results.complete).toBe(true);
    expect(results.accuracy).toBe(stub.serverAccuracy());
    expect(results.accuracy).toBe(0.5);
    expect(accuracyFromReport(results)).toBe(results.accuracy);
  });

  it("scores 1.0 for an oracle that always picks the real slot", async () => {
    const stub = new StubServer(TRUTH);
    const flow = await SessionFlow.create(new BlindTestApi(stub), TRUTH.length);
    for (const slot of TRUTH) {
      await flow.choose(slot);
      flow.advance();
    }
    expect((await flow.results()).accuracy).toBe(1.0);
  });

  it("rejects zero-pair sessions client-side", async () => {
    const stub = new StubServer(TRUTH);
    await expect(SessionFlow.create(new BlindTestApi(stub), 0))
      .rejects.toThrow(/at least one pair/);
    expect(stub.requestLog).toHaveLength(0);   // never reached the server
  });

  it("resumes mid-session from server state after a reload", async () => {
    const stub = new StubServer(TRUTH);
    const api = new BlindTestApi(stub);
    const flow = await SessionFlow.create(api, TRUTH.length);
    for (let k = 0; k < 3; k++) {
      await flow.choose(TRUTH[k]);
      flow.advance();
    }

    const resumed = await SessionFlow.resume(api, flow.sessionId);
    expect(resumed.answered).toBe(3);
    expect(resumed.current).toBe(3);
    expect(resumed.complete).toBe(false);
  });

  it("treats a duplicate submission as already answered, not an error", async () => {
    const stub = new StubServer(TRUTH);
    const api = new BlindTestApi(stub);
    const flow = await SessionFlow.create(api, TRUTH.length);
    await flow.choose(0);
    // second tab answered the same pair: server says conflict, flow reconciles
    const state = await flow.choose(1);
    expect(["answered", "complete"]).toContain(state);
    expect(stub.pairs[0].chosen).toBe(0);      // first answer stands
    expect(flow.answered).toBe(2);             // locally reconciled count
  });

  it("drops overlapping clicks while a submission is in flight", async () => {
    const stub = new StubServer(TRUTH);
    const api = new BlindTestApi(stub);
    const flow = await SessionFlow.create(api, TRUTH.length);
    const [first, second] = await Promise.all([flow.choose(0), flow.choose(1)]);
    expect(first).toBe("answered");
    expect(second).toBe("answering");          // ignored, no second POST
    const answerPosts = stub.requestLog.filter((r) => r.includes("/answer"));
    expect(answerPosts).toHaveLength(1);
  });

  it("propagates network failures so the caller can retry", async () => {
    const stub = new StubServer(TRUTH);
    const api = new BlindTestApi(stub);
    const flow = await SessionFlow.create(api, TRUTH.length);
    stub.failNextRequests = 1;
    await expect(flow.choose(0)).rejects.toThrow(/network failure/);
    expect(flow.answered).toBe(0);             // nothing lost
    await flow.choose(0);                      // retry succeeds
    expect(flow.answered).toBe(1);
  });
});
