import { describe, expect, it } from "vitest";

import type { ReviewApi } from "../api.js";
import { ScreeningController } from "../controller.js";
import type { Decision, PairView, QueueView } from "../types.js";

function pair(id: string): PairView {
  return {
    pair_id: id,
    src_text: { id: `${id}-s`, text: `src ${id}`, lang: "en" },
    tgt_text: { id: `${id}-t`, text: `tgt ${id}`, lang: "zh" },
    llm_rating: 5,
    cosine: 0.9,
  };
}

/** In-memory stand-in mirroring the server's queue/decision semantics. */
class FakeApi {
  decisions = new Map<string, Decision>();
  submissions: Array<{ pairId: string; decision: Decision }> = [];
  failNext = 0;

  constructor(readonly pool: PairView[]) {}

  async queue(_sessionId: string, annotator: string): Promise<QueueView> {
    const pairs = this.pool.filter((p) => !this.decisions.has(p.pair_id));
    return { annotator, pairs, decided: this.pool.length - pairs.length, total: this.pool.length };
  }

  async submitDecision(_annotator: string, pairId: string, decision: Decision): Promise<void> {
    if (this.failNext > 0) {
      this.failNext -= 1;
      throw new Error("network down");
    }
    this.decisions.set(pairId, decision); // overwrite semantics
    this.submissions.push({ pairId, decision });
  }
}

function controllerWith(pool: PairView[]): { api: FakeApi; ctl: ScreeningController } {
  const api = new FakeApi(pool);
  const ctl = new ScreeningController(api as unknown as ReviewApi, "main", "A");
  return { api, ctl };
}

describe("ScreeningController", () => {
  it("loads the server queue in server order", async () => {
    const { ctl } = controllerWith([pair("p0"), pair("p1"), pair("p2")]);
    await ctl.refresh();
    expect(ctl.queueSnapshot().map((p) => p.pair_id)).toEqual(["p0", "p1", "p2"]);
    expect(ctl.decided).toBe(0);
    expect(ctl.total).toBe(3);
  });

  it("decide submits and advances", async () => {
    const { api, ctl } = controllerWith([pair("p0"), pair("p1")]);
    await ctl.refresh();
    await ctl.decide("keep");
    expect(api.decisions.get("p0")).toBe("keep");
    expect(ctl.current()?.pair_id).toBe("p1");
    expect(ctl.decided).toBe(1);
  });

  it("state after refresh equals server state", async () => {
    const { api, ctl } = controllerWith([pair("p0"), pair("p1"), pair("p2")]);
    await ctl.refresh();
    await ctl.decide("keep");
    await ctl.decide("discard");
    await ctl.refresh();
    const server = await api.queue("main", "A");
    expect(ctl.queueSnapshot().map((p) => p.pair_id)).toEqual(server.pairs.map((p) => p.pair_id));
    expect(ctl.decided).toBe(server.decided);
  });

  it("undo after a repeat decision re-submits the overwritten value", async () => {
    const { api, ctl } = controllerWith([pair("q0")]);
    await ctl.refresh();
    await ctl.decide("keep");
    await ctl.undoLast(); // no previous submission -> pair only re-queued locally
    expect(ctl.current()?.pair_id).toBe("q0");
    await ctl.decide("discard"); // previous submission is now "keep"
    expect(api.decisions.get("q0")).toBe("discard");
    await ctl.undoLast();
    expect(api.decisions.get("q0")).toBe("keep"); // overwritten back on the server
    expect(ctl.current()?.pair_id).toBe("q0");
    expect(ctl.decided).toBe(0);
  });

  it("first-decision undo re-queues the pair without inventing a server state", async () => {
    const { api, ctl } = controllerWith([pair("p0"), pair("p1")]);
    await ctl.refresh();
    await ctl.decide("keep");
    const submissionsBefore = api.submissions.length;
    await ctl.undoLast();
    expect(api.submissions.length).toBe(submissionsBefore); // nothing re-submitted
    expect(ctl.current()?.pair_id).toBe("p0");
    expect(ctl.decided).toBe(0);
  });

  it("failed submissions are retained and flushed, never dropped", async () => {
    const { api, ctl } = controllerWith([pair("p0"), pair("p1")]);
    await ctl.refresh();
    api.failNext = 1;
    await ctl.decide("keep"); // submission fails, retained
    expect(ctl.pendingCount()).toBe(1);
    expect(api.decisions.has("p0")).toBe(false);
    await ctl.decide("discard"); // flushes the retained one first
    expect(ctl.pendingCount()).toBe(0);
    expect(api.decisions.get("p0")).toBe("keep");
    expect(api.decisions.get("p1")).toBe("discard");
    expect(api.submissions.map((s) => s.pairId)).toEqual(["p0", "p1"]); // order preserved
  });

  it("completion is reached only when everything is decided and flushed", async () => {
    const { ctl } = controllerWith([pair("p0")]);
    await ctl.refresh();
    expect(ctl.isComplete()).toBe(false);
    await ctl.decide("keep");
    expect(ctl.isComplete()).toBe(true);
  });
});
