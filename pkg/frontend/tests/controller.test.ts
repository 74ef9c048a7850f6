import { describe, expect, it } from "vitest";

import { SessionApi } from "../src/api.js";
import type {
  FetchLike,
  Phase,
  QueryCardData,
  SessionStatus,
} from "../src/api.js";
import { SessionController } from "../src/controller.js";

/**
 * In-memory stand-in for the session server. It speaks the same five
 * routes over a FetchLike and models just enough: batches of cards, a
 * one-unit charge per first answer, idempotent repeats, 409 on
 * conflicts, and a training phase that lasts a configurable number of
 * queue polls before the next batch appears.
 */
class FakeService {
  phase: Phase = "awaiting-answers";
  spent = 0;
  accepts = 0;
  rejects = 0;
  answered = new Map<number, boolean>();
  calls: string[] = [];
  failNextSubmit = false;
  trainingPollsLeft = 0;
  private batchIndex = 0;

  constructor(
    private readonly batches: QueryCardData[][],
    private readonly budget = 30,
    private readonly pollsPerTraining = 2,
  ) {}

  private pending(): QueryCardData[] {
    const batch = this.batches[this.batchIndex] ?? [];
    return batch.filter((c) => !this.answered.has(c.query_id));
  }

  private status(): SessionStatus {
    return {
      session_id: "fake",
      phase: this.phase,
      budget: this.budget,
      spent: this.spent,
      remaining: this.budget - this.spent,
      accepts: this.accepts,
      rejects: this.rejects,
      pending_count: this.pending().length,
      accuracy: 0.5,
      total_entropy_bits: 100 - this.spent,
    };
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  fetch: FetchLike = async (input, init) => {
    this.calls.push(`${init?.method ?? "GET"} ${input}`);
    if (input.endsWith("/sessions") && init?.method === "POST") {
      return this.json({ ...this.status(), pending: this.pending() });
    }
    if (input.endsWith("/queries")) {
      if (this.phase === "training") {
        this.trainingPollsLeft -= 1;
        if (this.trainingPollsLeft <= 0) {
          this.phase = "awaiting-answers";
          this.batchIndex += 1;
        }
      }
      return this.json({
        session_id: "fake",
        phase: this.phase,
        queries: this.phase === "awaiting-answers" ? this.pending() : [],
      });
    }
    if (input.includes("/answer")) {
      if (this.failNextSubmit) {
        this.failNextSubmit = false;
        throw new TypeError("fetch failed");
      }
      const qid = Number(input.split("/queries/")[1]?.split("/")[0]);
      const { correct } = JSON.parse(String(init?.body)) as {
        correct: boolean;
      };
      const prior = this.answered.get(qid);
      if (prior !== undefined) {
        if (prior !== correct) {
          return this.json(
            { detail: `query ${qid} already answered ${prior}` },
            409,
          );
        }
        return this.json({ ...this.status(), duplicate: true });
      }
      if (!this.pending().some((c) => c.query_id === qid)) {
        return this.json({ detail: `unknown query ${qid}` }, 404);
      }
      this.answered.set(qid, correct);
      this.spent += 1;
      if (correct) this.accepts += 1;
      else this.rejects += 1;
      if (this.pending().length === 0 && this.batchIndex + 1 < this.batches.length) {
        this.phase = "training";
        this.trainingPollsLeft = this.pollsPerTraining;
      } else if (this.pending().length === 0) {
        this.phase = "done";
      }
      return this.json(this.status());
    }
    if (input.endsWith("/metrics")) {
      return this.json({
        ...this.status(),
        accuracy_curve: [
          {
            spent_budget: this.spent,
            test_accuracy: 0.5,
            total_entropy_bits: 100 - this.spent,
          },
        ],
      });
    }
    return this.json({ detail: "no such route" }, 404);
  };
}

function card(queryId: number): QueryCardData {
  return {
    query_id: queryId,
    node: queryId + 1000,
    proposed_class: 0,
    proposed_class_name: "class-0",
    confidence: 0.7,
    rejected_classes: [],
    rejected_class_names: [],
    degree: 3,
    neighbors: { count: 3, sample: [5, 6, 7], annotated: 0 },
  };
}

function harness(service: FakeService) {
  const banners: Array<string | null> = [];
  const sleeps: number[] = [];
  const api = new SessionApi("http://fake", service.fetch);
  const controller = new SessionController(
    api,
    (state) => banners.push(state.banner),
    async (ms) => {
      sleeps.push(ms);
    },
  );
  return { api, controller, banners, sleeps };
}

describe("SessionController", () => {
  it("loads the first batch and metrics on start", async () => {
    const service = new FakeService([[card(1), card(2)]]);
    const { controller } = harness(service);
    await controller.start({ dataset: "demo" });
    expect(controller.state.cards.size).toBe(2);
    expect(controller.state.phase).toBe("awaiting-answers");
    expect(controller.state.series).toHaveLength(1);
  });

  it("charges one unit per answer and locks the card", async () => {
    const service = new FakeService([[card(1), card(2)]]);
    const { controller } = harness(service);
    await controller.start({ dataset: "demo" });
    const status = await controller.submitAndRefresh(1, true);
    expect(status?.spent).toBe(1);
    expect(controller.state.status?.spent).toBe(1);
    expect(controller.state.status?.accepts).toBe(1);
    expect(controller.state.cards.get(1)?.phase).toBe("answered");
  });

  it("swallows a conflicting second answer locally, no request sent", async () => {
    const service = new FakeService([[card(1), card(2)]]);
    const { controller } = harness(service);
    await controller.start({ dataset: "demo" });
    await controller.submitAndRefresh(1, true);
    const before = service.calls.filter((c) => c.includes("/answer")).length;
    const result = await controller.submitAndRefresh(1, false);
    const after = service.calls.filter((c) => c.includes("/answer")).length;
    expect(result).toBeNull();
    expect(after).toBe(before);
    expect(controller.state.banner).toMatch(/already answered/);
    expect(service.spent).toBe(1);
  });

  it("lets an identical repeat through and the ledger stays put", async () => {
    const service = new FakeService([[card(1), card(2)]]);
    const { controller } = harness(service);
    await controller.start({ dataset: "demo" });
    await controller.submitAndRefresh(1, true);
    const repeat = await controller.submitAndRefresh(1, true);
    expect(repeat?.duplicate).toBe(true);
    expect(repeat?.spent).toBe(1);
    expect(service.spent).toBe(1);
    expect(controller.state.cards.get(1)?.phase).toBe("answered");
  });

  it("marks the card stale and resyncs on a server-side conflict", async () => {
    const service = new FakeService([[card(1), card(2)]]);
    const { controller, banners } = harness(service);
    await controller.start({ dataset: "demo" });
    // Another client answered card 2 behind our back.
    service.answered.set(2, true);
    service.spent += 1;
    const result = await controller.submitAndRefresh(2, false);
    expect(result).toBeNull();
    expect(banners).toContain("query 2 already answered true");
    expect(controller.state.cards.has(2)).toBe(false);
    expect(controller.state.status?.spent).toBe(1);
  });

  it("reopens the card and raises the retry banner when the network dies", async () => {
    const service = new FakeService([[card(1), card(2)]]);
    const { controller } = harness(service);
    await controller.start({ dataset: "demo" });
    service.failNextSubmit = true;
    await expect(controller.submitAndRefresh(1, true)).rejects.toThrow(
      "fetch failed",
    );
    expect(controller.state.cards.get(1)?.phase).toBe("open");
    expect(controller.state.banner).toMatch(/retry/);
    expect(service.spent).toBe(0);
    const retried = await controller.submitAndRefresh(1, true);
    expect(retried?.spent).toBe(1);
  });

  it("polls at one-second cadence through training into the next batch", async () => {
    const service = new FakeService(
      [[card(1)], [card(2), card(3)]],
      30,
      3,
    );
    const { controller, sleeps } = harness(service);
    await controller.start({ dataset: "demo" });
    await controller.submitAndRefresh(1, true);
    expect(controller.state.phase).toBe("awaiting-answers");
    expect([...controller.state.cards.keys()].sort()).toEqual([2, 3]);
    expect(sleeps).toHaveLength(3);
    expect(sleeps.every((ms) => ms === 1000)).toBe(true);
  });

  it("resyncs to an empty queue once the session is done", async () => {
    const service = new FakeService([[card(1)]]);
    const { controller } = harness(service);
    await controller.start({ dataset: "demo" });
    await controller.submitAndRefresh(1, false);
    expect(controller.state.phase).toBe("done");
    expect(controller.state.cards.size).toBe(0);
    expect(controller.state.status?.rejects).toBe(1);
  });
});
