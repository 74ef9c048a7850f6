import { beforeEach, describe, expect, it } from "vitest";

import type { QueryCardData, SessionStatus } from "../src/api.js";
import {
  renderBanner,
  renderBudgetBar,
  renderQueue,
  renderTallies,
  sparklinePath,
} from "../src/render.js";
import { ConsoleState } from "../src/state.js";

function card(
  queryId: number,
  overrides: Partial<QueryCardData> = {},
): QueryCardData {
  return {
    query_id: queryId,
    node: queryId + 10,
    proposed_class: 2,
    proposed_class_name: "theory",
    confidence: 0.4375,
    rejected_classes: [],
    rejected_class_names: [],
    degree: 6,
    neighbors: { count: 6, sample: [1, 2, 3], annotated: 2 },
    ...overrides,
  };
}

function statusFixture(overrides: Partial<SessionStatus> = {}): SessionStatus {
  return {
    session_id: "s1",
    phase: "awaiting-answers",
    budget: 140,
    spent: 17,
    remaining: 123,
    accepts: 12,
    rejects: 5,
    pending_count: 3,
    accuracy: 0.8125,
    total_entropy_bits: 321.5,
    ...overrides,
  };
}

let host: HTMLElement;

beforeEach(() => {
  host = document.createElement("div");
  document.body.replaceChildren(host);
});

describe("renderQueue", () => {
  it("draws one card per pending query", () => {
    const state = new ConsoleState();
    state.phase = "awaiting-answers";
    state.applyQueue([card(1), card(2), card(3), card(4), card(5)]);
    renderQueue(host, state, () => {});
    expect(host.querySelectorAll("article.card")).toHaveLength(5);
  });

  it("enables yes/no exactly while a card is open", () => {
    const state = new ConsoleState();
    state.phase = "awaiting-answers";
    state.applyQueue([card(1), card(2)]);
    state.markAnswered(2, true);
    renderQueue(host, state, () => {});
    const open = host.querySelector('[data-query-id="1"]')!;
    const done = host.querySelector('[data-query-id="2"]')!;
    for (const button of open.querySelectorAll("button")) {
      expect((button as HTMLButtonElement).disabled).toBe(false);
    }
    for (const button of done.querySelectorAll("button")) {
      expect((button as HTMLButtonElement).disabled).toBe(true);
    }
    expect(done.textContent).toContain("answered yes");
  });

  it("routes clicks to the answer handler with the card id", () => {
    const state = new ConsoleState();
    state.phase = "awaiting-answers";
    state.applyQueue([card(9)]);
    const clicks: Array<[number, boolean]> = [];
    renderQueue(host, state, (qid, answer) => clicks.push([qid, answer]));
    (host.querySelector(".answer-no") as HTMLButtonElement).click();
    expect(clicks).toEqual([[9, false]]);
  });

  it("prints the served confidence verbatim", () => {
    const state = new ConsoleState();
    state.phase = "awaiting-answers";
    state.applyQueue([card(1, { confidence: 0.4375 })]);
    renderQueue(host, state, () => {});
    expect(host.querySelector(".card-confidence")!.textContent).toBe(
      "model confidence 43.8%",
    );
  });

  it("shows the rejected-class history as chips", () => {
    const state = new ConsoleState();
    state.phase = "awaiting-answers";
    state.applyQueue([
      card(1, {
        rejected_classes: [0, 4],
        rejected_class_names: ["genetic", "probabilistic"],
      }),
      card(2),
    ]);
    renderQueue(host, state, () => {});
    const chips = [...host.querySelectorAll(".rejected-chip")].map(
      (chip) => chip.textContent,
    );
    expect(chips).toEqual(["genetic", "probabilistic"]);
    expect(
      host.querySelector('[data-query-id="2"] .card-rejections'),
    ).toBeNull();
  });

  it("marks a stale card as answered elsewhere", () => {
    const state = new ConsoleState();
    state.phase = "awaiting-answers";
    state.applyQueue([card(1)]);
    state.markStale(1);
    renderQueue(host, state, () => {});
    expect(host.querySelector(".card-verdict")!.textContent).toBe(
      "answered elsewhere",
    );
  });

  it("replaces the queue with a completion note when done", () => {
    const state = new ConsoleState();
    state.phase = "done";
    renderQueue(host, state, () => {});
    expect(host.textContent).toContain("session complete");
  });
});

describe("scoreboard regions", () => {
  it("prints budget spent/total as served", () => {
    const state = new ConsoleState();
    state.applyStatus(statusFixture());
    renderBudgetBar(host, state);
    expect(host.textContent).toContain("17 / 140 units spent");
    const fill = host.querySelector(".budget-fill") as HTMLElement;
    expect(fill.style.width).toBe("12.14%");
  });

  it("prints tallies straight from the status payload", () => {
    const state = new ConsoleState();
    state.applyStatus(statusFixture());
    renderTallies(host, state);
    expect(host.textContent).toContain("yes 12");
    expect(host.textContent).toContain("no 5");
    expect(host.textContent).toContain("accuracy 81.25%");
    expect(host.textContent).toContain("entropy 321.5 bits");
  });

  it("shows n/a while accuracy has not been measured", () => {
    const state = new ConsoleState();
    state.applyStatus(statusFixture({ accuracy: null }));
    renderTallies(host, state);
    expect(host.textContent).toContain("accuracy n/a");
  });

  it("hides the banner unless a message is set", () => {
    const state = new ConsoleState();
    renderBanner(host, state);
    expect(host.style.display).toBe("none");
    state.banner = "server unreachable; answer not sent, retry";
    renderBanner(host, state);
    expect(host.style.display).toBe("block");
    expect(host.textContent).toContain("retry");
  });
});

describe("sparklinePath", () => {
  const points = [
    { spent_budget: 0, test_accuracy: 0.2, total_entropy_bits: 400 },
    { spent_budget: 10, test_accuracy: 0.5, total_entropy_bits: 300 },
    { spent_budget: 20, test_accuracy: 0.8, total_entropy_bits: 250 },
  ];

  it("spans the x axis by spent budget and keeps point order", () => {
    const path = sparklinePath(points, (p) => p.test_accuracy, 120, 28);
    const pairs = path.split(" ").map((pair) => pair.split(",").map(Number));
    expect(pairs).toHaveLength(3);
    expect(pairs[0]![0]).toBeCloseTo(1, 5);
    expect(pairs[2]![0]).toBeCloseTo(119, 5);
    // Higher accuracy sits higher on screen (smaller y).
    expect(pairs[2]![1]!).toBeLessThan(pairs[0]![1]!);
  });

  it("skips null samples instead of inventing values", () => {
    const withNull = [
      { spent_budget: 0, test_accuracy: null, total_entropy_bits: 400 },
      ...points.slice(1),
    ];
    const path = sparklinePath(withNull, (p) => p.test_accuracy, 120, 28);
    expect(path.split(" ")).toHaveLength(2);
  });

  it("returns an empty path for an empty series", () => {
    expect(sparklinePath([], (p) => p.test_accuracy, 120, 28)).toBe("");
  });
});
