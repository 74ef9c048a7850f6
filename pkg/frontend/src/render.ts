/**
 * DOM rendering for the annotation console.
 *
 * Pure view layer: every function takes the state object and redraws
 * a region of the page from it. Numbers are printed exactly as the
 * API served them (confidence, budget, tallies, curves); the only
 * client-side arithmetic is pixel placement for the sparklines.
 */

import type { CurvePoint } from "./api.js";
import type { CardState, ConsoleState } from "./state.js";

export interface AnswerHandler {
  (queryId: number, answer: boolean): void;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderPhaseChip(target: HTMLElement, state: ConsoleState): void {
  target.textContent = state.phase;
  target.className = `phase-chip phase-${state.phase}`;
}

export function renderBudgetBar(target: HTMLElement, state: ConsoleState): void {
  target.replaceChildren();
  const status = state.status;
  if (!status) return;
  const fraction = status.budget > 0 ? status.spent / status.budget : 0;
  const track = el("div", "budget-track");
  const fill = el("div", "budget-fill");
  fill.style.width = `${Math.min(100, 100 * fraction).toFixed(2)}%`;
  track.appendChild(fill);
  target.appendChild(track);
  target.appendChild(
    el(
      "span",
      "budget-text",
      `${status.spent} / ${status.budget} units spent`,
    ),
  );
}

export function renderTallies(target: HTMLElement, state: ConsoleState): void {
  target.replaceChildren();
  const status = state.status;
  if (!status) return;
  target.appendChild(el("span", "tally tally-yes", `yes ${status.accepts}`));
  target.appendChild(el("span", "tally tally-no", `no ${status.rejects}`));
  const accuracy =
    status.accuracy === null
      ? "n/a"
      : `${(100 * status.accuracy).toFixed(2)}%`;
  target.appendChild(el("span", "tally tally-acc", `accuracy ${accuracy}`));
  target.appendChild(
    el(
      "span",
      "tally tally-ent",
      `entropy ${status.total_entropy_bits.toFixed(1)} bits`,
    ),
  );
}

/** Polyline over (spent budget, value) pairs; nulls are skipped. */
export function sparklinePath(
  points: CurvePoint[],
  pick: (p: CurvePoint) => number | null,
  width: number,
  height: number,
): string {
  const usable = points
    .map((p) => ({ x: p.spent_budget, y: pick(p) }))
    .filter((p): p is { x: number; y: number } => p.y !== null);
  if (usable.length === 0) return "";
  const xs = usable.map((p) => p.x);
  const ys = usable.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xSpan = Math.max(...xs) - xMin || 1;
  const yMin = Math.min(...ys);
  const ySpan = Math.max(...ys) - yMin || 1;
  return usable
    .map((p) => {
      const px = ((p.x - xMin) / xSpan) * (width - 2) + 1;
      const py = height - 1 - ((p.y - yMin) / ySpan) * (height - 2);
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(" ");
}

function sparklineSvg(
  points: CurvePoint[],
  pick: (p: CurvePoint) => number | null,
  label: string,
): SVGSVGElement {
  const ns = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("viewBox", "0 0 120 28");
  svg.setAttribute("class", "sparkline");
  svg.setAttribute("aria-label", label);
  const line = document.createElementNS(ns, "polyline");
  line.setAttribute("points", sparklinePath(points, pick, 120, 28));
  line.setAttribute("fill", "none");
  svg.appendChild(line);
  return svg;
}

export function renderSparklines(target: HTMLElement, state: ConsoleState): void {
  target.replaceChildren();
  const accuracy = el("div", "spark-box");
  accuracy.appendChild(el("span", "spark-label", "test accuracy"));
  accuracy.appendChild(
    sparklineSvg(state.series, (p) => p.test_accuracy, "accuracy vs budget"),
  );
  const entropy = el("div", "spark-box");
  entropy.appendChild(el("span", "spark-label", "total entropy"));
  entropy.appendChild(
    sparklineSvg(
      state.series,
      (p) => p.total_entropy_bits,
      "entropy vs budget",
    ),
  );
  target.appendChild(accuracy);
  target.appendChild(entropy);
}

export function renderBanner(target: HTMLElement, state: ConsoleState): void {
  target.textContent = state.banner ?? "";
  target.style.display = state.banner ? "block" : "none";
}

function cardNode(card: CardState, onAnswer: AnswerHandler): HTMLElement {
  const data = card.data;
  const root = el("article", `card card-${card.phase}`);
  root.dataset.queryId = String(data.query_id);

  const question = el("h3", "card-question");
  question.textContent =
    `Does node ${data.node} belong to ` +
    `“${data.proposed_class_name}”?`;
  root.appendChild(question);

  const meta = el("div", "card-meta");
  meta.appendChild(
    el(
      "span",
      "card-confidence",
      `model confidence ${(100 * data.confidence).toFixed(1)}%`,
    ),
  );
  meta.appendChild(el("span", "card-degree", `degree ${data.degree}`));
  meta.appendChild(
    el(
      "span",
      "card-neighbors",
      `${data.neighbors.annotated} of ${data.neighbors.count} neighbors annotated`,
    ),
  );
  root.appendChild(meta);

  if (data.rejected_class_names.length > 0) {
    const history = el("div", "card-rejections");
    history.appendChild(el("span", "rejections-label", "already ruled out:"));
    for (const name of data.rejected_class_names) {
      history.appendChild(el("span", "rejected-chip", name));
    }
    root.appendChild(history);
  }

  const controls = el("div", "card-controls");
  const yes = el("button", "answer answer-yes", "yes") as HTMLButtonElement;
  const no = el("button", "answer answer-no", "no") as HTMLButtonElement;
  const locked = card.phase !== "open";
  yes.disabled = locked;
  no.disabled = locked;
  yes.addEventListener("click", () => onAnswer(data.query_id, true));
  no.addEventListener("click", () => onAnswer(data.query_id, false));
  controls.appendChild(yes);
  controls.appendChild(no);
  if (card.phase === "answered") {
    controls.appendChild(
      el("span", "card-verdict", card.answer ? "answered yes" : "answered no"),
    );
  } else if (card.phase === "stale") {
    controls.appendChild(
      el("span", "card-verdict stale", "answered elsewhere"),
    );
  }
  root.appendChild(controls);
  return root;
}

export function renderQueue(
  target: HTMLElement,
  state: ConsoleState,
  onAnswer: AnswerHandler,
): void {
  target.replaceChildren();
  if (state.phase === "done") {
    target.appendChild(
      el("p", "queue-empty", "budget exhausted; session complete"),
    );
    return;
  }
  if (state.cards.size === 0) {
    target.appendChild(
      el("p", "queue-empty", `no cards right now (phase: ${state.phase})`),
    );
    return;
  }
  for (const card of state.cards.values()) {
    target.appendChild(cardNode(card, onAnswer));
  }
}

export interface ConsoleRegions {
  phase: HTMLElement;
  budget: HTMLElement;
  tallies: HTMLElement;
  sparklines: HTMLElement;
  banner: HTMLElement;
  queue: HTMLElement;
}

export function renderAll(
  regions: ConsoleRegions,
  state: ConsoleState,
  onAnswer: AnswerHandler,
): void {
  renderPhaseChip(regions.phase, state);
  renderBudgetBar(regions.budget, state);
  renderTallies(regions.tallies, state);
  renderSparklines(regions.sparklines, state);
  renderBanner(regions.banner, state);
  renderQueue(regions.queue, state, onAnswer);
}
