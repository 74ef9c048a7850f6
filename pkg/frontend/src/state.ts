/**
 * Client-side session view model.
 *
 * Holds exactly what the server said, plus per-card bookkeeping for
 * the one thing the client must enforce itself: a card is answered at
 * most once, and never with two different values from this client.
 * Series data comes from the metrics endpoint untouched; the view
 * layer reads it as-is, so every rendered number traces back to an
 * API field.
 */

import type {
  CurvePoint,
  MetricsResponse,
  Phase,
  QueryCardData,
  SessionStatus,
} from "./api.js";

export type CardPhase = "open" | "in-flight" | "answered" | "stale";

export interface CardState {
  data: QueryCardData;
  phase: CardPhase;
  /** The answer this client sent, once one is in flight or accepted. */
  answer?: boolean;
}

export type SubmitGate =
  | { kind: "send" }
  | { kind: "repeat"; answer: boolean }
  | { kind: "blocked"; reason: string };

export class ConsoleState {
  sessionId = "";
  status: SessionStatus | null = null;
  phase: Phase = "selecting";
  cards = new Map<number, CardState>();
  series: CurvePoint[] = [];
  /** Answers this client committed, by query id; survives card refreshes. */
  private readonly committed = new Map<number, boolean>();
  banner: string | null = null;

  applyStatus(status: SessionStatus): void {
    this.status = status;
    this.phase = status.phase;
    this.sessionId = status.session_id;
  }

  applyMetrics(metrics: MetricsResponse): void {
    this.applyStatus(metrics);
    this.series = metrics.accuracy_curve;
  }

  /**
   * Replace the card list with a fresh batch from the server,
   * preserving answered/in-flight marks for ids that persist.
   */
  applyQueue(queries: QueryCardData[]): void {
    const next = new Map<number, CardState>();
    for (const data of queries) {
      const old = this.cards.get(data.query_id);
      if (old && old.phase !== "open") {
        next.set(data.query_id, { ...old, data });
      } else if (this.committed.has(data.query_id)) {
        next.set(data.query_id, {
          data,
          phase: "answered",
          answer: this.committed.get(data.query_id),
        });
      } else {
        next.set(data.query_id, { data, phase: "open" });
      }
    }
    this.cards = next;
  }

  /**
   * Gate a click before any network call. Answering an open card sends;
   * repeating the identical answer is allowed through (the server
   * treats it as a no-op); a different value on an answered card is
   * refused locally, so this client can never submit two conflicting
   * values for one card.
   */
  gateSubmit(queryId: number, answer: boolean): SubmitGate {
    const prior = this.committed.get(queryId);
    if (prior !== undefined) {
      if (prior !== answer) {
        return {
          kind: "blocked",
          reason: `card ${queryId} already answered ${prior ? "yes" : "no"}`,
        };
      }
      return { kind: "repeat", answer };
    }
    const card = this.cards.get(queryId);
    if (!card) return { kind: "blocked", reason: `unknown card ${queryId}` };
    if (card.phase === "in-flight") {
      return { kind: "blocked", reason: "answer already in flight" };
    }
    if (card.phase === "stale") {
      return { kind: "blocked", reason: "card is stale; resyncing" };
    }
    return { kind: "send" };
  }

  markInFlight(queryId: number, answer: boolean): void {
    const card = this.cards.get(queryId);
    if (card) {
      card.phase = "in-flight";
      card.answer = answer;
    }
  }

  markAnswered(queryId: number, answer: boolean): void {
    this.committed.set(queryId, answer);
    const card = this.cards.get(queryId);
    if (card) {
      card.phase = "answered";
      card.answer = answer;
    }
  }

  /** A conflict response: someone else answered this card first. */
  markStale(queryId: number): void {
    const card = this.cards.get(queryId);
    if (card) card.phase = "stale";
  }

  /** A failed send: roll the card back so the user can retry. */
  markOpen(queryId: number): void {
    const card = this.cards.get(queryId);
    if (card && card.phase === "in-flight") {
      card.phase = "open";
      card.answer = undefined;
    }
  }

  answeredCount(): number {
    let n = 0;
    for (const card of this.cards.values()) {
      if (card.phase === "answered") n += 1;
    }
    return n;
  }
}
