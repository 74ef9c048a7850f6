/**
 * Session orchestration: submit answers, keep the view in sync, and
 * poll while the server trains.
 *
 * The flow per card is optimistic: the card locks the moment the user
 * clicks, the answer goes out, and the server's status response is
 * applied verbatim. A 409 means someone else answered differently
 * first; the card is marked stale and the whole view resynced. A
 * network failure reopens the card and raises the retry banner with
 * no other state change.
 */

import { ApiError, SessionApi } from "./api.js";
import type { CreateSessionPayload, SessionStatus } from "./api.js";
import { ConsoleState } from "./state.js";

export const TRAINING_POLL_MS = 1000;

export class SessionController {
  readonly state = new ConsoleState();
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly api: SessionApi,
    private readonly onChange: (state: ConsoleState) => void = () => {},
    private readonly sleeper: (ms: number) => Promise<void> = (ms) =>
      new Promise((resolve) => setTimeout(resolve, ms)),
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  async start(payload: CreateSessionPayload): Promise<void> {
    const created = await this.api.createSession(payload);
    this.state.applyStatus(created);
    this.state.applyQueue(created.pending);
    await this.refreshMetrics();
    this.emit();
  }

  async attach(sessionId: string): Promise<void> {
    this.state.sessionId = sessionId;
    await this.resync();
  }

  /** Pull queries + metrics and reconcile; used after any surprise. */
  async resync(): Promise<void> {
    const queue = await this.api.getQueries(this.state.sessionId);
    this.state.phase = queue.phase;
    this.state.applyQueue(queue.queries);
    await this.refreshMetrics();
    this.state.banner = null;
    this.emit();
  }

  private async refreshMetrics(): Promise<void> {
    this.state.applyMetrics(await this.api.getMetrics(this.state.sessionId));
  }

  /**
   * Answer one card and bring the view up to date. Returns the status
   * the server responded with, or null when the click was swallowed
   * by the local double-submission gate.
   */
  async submitAndRefresh(
    queryId: number,
    answer: boolean,
  ): Promise<SessionStatus | null> {
    const gate = this.state.gateSubmit(queryId, answer);
    if (gate.kind === "blocked") {
      this.state.banner = gate.reason;
      this.emit();
      return null;
    }
    if (gate.kind === "send") this.state.markInFlight(queryId, answer);
    this.emit();
    let status: SessionStatus;
    try {
      status = await this.api.submitAnswer(
        this.state.sessionId,
        queryId,
        answer,
      );
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.state.markStale(queryId);
        this.state.banner = error.detail;
        this.emit();
        await this.resync();
        return null;
      }
      this.state.markOpen(queryId);
      this.state.banner = "server unreachable; answer not sent, retry";
      this.emit();
      throw error;
    }
    this.state.markAnswered(queryId, answer);
    this.state.applyStatus(status);
    this.state.banner = null;
    this.emit();
    if (status.phase === "training") {
      await this.pollWhileTraining();
    } else if (status.phase !== "awaiting-answers" || status.pending_count === 0) {
      await this.resync();
    } else {
      await this.refreshMetrics();
      this.emit();
    }
    return status;
  }

  /** 1-second polling loop that runs only during the training phase. */
  async pollWhileTraining(): Promise<void> {
    while (this.state.phase === "training") {
      await this.sleeper(TRAINING_POLL_MS);
      const queue = await this.api.getQueries(this.state.sessionId);
      this.state.phase = queue.phase;
      if (queue.phase !== "training") {
        this.state.applyQueue(queue.queries);
        await this.refreshMetrics();
      }
      this.emit();
    }
  }

  stop(): void {
    if (this.pollTimer !== null) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
  }
}
